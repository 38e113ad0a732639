from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cotref.errors import StageError
from cotref.gateway import Gateway, MockBackend
from cotref.parsing import rules_parse
from cotref.records import SLOT_ANCHOR, SLOT_TARGET, CotAnswer, tokenize
from cotref.rewrite import (
    anchor_tags,
    audit_checks,
    parse_gateway_answer,
    render_template,
    rewrite,
    slot_order,
    validate_text,
)

from conftest import lamp_vase_table_book_parse

CORPUS_TEXTS = [
    "the cat",
    "boy on girl with red skirt",
    "a lamp on the table beside the sofa",
    "dog under the bench near the fence by the tree",
    "bird on the roof of the house near the river",
]


def test_lamp_vase_table_book_slot_order():
    parsed = lamp_vase_table_book_parse()
    order = slot_order(parsed)
    named = [(parsed.nouns[i].text, kind) for i, kind in order]
    assert named == [("table", SLOT_ANCHOR), ("lamp", SLOT_ANCHOR),
                     ("vase", SLOT_ANCHOR), ("book", SLOT_TARGET)]
    cot = render_template(parsed)
    assert validate_text(parsed, cot).passed


def test_deleted_slot_fails_coverage():
    parsed = lamp_vase_table_book_parse()
    cot = render_template(parsed)
    mutated = CotAnswer(
        answer_text=cot.answer_text.replace("[LOC]", "", 1).strip(),
        slots=cot.slots[1:],  # drop the table anchor (noun 2)
    )
    verdict = validate_text(parsed, mutated)
    assert not verdict.passed
    assert "coverage: noun 2 missing" in verdict.reasons


def test_reordered_slot_fails_order():
    parsed = lamp_vase_table_book_parse()
    cot = render_template(parsed)
    # move the target slot before the last anchor
    slots = cot.slots[:-2] + [cot.slots[-1], cot.slots[-2]]
    mutated = CotAnswer(answer_text=cot.answer_text, slots=slots)
    verdict = validate_text(parsed, mutated)
    assert not verdict.passed
    assert "order: anchor after target" in verdict.reasons


def test_duplicated_slot_fails_coverage():
    parsed = lamp_vase_table_book_parse()
    cot = render_template(parsed)
    mutated = CotAnswer(answer_text=cot.answer_text + " [LOC]",
                        slots=cot.slots[:1] + cot.slots)
    verdict = validate_text(parsed, mutated)
    assert not verdict.passed
    assert "coverage: noun 2 duplicated" in verdict.reasons


def test_anchor_level_increase_detected():
    parsed = lamp_vase_table_book_parse()
    # lamp (1) before table (2): increasing hop levels
    slots = [(0, SLOT_ANCHOR), (2, SLOT_ANCHOR), (1, SLOT_ANCHOR),
             (3, SLOT_TARGET)]
    cot = CotAnswer(answer_text="[LOC] [LOC] [LOC] [LOC]", slots=slots)
    verdict = validate_text(parsed, cot)
    assert not verdict.passed
    assert "order: anchor hop levels increase at slot 1" in verdict.reasons


def test_missing_target_slot():
    parsed = lamp_vase_table_book_parse()
    slots = [(i, SLOT_ANCHOR) for i in (2, 0, 1, 3)]
    verdict = validate_text(parsed, CotAnswer("[LOC] [LOC] [LOC] [LOC]", slots))
    assert "order: no target slot" in verdict.reasons


def test_single_noun_template():
    parsed = rules_parse(tokenize("the cat"))
    cot = render_template(parsed)
    assert cot.answer_text == "cat is [LOC]"
    assert cot.slots == [(0, SLOT_TARGET)]
    assert validate_text(parsed, cot).passed


def test_template_validates_for_corpus_parses():
    for text in CORPUS_TEXTS:
        parsed = rules_parse(tokenize(text))
        cot = render_template(parsed)
        assert validate_text(parsed, cot).passed, text
        assert cot.violations(parsed) == []


@given(st.sampled_from(CORPUS_TEXTS), st.data())
def test_random_slot_mutations_flip_the_verdict(text, data):
    parsed = rules_parse(tokenize(text))
    cot = render_template(parsed)
    kind = data.draw(st.sampled_from(["delete", "duplicate", "swap"]))
    slots = list(cot.slots)
    if kind == "delete":
        slots.pop(data.draw(st.integers(0, len(slots) - 1)))
    elif kind == "duplicate":
        slots.append(slots[data.draw(st.integers(0, len(slots) - 1))])
    else:
        if len(slots) < 2:
            return
        i = data.draw(st.integers(0, len(slots) - 2))
        if parsed.nouns[slots[i][0]].hop_level == parsed.nouns[slots[i + 1][0]].hop_level:
            return  # equal-level anchor swaps are order-preserving
        slots[i], slots[i + 1] = slots[i + 1], slots[i]
    mutated = CotAnswer(answer_text=" ".join("[LOC]" for _ in slots), slots=slots)
    assert not validate_text(parsed, mutated).passed


def test_anchor_tags_appearance_order():
    parsed = lamp_vase_table_book_parse()
    assert anchor_tags(parsed) == {"n1": 0, "n2": 1, "n3": 2, "main": 3}


def test_parse_gateway_answer_seg_grammar():
    parsed = lamp_vase_table_book_parse()
    answer = ("First find <seg n3>the table</seg>, then <seg n1>the lamp</seg> "
              "and <seg n2>the vase</seg>, so <seg main>the book</seg>.")
    cot = parse_gateway_answer({"answer": answer}, parsed)
    assert cot.slots == [(2, SLOT_ANCHOR), (0, SLOT_ANCHOR), (1, SLOT_ANCHOR),
                         (3, SLOT_TARGET)]
    assert cot.answer_text.count("[LOC]") == 4
    assert "<seg" not in cot.answer_text


def test_parse_gateway_answer_unknown_tag():
    parsed = lamp_vase_table_book_parse()
    with pytest.raises(StageError):
        parse_gateway_answer({"answer": "<seg n9>x</seg>"}, parsed)


def test_parse_gateway_answer_explicit_slots():
    parsed = lamp_vase_table_book_parse()
    cot = parse_gateway_answer(
        {"answer": "[LOC] [LOC] [LOC] [LOC]",
         "slots": ["n3", "n1", "n2", "main"]}, parsed)
    assert [i for i, _ in cot.slots] == [2, 0, 1, 3]


def test_gateway_rewrite_end_to_end_on_mock():
    for text in CORPUS_TEXTS:
        parsed = rules_parse(tokenize(text), expression_id=text)
        gw = Gateway(backend=MockBackend(seed=5))
        cot = rewrite(parsed, backend="gateway", gateway=gw)
        assert validate_text(parsed, cot).passed, text


def test_audit_checks_agreement_and_disagreement():
    text = "boy on girl with red skirt"
    parsed = rules_parse(tokenize(text))
    cot = render_template(parsed)
    assert audit_checks(parsed, cot, text) == {
        "anchor_coverage": True, "hop_correctness": True}

    wrong_level = rules_parse(tokenize(text))
    wrong_level.nouns[1].hop_level = 2
    wrong_level.nouns[2].hop_level = 1
    checks = audit_checks(wrong_level, render_template(wrong_level), text)
    assert checks["hop_correctness"] is False

    missing = rules_parse(tokenize(text))
    missing.nouns.pop()
    checks = audit_checks(missing, render_template(missing), text)
    assert checks["anchor_coverage"] is False
