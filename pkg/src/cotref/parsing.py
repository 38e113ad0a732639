"""Noun extraction with dependency hop levels (pipeline stage A.1).

Two backends: a model gateway (live or mock) and a deterministic rule-based
fallback driven by closed lexicons shipped with the package. The fallback is a
dev/test backend, not a claim of linguistic fidelity.

Hop levels use the internal convention target = 0; `l_max` reports the
human-facing value (internal max + 1).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Any, Optional

from .errors import StageError
from .records import Expression, ParsedExpression, ParsedNoun

STAGE_A1 = "A1"

BACKEND_RULES = "rules"
BACKEND_GATEWAY = "gateway"

_CONJUNCTIONS = {"and", "or", ","}


def _load_lexicon(name: str) -> tuple[str, ...]:
    text = resources.files("cotref.lexicons").joinpath(f"{name}.txt").read_text("utf-8")
    entries = []
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            entries.append(line)
    return tuple(entries)


@lru_cache(maxsize=None)
def default_lexicons() -> "Lexicons":
    return Lexicons(
        stopwords=frozenset(_load_lexicon("stopwords")),
        spatial=frozenset(_load_lexicon("spatial")),
        adjectives=frozenset(_load_lexicon("adjectives")),
        relations=tuple(sorted(_load_lexicon("relations"), key=lambda r: -len(r.split()))),
    )


@dataclass(frozen=True)
class Lexicons:
    stopwords: frozenset[str]
    spatial: frozenset[str]
    adjectives: frozenset[str]
    relations: tuple[str, ...]  # longest-first for greedy matching

    def relation_words(self) -> frozenset[str]:
        return frozenset(w for r in self.relations for w in r.split())

    def non_noun_words(self) -> frozenset[str]:
        return self.stopwords | self.spatial | self.adjectives | self.relation_words()


@dataclass
class ParseRequest:
    expression: Expression
    backend: str = BACKEND_RULES


def _match_relation(tokens_lower: list[str], i: int, lex: Lexicons) -> Optional[int]:
    """Return the length of the relation starting at token i, if any."""
    for rel in lex.relations:
        words = rel.split()
        if tokens_lower[i:i + len(words)] == words:
            return len(words)
    return None


def _segment(tokens: list[str], lex: Lexicons) -> tuple[list[tuple[int, int]], list[list[str]]]:
    """Split tokens into noun spans (adjacent noun tokens merged) and, for each
    gap between consecutive spans, the classification tags of its tokens."""
    tokens_lower = [t.lower() for t in tokens]
    non_noun = lex.non_noun_words()
    tags: list[str] = []  # per token: noun | relation | conjunction | other
    i = 0
    while i < len(tokens):
        rel_len = _match_relation(tokens_lower, i, lex)
        if rel_len is not None:
            tags.extend(["relation"] * rel_len)
            i += rel_len
            continue
        t = tokens_lower[i]
        if t in _CONJUNCTIONS:
            tags.append("conjunction")
        elif t in non_noun or not any(c.isalnum() for c in t):
            tags.append("other")
        else:
            tags.append("noun")
        i += 1

    spans: list[tuple[int, int]] = []
    j = 0
    while j < len(tokens):
        if tags[j] == "noun":
            k = j
            while k < len(tokens) and tags[k] == "noun":
                k += 1
            spans.append((j, k))
            j = k
        else:
            j += 1

    gaps: list[list[str]] = []
    for (_, end), (start, _) in zip(spans, spans[1:]):
        gaps.append(tags[end:start])
    return spans, gaps


def rules_parse(tokens: list[str], expression_id: str = "",
                lexicons: Optional[Lexicons] = None) -> ParsedExpression:
    """Deterministic fallback parse: nouns are tokens outside the closed
    lexicons; hop level is the BFS distance from the first head noun across
    relation links in left-to-right order (conjunction gaps share a level)."""
    if not tokens:
        raise StageError(STAGE_A1, "empty token list")
    lex = lexicons or default_lexicons()
    spans, gaps = _segment(tokens, lex)
    if not spans:
        raise StageError(STAGE_A1, "no nouns")

    levels = [0]
    for gap in gaps:
        if any(t == "relation" for t in gap):
            step = 1
        elif any(t == "conjunction" for t in gap):
            step = 0
        else:
            step = 1
        levels.append(levels[-1] + step)

    nouns = [
        ParsedNoun(
            text=" ".join(tokens[s:e]),
            span_start=s,
            span_end=e,
            hop_level=lvl,
        )
        for (s, e), lvl in zip(spans, levels)
    ]
    target_indices = [i for i, n in enumerate(nouns) if n.hop_level == 0]
    return ParsedExpression(expression_id=expression_id, nouns=nouns,
                            target_indices=target_indices)


def _parsed_from_gateway(payload: dict[str, Any], response: dict[str, Any],
                         expression: Expression) -> ParsedExpression:
    tokens = expression.tokens
    try:
        nouns = [
            ParsedNoun(
                text=str(n["text"]),
                span_start=int(n["start"]),
                span_end=int(n["end"]),
                hop_level=int(n["level"]),
            )
            for n in response["nouns"]
        ]
        target_indices = [int(i) for i in response["target_indices"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise StageError(STAGE_A1, f"gateway response missing fields: {exc}",
                         raw=str(response))
    parsed = ParsedExpression(expression_id=expression.id, nouns=nouns,
                              target_indices=target_indices)
    problems = parsed.violations(tokens)
    if problems:
        raise StageError(STAGE_A1, "; ".join(problems), raw=str(response))
    return parsed


def parse(req: ParseRequest, gateway: Any = None,
          lexicons: Optional[Lexicons] = None) -> ParsedExpression:
    """Stage A.1: extract object nouns with hop levels and target indices."""
    expr = req.expression
    if req.backend == BACKEND_RULES:
        parsed = rules_parse(expr.tokens, expr.id, lexicons)
    elif req.backend == BACKEND_GATEWAY:
        if gateway is None:
            raise ValueError("gateway backend selected but no gateway provided")
        payload = {"task": "parse", "sentence": expr.text, "tokens": expr.tokens,
                   "expression_id": expr.id}
        response = gateway.call("parse_llm", payload)
        parsed = _parsed_from_gateway(payload, response, expr)
    else:
        raise ValueError(f"unknown parse backend {req.backend!r}")
    problems = parsed.violations(expr.tokens)
    if problems:
        raise StageError(STAGE_A1, "; ".join(problems))
    return parsed


def l_max(parsed: ParsedExpression) -> int:
    """Reported maximum hop level (internal max + 1; bare target = 1)."""
    return parsed.l_max_reported
