"""Append-only human review decision log.

Decisions are immutable events; a later decision for the same sample id
supersedes earlier ones, with the full history retained in the log. Replaying
the log over a candidate file reconstructs reviewer state exactly.
"""

from __future__ import annotations

import os
import threading
from dataclasses import dataclass
from typing import Iterable, Optional

from .records import (
    STATUS_HUMAN_ACCEPTED,
    STATUS_HUMAN_REJECTED,
    STATUS_VERIFIED,
    GroundedSample,
    dumps_record,
    read_jsonl,
)

DECISION_ACCEPT = "accept"
DECISION_REJECT = "reject"

_write_lock = threading.Lock()


@dataclass
class Decision:
    sample_id: str
    decision: str  # accept | reject
    reviewer: str
    reason: Optional[str] = None
    seq: int = 0

    def to_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "decision": self.decision,
            "reviewer": self.reviewer,
            "reason": self.reason,
            "seq": self.seq,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Decision":
        return cls(
            sample_id=str(d["sample_id"]),
            decision=str(d["decision"]),
            reviewer=str(d.get("reviewer", "")),
            reason=d.get("reason"),
            seq=int(d.get("seq", 0)),
        )


def read_log(path: str) -> list[Decision]:
    if not os.path.exists(path):
        return []
    return [Decision.from_dict(d) for d in read_jsonl(path)]


def append_decision(path: str, sample_id: str, decision: str, reviewer: str,
                    reason: Optional[str] = None) -> Decision:
    if decision not in (DECISION_ACCEPT, DECISION_REJECT):
        raise ValueError(f"decision must be accept or reject, got {decision!r}")
    with _write_lock:
        seq = len(read_log(path)) + 1
        entry = Decision(sample_id=sample_id, decision=decision,
                         reviewer=reviewer, reason=reason, seq=seq)
        with open(path, "a", encoding="utf-8") as f:
            f.write(dumps_record(entry.to_dict()) + "\n")
    return entry


def latest_decisions(decisions: Iterable[Decision]) -> dict[str, Decision]:
    """Latest-wins projection of the event log."""
    latest: dict[str, Decision] = {}
    for d in decisions:
        latest[d.sample_id] = d
    return latest


def apply_decisions(samples: list[GroundedSample],
                    decisions: Iterable[Decision]) -> list[GroundedSample]:
    """Stamp human verdicts onto verified samples; other statuses are left
    untouched (the review gate only governs verified candidates)."""
    latest = latest_decisions(decisions)
    for s in samples:
        d = latest.get(s.expression.id)
        if d is None or s.status not in (STATUS_VERIFIED, STATUS_HUMAN_ACCEPTED,
                                         STATUS_HUMAN_REJECTED):
            continue
        s.status = (STATUS_HUMAN_ACCEPTED if d.decision == DECISION_ACCEPT
                    else STATUS_HUMAN_REJECTED)
    return samples
