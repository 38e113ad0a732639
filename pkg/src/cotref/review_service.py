"""HTTP service backing the human verification gate.

Read-only over benchmark candidates, write-only over the append-only decision
log; stage outputs are never mutated. Exported benchmark records are identical
to what the build-benchmark stage produces for the same decision log.
"""

from __future__ import annotations

import copy
import os
from typing import Any, Optional

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, field_validator

from . import benchmark as bench
from .decisions import (
    DECISION_ACCEPT,
    DECISION_REJECT,
    append_decision,
    apply_decisions,
    read_log,
)
from .pipeline import load_samples
from .records import (
    STATUS_HUMAN_ACCEPTED,
    STATUS_HUMAN_REJECTED,
    STATUS_VERIFIED,
    GroundedSample,
    dumps_record,
)


class DecisionBody(BaseModel):
    decision: str
    reviewer: str
    reason: Optional[str] = None

    @field_validator("decision")
    @classmethod
    def _check_decision(cls, v: str) -> str:
        if v not in (DECISION_ACCEPT, DECISION_REJECT):
            raise ValueError("decision must be 'accept' or 'reject'")
        return v

    @field_validator("reviewer")
    @classmethod
    def _check_reviewer(cls, v: str) -> str:
        if not v.strip():
            raise ValueError("reviewer must be non-empty")
        return v


class ReviewState:
    """Candidates plus the decision log, replayed on every read so the log is
    the single source of truth (event-sourcing)."""

    def __init__(self, candidates_path: str, decision_log_path: str,
                 exclusion_list: Optional[str] = None):
        self.candidates_path = candidates_path
        self.decision_log_path = decision_log_path
        self.exclusions = bench.load_exclusion_list(exclusion_list)
        self.candidates = load_samples(candidates_path)
        self.by_id = {s.expression.id: s for s in self.candidates}

    def decided_samples(self) -> list[GroundedSample]:
        samples = copy.deepcopy(self.candidates)
        apply_decisions(samples, read_log(self.decision_log_path))
        return samples

    def review_status(self, sample: GroundedSample) -> str:
        if sample.status == STATUS_VERIFIED:
            return "pending"
        if sample.status == STATUS_HUMAN_ACCEPTED:
            return "accepted"
        if sample.status == STATUS_HUMAN_REJECTED:
            return "rejected"
        return sample.status


def sample_view(sample: GroundedSample, state: ReviewState) -> dict[str, Any]:
    d = sample.to_dict()
    d["review_status"] = state.review_status(sample)
    return d


def create_app(candidates_path: str, decision_log_path: str,
               image_root: Optional[str] = None, ui_dir: Optional[str] = None,
               exclusion_list: Optional[str] = None,
               bearer_token: Optional[str] = None) -> FastAPI:
    state = ReviewState(candidates_path, decision_log_path, exclusion_list)
    app = FastAPI(title="cotref review service")
    app.state.review = state

    if bearer_token:
        @app.middleware("http")
        async def _auth(request: Request, call_next):
            if request.url.path.startswith("/api/"):
                header = request.headers.get("authorization", "")
                if header != f"Bearer {bearer_token}":
                    return JSONResponse({"detail": "unauthorized"}, status_code=401)
            return await call_next(request)

    @app.get("/api/samples")
    def list_samples(status: str = "pending", limit: int = 50) -> list[dict[str, Any]]:
        samples = state.decided_samples()
        out = []
        for s in samples:
            if status and state.review_status(s) != status:
                continue
            out.append(sample_view(s, state))
            if len(out) >= limit:
                break
        return out

    @app.get("/api/samples/{sample_id}")
    def get_sample(sample_id: str) -> dict[str, Any]:
        samples = {s.expression.id: s for s in state.decided_samples()}
        if sample_id not in samples:
            raise HTTPException(status_code=404, detail=f"unknown sample id {sample_id}")
        s = samples[sample_id]
        view = sample_view(s, state)
        if s.expression.image_uri:
            view["image_url"] = f"/images/{os.path.basename(s.expression.image_uri)}"
        return view

    @app.post("/api/samples/{sample_id}/decision")
    def post_decision(sample_id: str, body: DecisionBody) -> dict[str, Any]:
        if sample_id not in state.by_id:
            raise HTTPException(status_code=404, detail=f"unknown sample id {sample_id}")
        entry = append_decision(state.decision_log_path, sample_id,
                                body.decision, body.reviewer, body.reason)
        return entry.to_dict()

    @app.get("/api/export")
    def export() -> PlainTextResponse:
        built = bench.build_benchmark(state.decided_samples(), state.exclusions)
        lines = [dumps_record(bench.benchmark_record(s)) for s in built.admitted]
        body = "\n".join(lines) + ("\n" if lines else "")
        return PlainTextResponse(body, media_type="application/jsonl")

    @app.get("/api/progress")
    def progress() -> dict[str, Any]:
        samples = state.decided_samples()
        counts: dict[str, int] = {}
        for s in samples:
            key = state.review_status(s)
            counts[key] = counts.get(key, 0) + 1
        return {"total": len(samples), "counts": counts,
                "decisions_logged": len(read_log(state.decision_log_path))}

    if image_root and os.path.isdir(image_root):
        app.mount("/images", StaticFiles(directory=image_root), name="images")
    if ui_dir and os.path.isdir(ui_dir):
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
