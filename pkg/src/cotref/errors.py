"""Shared exception types."""

from __future__ import annotations

from typing import Optional


class StageError(Exception):
    """A pipeline stage could not produce a valid artifact for one sample.

    Callers convert this into a failed(stage, reason) sample status.
    """

    def __init__(self, stage: str, reason: str, raw: Optional[str] = None):
        super().__init__(f"[{stage}] {reason}")
        self.stage = stage
        self.reason = reason
        self.raw = raw


class GatewayError(Exception):
    """Terminal model-gateway failure (after retries); carries the raw response."""

    def __init__(self, message: str, raw: Optional[str] = None, retryable: bool = False):
        super().__init__(message)
        self.raw = raw
        self.retryable = retryable
