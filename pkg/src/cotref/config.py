"""Run configuration: one YAML document with COTREF_* environment overrides.

Keys: paths, backend per role, prices, thresholds (iou_gt, context_radius,
grid_k), seed, concurrency.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Any, Optional

import yaml

from .gateway import ROLES, Gateway, HttpBackend, MockBackend, ModelRole, UsageLedger

ENV_PREFIX = "COTREF_"

DEFAULT_PRICES = {
    "parse_llm": 0.1,
    "validate_llm": 0.25,
    "ground_vlm": 0.07,
    "judge_vlm": 2.5,
}


@dataclass
class Thresholds:
    iou_gt: float = 0.7
    context_radius: int = 3
    grid_k: int = 15


@dataclass
class RoleConfig:
    backend: str = "mock"  # mock | live
    base_uri: str = ""
    model: str = ""
    auth_env: str = ""
    price_per_million_tokens: float = 0.0


@dataclass
class Config:
    seed: int = 42
    concurrency: int = 8
    retries: int = 2
    thresholds: Thresholds = field(default_factory=Thresholds)
    roles: dict[str, RoleConfig] = field(default_factory=dict)
    exclusion_list: Optional[str] = None
    mock_fixtures: Optional[str] = None  # JSON file with ground/judge fixture boxes
    ledger_log: Optional[str] = None

    def __post_init__(self) -> None:
        for role in ROLES:
            self.roles.setdefault(role, RoleConfig(
                price_per_million_tokens=DEFAULT_PRICES.get(role, 0.0)))

    def model_roles(self) -> dict[str, ModelRole]:
        return {
            role: ModelRole(
                role=role,
                base_uri=rc.base_uri,
                model=rc.model,
                auth_env=rc.auth_env,
                price_per_million_tokens=rc.price_per_million_tokens,
            )
            for role, rc in self.roles.items()
        }

    def build_gateway(self, backend_override: Optional[str] = None,
                      seed: Optional[int] = None) -> Gateway:
        import json

        backends = {r: (backend_override or rc.backend) for r, rc in self.roles.items()}
        roles = self.model_roles()
        ledger = UsageLedger(event_log_path=self.ledger_log)
        if all(b == "live" for b in backends.values()):
            backend: Any = HttpBackend(roles)
        else:
            grounding_fixtures = judge_fixtures = None
            fixture_table = None
            if self.mock_fixtures and os.path.exists(self.mock_fixtures):
                with open(self.mock_fixtures, encoding="utf-8") as f:
                    fixtures = json.load(f)
                grounding_fixtures = fixtures.get("ground")
                judge_fixtures = fixtures.get("judge")
                fixture_table = fixtures.get("responses")
            backend = MockBackend(
                seed=self.seed if seed is None else seed,
                fixture_table=fixture_table,
                grounding_fixtures=grounding_fixtures,
                judge_fixtures=judge_fixtures,
            )
        return Gateway(roles=roles, backend=backend, ledger=ledger,
                       retries=self.retries, concurrency=self.concurrency)


def _apply_env_overrides(data: dict[str, Any]) -> dict[str, Any]:
    """COTREF_SEED=7, COTREF_THRESHOLDS_IOU_GT=0.8, COTREF_CONCURRENCY=2 ..."""
    for key, value in os.environ.items():
        if not key.startswith(ENV_PREFIX):
            continue
        path = key[len(ENV_PREFIX):].lower()
        if path.startswith("thresholds_"):
            section, leaf = "thresholds", path[len("thresholds_"):]
            data.setdefault(section, {})[leaf] = yaml.safe_load(value)
        else:
            data[path] = yaml.safe_load(value)
    return data


def load_config(path: Optional[str] = None) -> Config:
    data: dict[str, Any] = {}
    if path:
        with open(path, encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
    data = _apply_env_overrides(data)
    thresholds = Thresholds(**data.pop("thresholds", {}))
    roles = {
        role: RoleConfig(**rc) for role, rc in data.pop("roles", {}).items()
    }
    known = {"seed", "concurrency", "retries", "exclusion_list",
             "mock_fixtures", "ledger_log"}
    kwargs = {k: v for k, v in data.items() if k in known}
    return Config(thresholds=thresholds, roles=roles, **kwargs)
