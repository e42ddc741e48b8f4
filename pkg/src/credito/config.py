"""Service configuration: a small YAML file validated at startup.

Example (all keys optional, defaults shown):

    listen:
      host: 127.0.0.1
      port: 8400
    journal_path: credito-journal.ndjson
    claim_policy:
      max_credit_per_property: 10000000    # cents
      max_properties_per_customer: 2
    claim_validation_enabled: true
    agents:
      poll_seconds: 2.0
      smoothing_alpha: "0.3"
      forecast_period_length: 10
    reward_rate: "0"
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path

import yaml

from .agents import normalize_alpha
from .errors import BadAlpha, ConfigError
from .fiscal import ClaimPolicy


@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8400
    journal_path: str = "credito-journal.ndjson"
    policy: ClaimPolicy = field(
        default_factory=lambda: ClaimPolicy(
            max_credit_per_property=100_000_00,
            max_properties_per_customer=2,
        )
    )
    claim_validation_enabled: bool = True
    agent_poll_seconds: float = 2.0
    smoothing_alpha: str = "0.3"
    forecast_period_length: int = 10
    reward_rate: str = "0"

    def __post_init__(self) -> None:
        if not isinstance(self.port, int) or not 0 < self.port < 65536:
            raise ConfigError(f"port must be in 1..65535, got {self.port!r}")
        try:
            normalize_alpha(self.smoothing_alpha)
        except BadAlpha as exc:
            raise ConfigError(f"smoothing_alpha: {exc.message}") from None
        if not isinstance(self.forecast_period_length, int) or self.forecast_period_length < 1:
            raise ConfigError(f"forecast_period_length must be a positive integer, got {self.forecast_period_length!r}")
        if not isinstance(self.agent_poll_seconds, (int, float)) or self.agent_poll_seconds < 0:
            raise ConfigError(f"agent_poll_seconds must be >= 0, got {self.agent_poll_seconds!r}")
        try:
            rate = Fraction(self.reward_rate)
        except (ValueError, ZeroDivisionError, TypeError):
            raise ConfigError(f"reward_rate {self.reward_rate!r} is not a valid ratio") from None
        if rate < 0:
            raise ConfigError("reward_rate must be >= 0")

    @property
    def alpha(self) -> Fraction:
        return normalize_alpha(self.smoothing_alpha)


def config_from_dict(data: dict) -> ServiceConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping")
    known = {"listen", "journal_path", "claim_policy", "claim_validation_enabled", "agents", "reward_rate"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")

    listen = data.get("listen") or {}
    policy_data = data.get("claim_policy") or {}
    agents_data = data.get("agents") or {}
    try:
        policy = ClaimPolicy(
            max_credit_per_property=int(policy_data.get("max_credit_per_property", 100_000_00)),
            max_properties_per_customer=int(policy_data.get("max_properties_per_customer", 2)),
        )
    except (TypeError, ValueError):
        raise ConfigError("claim_policy caps must be integers") from None
    return ServiceConfig(
        host=str(listen.get("host", "127.0.0.1")),
        port=listen.get("port", 8400),
        journal_path=str(data.get("journal_path", "credito-journal.ndjson")),
        policy=policy,
        claim_validation_enabled=bool(data.get("claim_validation_enabled", True)),
        agent_poll_seconds=agents_data.get("poll_seconds", 2.0),
        smoothing_alpha=str(agents_data.get("smoothing_alpha", "0.3")),
        forecast_period_length=agents_data.get("forecast_period_length", 10),
        reward_rate=str(data.get("reward_rate", "0")),
    )


def load_config(path: str | Path) -> ServiceConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"configuration {path} is not valid YAML: {exc}") from exc
    return config_from_dict(data)


def apply_overrides(config: ServiceConfig, overrides: dict) -> ServiceConfig:
    """Scenario-level tweaks (claim validation flag, caps, rates)."""
    if not overrides:
        return config
    known = {
        "claim_validation_enabled",
        "reward_rate",
        "smoothing_alpha",
        "forecast_period_length",
        "max_credit_per_property",
        "max_properties_per_customer",
    }
    unknown = set(overrides) - known
    if unknown:
        raise ConfigError(f"unknown config overrides: {sorted(unknown)}")
    policy = config.policy
    if "max_credit_per_property" in overrides or "max_properties_per_customer" in overrides:
        policy = ClaimPolicy(
            max_credit_per_property=int(overrides.get("max_credit_per_property", policy.max_credit_per_property)),
            max_properties_per_customer=int(overrides.get("max_properties_per_customer", policy.max_properties_per_customer)),
        )
    return replace(
        config,
        policy=policy,
        claim_validation_enabled=bool(overrides.get("claim_validation_enabled", config.claim_validation_enabled)),
        reward_rate=str(overrides.get("reward_rate", config.reward_rate)),
        smoothing_alpha=str(overrides.get("smoothing_alpha", config.smoothing_alpha)),
        forecast_period_length=overrides.get("forecast_period_length", config.forecast_period_length),
    )
