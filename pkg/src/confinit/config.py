"""Scenario configuration: flat ``key=value`` files with command-line overrides."""

from __future__ import annotations

import dataclasses
import math
from collections.abc import Mapping
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any

from .attack import AttackMode, AttackProfile
from .domain import ConfinitError

GRID_KEYS = ("n_nodes", "attacker_fraction")
ENGINES = ("fast", "reference")
TRACE_LEVELS = ("protocol", "full")
READING_SOURCES = ("synthetic", "dataset")


class ConfigError(ConfinitError, ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class ScenarioConfig:
    # Defaults reproduce the 100-node, 10%-attacker cell of the evaluation grid.
    n_nodes: int | tuple[int, ...] = 100
    area_width: float = 200.0
    area_height: float = 200.0
    tx_range: float = 100.0
    duration_s: float = 1200.0
    send_period_s: float = 1.0
    jitter_max_s: float = 0.1
    cthresh: float = 3.0
    consensus_threshold: float = 5.0
    attacker_fraction: float | tuple[float, ...] = 0.10
    attack_mode: str = "additive_offset"
    attack_magnitude_low: float = 20.0
    attack_magnitude_high: float = 40.0
    attack_active_from: float = 0.0
    attack_duty_cycle: float = 1.0
    loss_probability: float = 0.01
    delay_mean_s: float = 0.005
    delay_jitter_s: float = 0.002
    reading_source: str = "synthetic"
    synthetic_base: float = 16.0
    synthetic_drift_per_s: float = 0.0
    synthetic_noise_sd: float = 0.5
    dataset_path: str = ""
    dataset_column: str = "0"
    dataset_node_stride: int = 1
    seed: int = 1
    replications: int = 35
    detection_enabled: bool = True
    census_cadence_s: float = 10.0
    trace_level: str = "protocol"
    engine: str = "fast"

    @property
    def is_grid(self) -> bool:
        return isinstance(self.n_nodes, tuple) or isinstance(self.attacker_fraction, tuple)

    def cells(self) -> list[ScenarioConfig]:
        """Expand list-valued grid keys into one scalar config per cell."""
        ns = self.n_nodes if isinstance(self.n_nodes, tuple) else (self.n_nodes,)
        fs = self.attacker_fraction if isinstance(self.attacker_fraction, tuple) else (self.attacker_fraction,)
        return [dataclasses.replace(self, n_nodes=n, attacker_fraction=f) for n in ns for f in fs]

    def with_(self, **changes: Any) -> ScenarioConfig:
        return validate(dataclasses.replace(self, **changes))

    def attack_profile(self) -> AttackProfile:
        mode = AttackMode(self.attack_mode)
        lo, hi = self.attack_magnitude_low, self.attack_magnitude_high
        magnitude: float | tuple[float, float] = lo if lo == hi and mode is not AttackMode.RANDOM_FABRICATION else (lo, hi)
        return AttackProfile(mode, magnitude, self.attack_active_from, self.attack_duty_cycle)

    def as_dict(self) -> dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


_FIELDS = {f.name: f for f in fields(ScenarioConfig)}
_TYPES: dict[str, type] = {
    name: (int if name == "n_nodes" else float if name == "attacker_fraction" else type(f.default))
    for name, f in _FIELDS.items()
}


def _parse_scalar(key: str, raw: str) -> Any:
    typ = _TYPES[key]
    text = raw.strip()
    try:
        if typ is bool:
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if typ is int:
            return int(text)
        if typ is float:
            value = float(text)
            if not math.isfinite(value):
                raise ValueError(text)
            return value
    except ValueError:
        raise ConfigError(key, f"expected {typ.__name__}, got {raw!r}") from None
    return text


def _parse_value(key: str, raw: str) -> Any:
    if key not in _FIELDS:
        raise ConfigError(key, "unknown key")
    if "," in raw:
        if key not in GRID_KEYS:
            raise ConfigError(key, f"only {', '.join(GRID_KEYS)} accept value lists")
        return tuple(_parse_scalar(key, part) for part in raw.split(",") if part.strip())
    return _parse_scalar(key, raw)


def _positive(cfg: ScenarioConfig, key: str) -> None:
    if not getattr(cfg, key) > 0:
        raise ConfigError(key, f"must be > 0, got {getattr(cfg, key)}")


def _non_negative(cfg: ScenarioConfig, key: str) -> None:
    if getattr(cfg, key) < 0:
        raise ConfigError(key, f"must be >= 0, got {getattr(cfg, key)}")


def validate(cfg: ScenarioConfig) -> ScenarioConfig:
    for n in cfg.n_nodes if isinstance(cfg.n_nodes, tuple) else (cfg.n_nodes,):
        if n < 1:
            raise ConfigError("n_nodes", f"must be >= 1, got {n}")
    for f in cfg.attacker_fraction if isinstance(cfg.attacker_fraction, tuple) else (cfg.attacker_fraction,):
        if not 0 <= f <= 1:
            raise ConfigError("attacker_fraction", f"must be in [0, 1], got {f}")
    for key in ("area_width", "area_height", "tx_range", "send_period_s", "cthresh",
                "consensus_threshold", "delay_mean_s", "census_cadence_s"):
        _positive(cfg, key)
    for key in ("duration_s", "jitter_max_s", "delay_jitter_s", "attack_active_from",
                "synthetic_noise_sd", "dataset_node_stride"):
        _non_negative(cfg, key)
    if not 0 <= cfg.loss_probability < 1:
        raise ConfigError("loss_probability", f"must be in [0, 1), got {cfg.loss_probability}")
    if cfg.delay_jitter_s >= cfg.delay_mean_s:
        raise ConfigError("delay_jitter_s", "must be below delay_mean_s so every delay is positive")
    if cfg.replications < 1:
        raise ConfigError("replications", f"must be >= 1, got {cfg.replications}")
    if cfg.seed < 0:
        raise ConfigError("seed", "must be >= 0")
    if cfg.engine not in ENGINES:
        raise ConfigError("engine", f"must be one of {ENGINES}")
    if cfg.trace_level not in TRACE_LEVELS:
        raise ConfigError("trace_level", f"must be one of {TRACE_LEVELS}")
    if cfg.reading_source not in READING_SOURCES:
        raise ConfigError("reading_source", f"must be one of {READING_SOURCES}")
    if cfg.reading_source == "dataset" and not cfg.dataset_path:
        raise ConfigError("dataset_path", "required when reading_source=dataset")
    try:
        mode = AttackMode(cfg.attack_mode)
    except ValueError:
        raise ConfigError("attack_mode", f"must be one of {[m.value for m in AttackMode]}") from None
    if cfg.attack_magnitude_low > cfg.attack_magnitude_high:
        raise ConfigError("attack_magnitude_low", "must not exceed attack_magnitude_high")
    try:
        profile = cfg.attack_profile()
    except ValueError as exc:
        raise ConfigError("attack_duty_cycle" if "duty" in str(exc) else "attack_mode", str(exc)) from None
    if mode is AttackMode.ADDITIVE_OFFSET:
        try:
            profile.check_against(cfg.cthresh)
        except ValueError as exc:
            raise ConfigError("attack_magnitude_low", str(exc)) from None
    return cfg


def read_config_file(path: str | Path) -> dict[str, str]:
    raw: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        raw[key.strip()] = value.strip()
    return raw


def parse_config(
    path: str | Path | None = None, overrides: Mapping[str, Any] | None = None
) -> ScenarioConfig:
    """Build a validated config from defaults, then the file, then overrides."""
    raw: dict[str, Any] = read_config_file(path) if path else {}
    for key, value in (overrides or {}).items():
        raw[key] = value
    values: dict[str, Any] = {}
    for key, value in raw.items():
        values[key] = _parse_value(key, value) if isinstance(value, str) else value
        if key not in _FIELDS:
            raise ConfigError(key, "unknown key")
    return validate(ScenarioConfig(**values))


def dump_config(cfg: ScenarioConfig) -> str:
    lines = []
    for key, value in cfg.as_dict().items():
        if isinstance(value, tuple):
            value = ",".join(str(v) for v in value)
        elif isinstance(value, bool):
            value = str(value).lower()
        lines.append(f"{key}={value}")
    return "\n".join(lines) + "\n"


def default_config(**changes: Any) -> ScenarioConfig:
    return validate(dataclasses.replace(ScenarioConfig(), **changes))


__all__ = [
    "ConfigError",
    "ScenarioConfig",
    "default_config",
    "dump_config",
    "parse_config",
    "read_config_file",
    "validate",
    "GRID_KEYS",
]
