"""Run entry point: prepare inputs, pick an engine, return the trace and final state."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..config import ConfigError, ScenarioConfig, validate
from .prepare import PreparedRun, prepare
from .trace import Trace


@dataclass
class FinalState:
    members: list[frozenset[int]]
    leaders: np.ndarray
    attackers: list[frozenset[int]]
    suspects: list[frozenset[int]]

    def same_as(self, other: FinalState) -> bool:
        return (
            self.members == other.members
            and np.array_equal(self.leaders, other.leaders)
            and self.attackers == other.attackers
            and self.suspects == other.suspects
        )


@dataclass
class RunResult:
    prep: PreparedRun
    trace: Trace
    final: FinalState
    first_conviction: np.ndarray  # per node, +inf if never convicted
    stats: object

    @property
    def convicted(self) -> frozenset[int]:
        return frozenset(np.nonzero(np.isfinite(self.first_conviction))[0].tolist())


def run_prepared(prep: PreparedRun, engine: str | None = None) -> RunResult:
    engine = engine or prep.config.engine
    if engine == "fast":
        from .fast import run_fast

        return run_fast(prep)
    if engine == "reference":
        from .reference import run_reference

        return run_reference(prep)
    raise ConfigError("engine", f"unknown engine {engine!r}")


def run(scenario: ScenarioConfig, *, run_id: int = 0, engine: str | None = None) -> RunResult:
    """Simulate one scenario cell; the result is a pure function of the config."""
    cfg = validate(scenario)
    if cfg.is_grid:
        raise ConfigError("n_nodes", "run() takes a single cell; expand grids with config.cells()")
    return run_prepared(prepare(cfg, run_id=run_id), engine)
