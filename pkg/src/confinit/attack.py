"""False-data-injection behavior: which nodes lie, and how their readings are altered."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .domain import NodeId, Reading


class AttackMode(enum.Enum):
    ADDITIVE_OFFSET = "additive_offset"
    FIXED_VALUE = "fixed_value"
    RANDOM_FABRICATION = "random_fabrication"


Magnitude = float | tuple[float, float]


@dataclass(frozen=True)
class AttackProfile:
    """How an attacker alters its own reading.

    ``magnitude`` is an offset (additive), a constant (fixed value) or a
    ``(low, high)`` range.  For the first two modes a range means "draw once
    per attacker", see :meth:`realize`; fabrication draws on every send.
    """

    mode: AttackMode = AttackMode.ADDITIVE_OFFSET
    magnitude: Magnitude = (20.0, 40.0)
    active_from: float = 0.0
    duty_cycle: float = 1.0

    def __post_init__(self) -> None:
        if not 0 < self.duty_cycle <= 1:
            raise ValueError(f"duty_cycle must be in (0, 1], got {self.duty_cycle}")
        if self.active_from < 0:
            raise ValueError("active_from must be >= 0")
        if isinstance(self.magnitude, tuple):
            lo, hi = self.magnitude
            if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
                raise ValueError(f"bad magnitude range {self.magnitude}")
        elif not math.isfinite(self.magnitude):
            raise ValueError("magnitude must be finite")
        if self.mode is AttackMode.RANDOM_FABRICATION and not isinstance(self.magnitude, tuple):
            raise ValueError("random_fabrication needs a (low, high) magnitude range")

    def realize(self, rng: np.random.Generator) -> AttackProfile:
        if self.mode is AttackMode.RANDOM_FABRICATION or not isinstance(self.magnitude, tuple):
            return self
        lo, hi = self.magnitude
        return replace(self, magnitude=float(rng.uniform(lo, hi)))

    def check_against(self, cthresh: float) -> None:
        """Additive attacks must push readings past the similarity threshold."""
        if self.mode is not AttackMode.ADDITIVE_OFFSET:
            return
        lo, hi = self.magnitude if isinstance(self.magnitude, tuple) else (self.magnitude,) * 2
        if lo <= 0 <= hi or min(abs(lo), abs(hi)) <= cthresh:
            raise ValueError(
                f"additive offset {self.magnitude} must exceed cthresh={cthresh} in magnitude"
            )


@dataclass(frozen=True)
class AttackerAssignment:
    fraction: float
    ids: frozenset[NodeId]


def attacker_count(n_nodes: int, fraction: float) -> int:
    # Round half up; Python's round() would send 2.5 attackers to 2.
    return int(math.floor(n_nodes * fraction + 0.5))


def assign_attackers(n_nodes: int, fraction: float, rng: np.random.Generator) -> AttackerAssignment:
    if not 0 <= fraction <= 1:
        raise ValueError(f"fraction must be in [0, 1], got {fraction}")
    k = attacker_count(n_nodes, fraction)
    ids = rng.choice(n_nodes, size=k, replace=False) if k else []
    return AttackerAssignment(fraction, frozenset(int(i) for i in ids))


def is_active(profile: AttackProfile, now: float, rng: np.random.Generator) -> bool:
    if now < profile.active_from:
        return False
    if profile.duty_cycle >= 1.0:
        return True
    return bool(rng.random() <= profile.duty_cycle)


def falsify(
    true_reading: Reading, profile: AttackProfile, now: float, rng: np.random.Generator
) -> Reading:
    if not is_active(profile, now, rng):
        return true_reading
    mode = profile.mode
    if mode is AttackMode.RANDOM_FABRICATION:
        lo, hi = profile.magnitude  # type: ignore[misc]
        value = float(rng.uniform(lo, hi))
    else:
        mag = profile.magnitude
        if isinstance(mag, tuple):
            raise ValueError("call realize() before falsify() for ranged magnitudes")
        value = true_reading.value + mag if mode is AttackMode.ADDITIVE_OFFSET else mag
    return Reading(value, true_reading.timestamp)
