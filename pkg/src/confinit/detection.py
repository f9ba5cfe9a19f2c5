"""Suspect-list watchdog, standard-deviation consensus and attacker isolation."""

from __future__ import annotations

import enum
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numba
import numpy as np

from .domain import AlertMessage, ConfinitError, NodeId


class EmptySample(ConfinitError, ValueError):
    pass


class TooFewParticipants(ConfinitError):
    """Consensus needs at least two participant readings; the verdict is deferred."""


class AlreadyBlacklisted(ConfinitError):
    pass


class Rejection(enum.Enum):
    NEW_SUSPECT = "new_suspect"
    REPEAT_OFFENDER = "repeat_offender"


class Verdict(enum.Enum):
    ATTACKER = "attacker"
    CLEARED = "cleared"
    INCONCLUSIVE = "inconclusive"


class AlertOutcome(enum.Enum):
    ADOPTED = "adopted"
    DUPLICATE = "duplicate"


@dataclass(frozen=True)
class ConsensusParams:
    threshold: float = 5.0

    def __post_init__(self) -> None:
        if not self.threshold > 0:
            raise ValueError(f"consensus threshold must be > 0, got {self.threshold}")


@dataclass
class SuspectEntry:
    last_reading: float
    strikes: int
    since: float


@dataclass
class AttackerList:
    ids: set[NodeId] = field(default_factory=set)
    evidence: dict[NodeId, AlertMessage] = field(default_factory=dict)

    def __contains__(self, node: object) -> bool:
        return node in self.ids

    def __len__(self) -> int:
        return len(self.ids)

    def add(self, alert: AlertMessage) -> None:
        self.ids.add(alert.attacker_id)
        self.evidence[alert.attacker_id] = alert


@dataclass
class DetectionState:
    self_id: NodeId
    suspects: dict[NodeId, SuspectEntry] = field(default_factory=dict)
    attackers: AttackerList = field(default_factory=AttackerList)


@dataclass(frozen=True)
class Assessment:
    verdict: Verdict
    base: float
    joint: float


@numba.njit(cache=True)
def pstdev(data):
    """Population standard deviation, two-pass, plain left-to-right sums.

    Compiled once and shared by the reference and fast engines so both
    produce bit-identical values.
    """
    n = data.shape[0]
    total = 0.0
    constant = True
    for i in range(n):
        total += data[i]
        constant = constant and data[i] == data[0]
    if constant:
        # the rounded mean of equal values can miss them by an ulp
        return 0.0
    mean = total / n
    acc = 0.0
    for i in range(n):
        d = data[i] - mean
        acc += d * d
    return math.sqrt(acc / n)


def consensus_deviation(data: Iterable[float]) -> float:
    arr = np.asarray(list(data) if not isinstance(data, np.ndarray) else data, dtype=np.float64)
    if arr.size == 0:
        raise EmptySample("consensus needs at least one reading")
    if not np.all(np.isfinite(arr)):
        raise ValueError("readings must be finite")
    return float(pstdev(arr.ravel()))


def classify_on_rejection(
    state: DetectionState, rejected_id: NodeId, reading: float, now: float
) -> Rejection:
    if rejected_id in state.attackers:
        raise ValueError(f"node {rejected_id} is already convicted")
    entry = state.suspects.get(rejected_id)
    if entry is None:
        state.suspects[rejected_id] = SuspectEntry(reading, 1, now)
        return Rejection.NEW_SUSPECT
    entry.strikes += 1
    entry.last_reading = reading
    return Rejection.REPEAT_OFFENDER


def evaluate_suspect(
    suspect_reading: float,
    participant_readings: Sequence[float],
    params: ConsensusParams,
) -> Assessment:
    """Judge a repeat offender against the readings of the consensus participants.

    ``base`` is the spread of the participants alone and ``joint`` the spread
    once the suspect's reading is added.  A group that does not agree with
    itself (``base`` above threshold) cannot convict anyone.
    """
    if len(participant_readings) < 2:
        raise TooFewParticipants(f"{len(participant_readings)} participant(s)")
    parts = np.asarray(participant_readings, dtype=np.float64)
    base = float(pstdev(parts))
    joint = float(pstdev(np.append(parts, suspect_reading)))
    if base > params.threshold:
        verdict = Verdict.INCONCLUSIVE
    elif joint > params.threshold:
        verdict = Verdict.ATTACKER
    else:
        verdict = Verdict.CLEARED
    return Assessment(verdict, base, joint)


def clear_suspect(state: DetectionState, node: NodeId) -> bool:
    return state.suspects.pop(node, None) is not None


def raise_alert(
    state: DetectionState, attacker: NodeId, reading: float, detector: NodeId, now: float
) -> AlertMessage:
    if attacker in state.attackers:
        raise AlreadyBlacklisted(f"node {attacker} already convicted")
    alert = AlertMessage(attacker, reading, detector, now)
    state.suspects.pop(attacker, None)
    state.attackers.add(alert)
    return alert


def on_alert(state: DetectionState, alert: AlertMessage) -> AlertOutcome:
    if alert.attacker_id in state.attackers:
        return AlertOutcome.DUPLICATE
    state.suspects.pop(alert.attacker_id, None)
    state.attackers.add(alert)
    return AlertOutcome.ADOPTED
