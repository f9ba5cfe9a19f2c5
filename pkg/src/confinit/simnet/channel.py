"""Lossy, delayed broadcast/unicast channel with keyed (order-free) randomness.

Each loss or delay draw is a hash of (stream key, purpose, sender, index,
receiver, sub-draw).  A draw therefore never depends on how many other draws
happened before it, which keeps runs reproducible when unrelated knobs change
and lets the compiled engine reproduce the reference engine bit for bit.
"""

from __future__ import annotations

import itertools
from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field
from typing import Any

import numba
import numpy as np

from ..domain import NodeId
from .topology import Topology, neighbors_in_range

# Draw purposes.
DATA = 1
ALERT_UNICAST = 2
ALERT_FLOOD = 3

_M64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_C1 = 0xBF58476D1CE4E5B9
_C2 = 0x94D049BB133111EB
_TO_UNIT = 2.0**-53


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * _C1) & _M64
    z = ((z ^ (z >> 27)) * _C2) & _M64
    return z ^ (z >> 31)


def keyed_uniform(key: int, purpose: int, a: int, b: int, c: int, sub: int) -> float:
    """Uniform draw in [0, 1) addressed by its coordinates rather than by position in a stream."""
    h = key & _M64
    for x in (purpose, a, b, c, sub):
        h = _mix(((h ^ x) + _GOLDEN) & _M64)
    return (h >> 11) * _TO_UNIT


_NB_GOLDEN = np.uint64(_GOLDEN)
_NB_C1 = np.uint64(_C1)
_NB_C2 = np.uint64(_C2)


@numba.njit(cache=True, inline="always")
def _mix_nb(z):
    z = (z ^ (z >> np.uint64(30))) * _NB_C1
    z = (z ^ (z >> np.uint64(27))) * _NB_C2
    return z ^ (z >> np.uint64(31))


@numba.njit(cache=True)
def keyed_uniform_nb(key, purpose, a, b, c, sub):
    h = np.uint64(key)
    h = _mix_nb((h ^ np.uint64(purpose)) + _NB_GOLDEN)
    h = _mix_nb((h ^ np.uint64(a)) + _NB_GOLDEN)
    h = _mix_nb((h ^ np.uint64(b)) + _NB_GOLDEN)
    h = _mix_nb((h ^ np.uint64(c)) + _NB_GOLDEN)
    h = _mix_nb((h ^ np.uint64(sub)) + _NB_GOLDEN)
    return np.float64(h >> np.uint64(11)) * _TO_UNIT


@dataclass(frozen=True)
class ChannelParams:
    loss_probability: float = 0.01
    delay_mean: float = 0.005
    delay_jitter: float = 0.002

    def __post_init__(self) -> None:
        if not 0 <= self.loss_probability < 1:
            raise ValueError("loss_probability must be in [0, 1)")
        if not 0 <= self.delay_jitter < self.delay_mean:
            raise ValueError("need 0 <= delay_jitter < delay_mean so delays stay positive")


@dataclass(frozen=True)
class ChannelDraws:
    key: int

    def uniform(self, purpose: int, a: int, b: int, c: int, sub: int) -> float:
        return keyed_uniform(self.key, purpose, a, b, c, sub)

    def lost(self, chan: ChannelParams, purpose: int, a: int, b: int, c: int) -> bool:
        return self.uniform(purpose, a, b, c, 0) < chan.loss_probability

    def delay(self, chan: ChannelParams, purpose: int, a: int, b: int, c: int) -> float:
        u = self.uniform(purpose, a, b, c, 1)
        return chan.delay_mean + (2.0 * u - 1.0) * chan.delay_jitter


@dataclass(order=True, frozen=True)
class SimEvent:
    at: float
    seq: int
    kind: str = field(compare=False)  # "deliver" | "alert" | "node_timer"
    target: NodeId = field(compare=False)
    payload: Any = field(compare=False, default=None)


def broadcast(
    sender: NodeId,
    payload: Any,
    now: float,
    topo: Topology,
    chan: ChannelParams,
    draws: ChannelDraws,
    *,
    index: int = 0,
    purpose: int = DATA,
    seq: Iterator[int] | None = None,
    receivers: Iterable[NodeId] | None = None,
    kind: str = "deliver",
) -> list[SimEvent]:
    """Schedule one delivery per in-range receiver that survives the loss draw.

    ``index`` distinguishes successive transmissions of the same sender and
    purpose (the send counter for data, the attacker id for alerts).
    """
    seq = seq if seq is not None else itertools.count()
    targets = sorted(neighbors_in_range(topo, sender) if receivers is None else receivers)
    events = []
    for r in targets:
        if r == sender:
            continue
        if draws.lost(chan, purpose, sender, index, r):
            continue
        events.append(SimEvent(now + draws.delay(chan, purpose, sender, index, r), next(seq), kind, r, payload))
    return events
