"""Deterministic discrete-event network simulator."""

from .channel import ChannelDraws, ChannelParams, SimEvent, broadcast, keyed_uniform
from .prepare import PreparedRun, prepare, stream_rng
from .run import FinalState, RunResult, run, run_prepared
from .topology import Topology, UnknownNode, neighbors_in_range, place_nodes
from .trace import EventKind, Trace

__all__ = [
    "ChannelDraws",
    "ChannelParams",
    "EventKind",
    "FinalState",
    "PreparedRun",
    "RunResult",
    "SimEvent",
    "Topology",
    "Trace",
    "UnknownNode",
    "broadcast",
    "keyed_uniform",
    "neighbors_in_range",
    "place_nodes",
    "prepare",
    "run",
    "run_prepared",
    "stream_rng",
]
