"""Per-node clustering state machine: data-message broadcast, neighbor table,
similarity-driven membership and leader election."""

from __future__ import annotations

import enum
from collections.abc import Container, Mapping
from dataclasses import dataclass, field

import numpy as np

from .domain import ConfinitError, DataMessage, NeighborRecord, NodeId, Reading
from .similarity import SimilarityParams, aggregate_reading, local_aggregate, mutual_similarity

DEFAULT_SEND_PERIOD = 1.0
DEFAULT_JITTER_MAX = 0.1


class EmptyCluster(ConfinitError):
    pass


class MembershipOutcome(enum.Enum):
    JOINED = "joined"
    REMOVED = "removed"
    # The two "unchanged" flavours; detection needs to tell them apart.
    STAYED = "stayed"
    REJECTED = "rejected"

    @property
    def changed(self) -> bool:
        return self in (MembershipOutcome.JOINED, MembershipOutcome.REMOVED)

    @property
    def similar(self) -> bool:
        return self in (MembershipOutcome.JOINED, MembershipOutcome.STAYED)


@dataclass
class ClusterState:
    self_id: NodeId
    neighbor_table: dict[NodeId, NeighborRecord] = field(default_factory=dict)
    cluster_members: set[NodeId] = field(default_factory=set)
    leader: NodeId | None = None
    next_send_at: float = 0.0
    # Running sums of aR*nR and nR over cluster members.  They make the
    # per-message aggregate O(1); resync() rebuilds them exactly.
    sum_weighted: float = 0.0
    sum_weight: int = 0

    def member_records(self) -> list[NeighborRecord]:
        return [self.neighbor_table[m] for m in sorted(self.cluster_members)]

    def resync(self) -> None:
        sw = 0.0
        w = 0
        for rec in self.member_records():
            sw += rec.aR * rec.nR
            w += rec.nR
        self.sum_weighted = sw
        self.sum_weight = w

    def local_aggregate(self, own: float) -> float:
        return local_aggregate(own, self.sum_weighted, self.sum_weight)

    def store(self, origin: NodeId, rec: NeighborRecord) -> None:
        if origin in self.cluster_members:
            old = self.neighbor_table[origin]
            self.sum_weighted -= old.aR * old.nR
            self.sum_weight -= old.nR
            self.neighbor_table[origin] = rec
            self.sum_weighted += rec.aR * rec.nR
            self.sum_weight += rec.nR
        else:
            self.neighbor_table[origin] = rec

    def add_member(self, node: NodeId) -> bool:
        if node in self.cluster_members:
            return False
        rec = self.neighbor_table[node]
        self.cluster_members.add(node)
        self.sum_weighted += rec.aR * rec.nR
        self.sum_weight += rec.nR
        return True

    def remove_member(self, node: NodeId) -> bool:
        if node not in self.cluster_members:
            return False
        rec = self.neighbor_table[node]
        self.cluster_members.discard(node)
        self.sum_weighted -= rec.aR * rec.nR
        self.sum_weight -= rec.nR
        return True


def build_data_message(state: ClusterState, own: Reading) -> DataMessage:
    agg = aggregate_reading(own, state.member_records())
    return DataMessage(state.self_id, own, agg, len(state.cluster_members))


def on_data_message(
    state: ClusterState,
    msg: DataMessage,
    own: Reading | float,
    params: SimilarityParams,
    now: float | None = None,
    blocked: Container[NodeId] = (),
) -> MembershipOutcome:
    """Handle one received data message.

    The table entry for the sender is overwritten first, then the sender is
    admitted to or dropped from the cluster depending on mutual similarity.
    Messages from ids in ``blocked`` are ignored without touching the table.
    """
    if msg.origin == state.self_id:
        raise ValueError("node received its own data message")
    if msg.origin in blocked:
        return MembershipOutcome.REJECTED
    own_value = own.value if isinstance(own, Reading) else float(own)
    seen = msg.individual_reading.timestamp if now is None else now
    state.store(msg.origin, NeighborRecord.from_message(msg, seen))
    local = state.local_aggregate(own_value)
    if mutual_similarity(msg, own_value, local, params):
        if state.add_member(msg.origin):
            return MembershipOutcome.JOINED
        return MembershipOutcome.STAYED
    if state.remove_member(msg.origin):
        return MembershipOutcome.REMOVED
    return MembershipOutcome.REJECTED


def peer_counts(state: ClusterState) -> dict[NodeId, int]:
    counts = {state.self_id: len(state.cluster_members)}
    for m in state.cluster_members:
        counts[m] = state.neighbor_table[m].nR
    return counts


def elect_leader(state: ClusterState, peer_counts: Mapping[NodeId, int]) -> NodeId:
    """Pick the id with the most neighbors; ties go to the smallest id."""
    if not peer_counts:
        raise EmptyCluster(f"node {state.self_id} has nothing to elect from")
    return min(peer_counts, key=lambda node: (-peer_counts[node], node))


def schedule_next_send(
    state: ClusterState,
    now: float,
    rng: np.random.Generator,
    period: float = DEFAULT_SEND_PERIOD,
    jitter_max: float = DEFAULT_JITTER_MAX,
) -> float:
    if now < 0:
        raise ValueError("now must be >= 0")
    at = now + period + (rng.uniform(0.0, jitter_max) if jitter_max > 0 else 0.0)
    state.next_send_at = at
    return at
