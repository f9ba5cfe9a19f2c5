"""Neighbor-count weighted aggregate reading and the similarity predicate."""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass

from .domain import DataMessage, NeighborRecord, Reading


@dataclass(frozen=True)
class SimilarityParams:
    cthresh: float = 3.0

    def __post_init__(self) -> None:
        if not self.cthresh > 0:
            raise ValueError(f"cthresh must be > 0, got {self.cthresh}")


def _value(own: Reading | float) -> float:
    return own.value if isinstance(own, Reading) else float(own)


def aggregate_reading(own: Reading | float, neighbors: Iterable[NeighborRecord]) -> float:
    """Return ``(X + sum(aR * nR)) / (1 + sum(nR))`` over the given records.

    ``X`` is the node's own reading.  With no neighbors the result is ``X``.
    Records are summed in iteration order, so callers wanting reproducible
    floating point should pass them sorted by node id.
    """
    weighted = _value(own)
    weight = 1
    for rec in neighbors:
        weighted += rec.aR * rec.nR
        weight += rec.nR
    return weighted / weight


def local_aggregate(own: float, sum_weighted: float, sum_weight: int) -> float:
    # Same quantity as aggregate_reading, from running sums kept by ClusterState.
    return (own + sum_weighted) / (1 + sum_weight)


def is_similar(candidate: float, own_aggregate: float, params: SimilarityParams) -> bool:
    return abs(candidate - own_aggregate) < params.cthresh


def mutual_similarity(
    remote: DataMessage,
    local_individual: float,
    local_aggregate: float,
    params: SimilarityParams,
) -> bool:
    """Both directions must agree: the remote reading against our aggregate
    and our reading against the remote aggregate."""
    return is_similar(remote.iR, local_aggregate, params) and is_similar(
        local_individual, remote.aR, params
    )
