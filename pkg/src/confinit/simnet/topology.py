"""Static node placement and range-limited neighborhoods."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..domain import ConfinitError, NodeId


class UnknownNode(ConfinitError, KeyError):
    pass


@dataclass(frozen=True)
class Topology:
    positions: np.ndarray  # shape (n, 2), meters
    area: tuple[float, float]
    tx_range: float

    def __post_init__(self) -> None:
        pos = np.asarray(self.positions, dtype=np.float64)
        if pos.ndim != 2 or pos.shape[1] != 2:
            raise ValueError("positions must have shape (n, 2)")
        w, h = self.area
        if np.any(pos < 0) or np.any(pos[:, 0] > w) or np.any(pos[:, 1] > h):
            raise ValueError("positions must lie inside the area")
        if not self.tx_range > 0:
            raise ValueError("tx_range must be > 0")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    @property
    def n_nodes(self) -> int:
        return self.positions.shape[0]

    def distance(self, a: NodeId, b: NodeId) -> float:
        return float(np.hypot(*(self.positions[a] - self.positions[b])))

    def adjacency(self) -> np.ndarray:
        """Boolean in-range matrix; the boundary (distance == range) is inclusive."""
        diff = self.positions[:, None, :] - self.positions[None, :, :]
        dist = np.hypot(diff[..., 0], diff[..., 1])
        adj = dist <= self.tx_range
        np.fill_diagonal(adj, False)
        return adj

    def neighbor_csr(self) -> tuple[np.ndarray, np.ndarray]:
        """Neighbor lists as (indptr, indices), each list sorted by id."""
        adj = self.adjacency()
        counts = adj.sum(axis=1)
        indptr = np.zeros(self.n_nodes + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        indices = np.nonzero(adj)[1].astype(np.int64)
        return indptr, indices


def place_nodes(n: int, area: tuple[float, float], rng: np.random.Generator, tx_range: float = 100.0) -> Topology:
    if n < 1:
        raise ValueError("need at least one node")
    w, h = area
    pos = np.column_stack([rng.uniform(0.0, w, n), rng.uniform(0.0, h, n)])
    return Topology(pos, (float(w), float(h)), tx_range)


def neighbors_in_range(topo: Topology, node: NodeId) -> set[NodeId]:
    if not 0 <= node < topo.n_nodes:
        raise UnknownNode(node)
    diff = topo.positions - topo.positions[node]
    dist = np.hypot(diff[:, 0], diff[:, 1])
    hits = np.nonzero(dist <= topo.tx_range)[0]
    return {int(j) for j in hits if j != node}
