from __future__ import annotations

import numpy as np
import pytest

from confinit.clustering import ClusterState, schedule_next_send
from confinit.ingest import ReadingStream, SyntheticSource, next_reading
from confinit.simnet import (
    ChannelDraws,
    ChannelParams,
    Topology,
    UnknownNode,
    broadcast,
    keyed_uniform,
    neighbors_in_range,
    place_nodes,
    prepare,
    run,
    stream_rng,
)
from confinit.simnet.channel import DATA, keyed_uniform_nb
from confinit.simnet.prepare import reading_series, send_schedule


def test_place_nodes_in_bounds_and_deterministic():
    t1 = place_nodes(100, (200.0, 200.0), np.random.default_rng(1))
    t2 = place_nodes(100, (200.0, 200.0), np.random.default_rng(1))
    assert t1.positions.shape == (100, 2)
    assert np.all((t1.positions >= 0) & (t1.positions <= 200))
    assert np.array_equal(t1.positions, t2.positions)


def test_single_node_has_no_neighbors():
    t = place_nodes(1, (200.0, 200.0), np.random.default_rng(0))
    assert neighbors_in_range(t, 0) == set()


def test_range_boundary_inclusive():
    t = Topology(np.array([[0.0, 0.0], [100.0, 0.0], [250.0, 0.0]]), (300.0, 300.0), 100.0)
    assert neighbors_in_range(t, 0) == {1}
    assert neighbors_in_range(t, 1) == {0}
    assert neighbors_in_range(t, 2) == set()
    with pytest.raises(UnknownNode):
        neighbors_in_range(t, 3)


def test_adjacency_symmetric_and_csr_sorted():
    t = place_nodes(60, (200.0, 200.0), np.random.default_rng(2))
    adj = t.adjacency()
    assert np.array_equal(adj, adj.T)
    ptr, idx = t.neighbor_csr()
    for i in range(60):
        row = idx[ptr[i]:ptr[i + 1]]
        assert list(row) == sorted(neighbors_in_range(t, i))


def test_pair_range_probability_matches_geometry():
    # P(distance <= r) for two uniform points in an L x L square with r = L/2
    exact = np.pi / 4 - 1 / 3 + 1 / 32
    rng = np.random.default_rng(3)
    fracs = [place_nodes(100, (200.0, 200.0), rng).adjacency().sum() / (100 * 99) for _ in range(50)]
    assert abs(np.mean(fracs) - exact) < 0.01


def test_connectivity_fraction():
    from scipy.sparse.csgraph import connected_components

    rng = np.random.default_rng(3)
    giant = []
    for _ in range(20):
        _, labels = connected_components(place_nodes(100, (200.0, 200.0), rng).adjacency(), directed=False)
        giant.append(np.bincount(labels).max() / 100)
    assert np.mean(giant) > 0.5


def test_keyed_uniform_python_matches_compiled():
    rng = np.random.default_rng(4)
    for _ in range(2000):
        key = int(rng.integers(0, 2**63))
        args = [int(x) for x in rng.integers(0, 10_000, 4)]
        sub = int(rng.integers(0, 2))
        assert keyed_uniform(key, args[0], args[1], args[2], args[3], sub) == keyed_uniform_nb(
            np.uint64(key), args[0], args[1], args[2], args[3], sub)


def test_keyed_uniform_is_uniform():
    u = np.array([keyed_uniform(99, DATA, i, 0, 1, 0) for i in range(20_000)])
    assert 0.0 <= u.min() and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 0.01
    hist, _ = np.histogram(u, bins=10, range=(0, 1))
    assert hist.min() > 1800


def _line():
    return Topology(np.array([[0.0, 0.0], [10.0, 0.0], [20.0, 0.0], [30.0, 0.0]]), (100.0, 100.0), 100.0)


def test_broadcast_lossless():
    ev = broadcast(0, "m", 1.0, _line(), ChannelParams(0.0, 0.005, 0.002), ChannelDraws(1))
    assert sorted(e.target for e in ev) == [1, 2, 3]
    assert all(1.003 <= e.at <= 1.007 for e in ev)


def test_broadcast_zero_jitter():
    ev = broadcast(1, "m", 2.0, _line(), ChannelParams(0.0, 0.005, 0.0), ChannelDraws(1))
    assert {e.at for e in ev} == {2.005}


def test_broadcast_loss_rate():
    eps = 1e-3
    chan = ChannelParams(1.0 - eps, 0.005, 0.002)
    topo = Topology(np.array([[0.0, 0.0], [1.0, 0.0]]), (10.0, 10.0), 5.0)
    delivered = sum(len(broadcast(0, None, 0.0, topo, chan, ChannelDraws(5), index=k)) for k in range(10_000))
    sigma = np.sqrt(10_000 * eps * (1 - eps))
    assert abs(delivered - 10_000 * eps) <= 3 * sigma + 1


def test_send_schedule_matches_sequential(small_config):
    for node in (0, 5):
        rng = stream_rng(small_config.seed, "jitter", node)
        st = ClusterState(node)
        seq, t = [], 0.0
        while True:
            t = schedule_next_send(st, t, rng, small_config.send_period_s, small_config.jitter_max_s)
            if t > small_config.duration_s:
                break
            seq.append(t)
        assert send_schedule(small_config, node) == seq


def test_reading_series_matches_sequential(small_config):
    times = np.array(send_schedule(small_config, 3))
    rng = stream_rng(small_config.seed, "readings", 3)
    s = ReadingStream(SyntheticSource(small_config.synthetic_base, 0.0, small_config.synthetic_noise_sd))
    seq = [next_reading(s, 3, float(t), rng).value for t in times]
    assert np.array_equal(reading_series(small_config, 3, times), np.array(seq))


def test_substreams_independent(small_config):
    a = prepare(small_config)
    b = prepare(small_config.with_(loss_probability=0.2, attack_magnitude_low=25.0))
    assert np.array_equal(a.topology.positions, b.topology.positions)
    assert np.array_equal(a.send_times, b.send_times)
    assert np.array_equal(a.true_readings, b.true_readings, equal_nan=True)
    assert a.assignment == b.assignment


def test_duration_zero_is_empty(small_config):
    res = run(small_config.with_(duration_s=0.0))
    assert len(res.trace) == 0 and res.stats.events == 0


def test_grid_config_rejected_by_run(small_config):
    from confinit.config import ConfigError

    with pytest.raises(ConfigError):
        run(small_config.with_(n_nodes=(10, 20)))
