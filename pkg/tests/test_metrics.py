from __future__ import annotations

import math

import numpy as np
import pytest

from confinit.metrics import (
    ConfusionCounts,
    NoAttackers,
    TooFewRuns,
    accuracy,
    aggregate_replications,
    census_snapshot,
    cluster_census,
    counts_from_trace,
    detection_rate,
    false_negative_rate,
    false_positive_rate,
    summarize,
    summary_csv,
    RunMetrics,
)
from confinit.simnet import EventKind, Trace, prepare, run_prepared


def test_rates_examples():
    assert detection_rate(ConfusionCounts(9, 1, 0, 90)) == 0.9
    assert detection_rate(ConfusionCounts(10, 0, 0, 90)) == 1.0
    assert accuracy(ConfusionCounts(10, 2, 3, 85)) == 0.95
    assert accuracy(ConfusionCounts(5, 0, 0, 95)) == 1.0
    assert false_positive_rate(ConfusionCounts(0, 0, 3, 87)) == pytest.approx(0.0333, abs=1e-4)
    assert false_negative_rate(ConfusionCounts(8, 2, 0, 90)) == 0.2


def test_no_attackers():
    with pytest.raises(NoAttackers):
        detection_rate(ConfusionCounts(0, 0, 1, 99))
    with pytest.raises(NoAttackers):
        false_negative_rate(ConfusionCounts(0, 0, 1, 99))


def test_from_sets_partition():
    c = ConfusionCounts.from_sets({1, 2, 3}, {2, 3, 7}, 10)
    assert c == ConfusionCounts(2, 1, 1, 6)
    assert c.total == 10


def test_aggregate_zero_variance():
    s = aggregate_replications([0.8] * 35)
    assert s.mean == pytest.approx(0.8)
    assert s.ci_high - s.ci_low == pytest.approx(0.0, abs=1e-12)


def test_aggregate_two_values():
    s = aggregate_replications([0.9, 1.0])
    half = 1.96 * math.sqrt(0.005) / math.sqrt(2)  # sample sd of {0.9, 1.0}
    assert s.mean == pytest.approx(0.95)
    assert s.ci_high - s.mean == pytest.approx(half)
    assert half == pytest.approx(0.098, abs=1e-3)


def test_aggregate_needs_two():
    with pytest.raises(TooFewRuns):
        aggregate_replications([1.0])
    one = summarize([0.7])
    assert one.mean == 0.7 and one.ci_low is None
    assert summarize([None, None]) is None


def test_census_isolated_and_fixture():
    assert census_snapshot(np.zeros((4, 4), bool), np.zeros(4, bool)) == (0, 0) or \
        census_snapshot(np.zeros((4, 4), bool), np.zeros(4, bool))[0] == 0
    m = np.zeros((5, 5), bool)
    for a, b in [(0, 1), (1, 2), (2, 3), (3, 4)]:
        m[a, b] = m[b, a] = True
    assert census_snapshot(m, np.zeros(5, bool)) == (1, 5.0)
    black = np.zeros(5, bool)
    black[2] = True
    assert census_snapshot(m, black) == (2, 2.0)


def test_census_needs_mutual_membership():
    m = np.zeros((3, 3), bool)
    m[0, 1] = True  # one-sided
    assert census_snapshot(m, np.zeros(3, bool))[0] == 0


def _census_oracle(trace, cadence):
    # independent: replay every event per sample, components by flood fill
    n = trace.meta["n_nodes"]
    out = []
    s = cadence
    while s <= trace.meta["duration_s"] + 1e-9:
        member = [set() for _ in range(n)]
        black = set()
        for t, node, kind, peer in zip(trace.t, trace.node, trace.kind, trace.peer):
            if t > s:
                break
            if kind == EventKind.JOIN:
                member[node].add(int(peer))
            elif kind == EventKind.LEAVE:
                member[node].discard(int(peer))
            elif kind in (EventKind.CONVICT, EventKind.ALERT_ADOPT):
                black.add(int(peer))
        seen, sizes = set(), []
        for start in range(n):
            if start in seen or start in black:
                continue
            stack, comp = [start], 0
            seen.add(start)
            while stack:
                u = stack.pop()
                comp += 1
                for v in member[u]:
                    if v not in seen and v not in black and u in member[v]:
                        seen.add(v)
                        stack.append(v)
            if comp >= 2:
                sizes.append(comp)
        out.append((len(sizes), float(np.mean(sizes)) if sizes else math.nan))
        s += cadence
    return out


def test_census_matches_oracle(small_config):
    tr = run_prepared(prepare(small_config)).trace
    got = cluster_census(tr, 5.0)
    want = _census_oracle(tr, 5.0)
    assert len(got) == len(want) == 6
    for (c, m), (wc, wm) in zip(zip(got.counts.tolist(), got.mean_sizes.tolist()), want):
        assert c == wc
        assert (math.isnan(m) and math.isnan(wm)) or m == pytest.approx(wm)


def test_counts_from_trace_matches_engine(small_config):
    for seed in range(5):
        res = run_prepared(prepare(small_config.with_(seed=seed)))
        c = counts_from_trace(res.trace)
        assert c == ConfusionCounts.from_sets(res.prep.assignment.ids, res.convicted, res.prep.n_nodes)
        assert c.total == res.prep.n_nodes


def test_summary_one_row_per_cell():
    runs = [RunMetrics(i, n, 2.0, ConfusionCounts(1, 0, 0, n - 1)) for i, n in enumerate([50, 50, 75])]
    lines = summary_csv(runs).splitlines()
    assert len(lines) == 3
    assert lines[1].startswith("50,2.0,2,1.0,1.0,1.0")
    assert "n/a" in lines[2]
