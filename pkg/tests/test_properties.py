from __future__ import annotations

import numpy as np
import pytest

from confinit.config import default_config
from confinit.detection import Rejection
from confinit.invariants import PROPERTIES, Report, check_trace, run_checked
from confinit.simnet import EventKind, Trace, prepare, run_prepared
from confinit.simnet import reference

SEEDS = range(100)


def random_scenario(seed: int):
    rng = np.random.default_rng(10_000 + seed)
    return default_config(
        n_nodes=int(rng.integers(6, 19)),
        area_width=float(rng.uniform(60, 200)),
        area_height=float(rng.uniform(60, 200)),
        duration_s=float(rng.uniform(8, 20)),
        attacker_fraction=float(rng.choice([0.0, 0.1, 0.2, 0.3])),
        loss_probability=float(rng.uniform(0, 0.3)),
        synthetic_noise_sd=float(rng.uniform(0.2, 3.0)),
        attack_duty_cycle=float(rng.choice([1.0, 0.5])),
        seed=seed,
    )


@pytest.fixture(scope="module")
def reports():
    state, trace = Report(), Report()
    for seed in SEEDS:
        prep = prepare(random_scenario(seed))
        state.merge(run_checked(prep))
        trace.merge(check_trace(run_prepared(prep, "fast").trace))
    return state, trace


@pytest.mark.parametrize("prop", PROPERTIES)
def test_property_holds_on_state(reports, prop):
    state, _ = reports
    assert state.checks[prop] > 0
    assert state.failed(prop) == []


@pytest.mark.parametrize("prop", ["list_disjointness", "two_strike_rule", "flood_termination"])
def test_property_holds_on_fast_traces(reports, prop):
    _, trace = reports
    assert trace.checks[prop] > 0
    assert trace.failed(prop) == []


def test_checker_catches_single_strike_conviction(monkeypatch):
    monkeypatch.setattr(reference, "classify_on_rejection", lambda *a: Rejection.REPEAT_OFFENDER)
    cfg = default_config(n_nodes=10, duration_s=6.0, attacker_fraction=0.2, seed=4, area_width=80.0, area_height=80.0)
    rep = run_checked(prepare(cfg))
    assert rep.failed("two_strike_rule")


def _trace(rows):
    meta = {"n_nodes": 3}
    cols = list(zip(*[(t, n, int(k), p, np.nan, np.nan, np.nan) for t, n, k, p in rows]))
    return Trace.from_arrays(meta, *cols)


def test_trace_checker_flags_violations():
    bad = _trace([
        (1.0, 0, EventKind.CONVICT, 2),
        (1.5, 0, EventKind.SUSPECT, 2),
        (2.0, 1, EventKind.ALERT_FLOOD, 2),
        (2.1, 1, EventKind.ALERT_FLOOD, 2),
    ])
    rep = check_trace(bad)
    assert rep.failed("two_strike_rule") and rep.failed("list_disjointness") and rep.failed("flood_termination")
    good = _trace([(1.0, 0, EventKind.SUSPECT, 2), (2.0, 0, EventKind.CONVICT, 2), (2.0, 0, EventKind.ALERT_FLOOD, 2)])
    assert check_trace(good).ok


def test_checker_catches_unsound_membership(monkeypatch):
    from confinit import clustering

    monkeypatch.setattr(clustering, "mutual_similarity", lambda *a: True)
    cfg = default_config(n_nodes=10, duration_s=6.0, attacker_fraction=0.2, seed=4, area_width=80.0, area_height=80.0)
    assert run_checked(prepare(cfg)).failed("membership_soundness")
