"""Scripted scenarios replaying the clustering and detection walkthroughs.

Each fixture returns a list of named checks; the ``fixtures`` CLI verb
prints them as pass/fail lines.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .clustering import ClusterState, build_data_message, elect_leader, on_data_message, peer_counts
from .config import default_config
from .domain import NeighborRecord, Reading
from .metrics import census_snapshot
from .similarity import SimilarityParams, aggregate_reading
from .simnet.prepare import prepare
from .simnet.run import run_prepared
from .simnet.topology import Topology
from .simnet.trace import EventKind

NAMES = "abcdef"


@dataclass(frozen=True)
class Check:
    fixture: str
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.fixture}: {self.name}" + (f"  ({self.detail})" if self.detail else "")


# Clustering walkthrough: own reading, then the (aR, nR) terms of each member.
# Node c at T2 is listed with four member terms over a denominator of four in
# the source; the consistent weighting 1 + sum(nR) is used here.
CLUSTERING_TABLES = {
    "T2": {
        "a": (15, [(16, 1)]),
        "b": (16, [(15, 1), (18, 1)]),
        "c": (18, [(16, 1), (16, 1), (16, 1), (17, 1)]),
        "d": (17, [(16, 1), (18, 1)]),
        "e": (16, [(17, 1), (18, 1)]),
    },
    "T3": {
        "a": (20, [(22, 1), (21, 1), (23, 1)]),
        "b": (22, [(20, 1), (23, 1)]),
        "c": (23, [(22, 1), (20, 1)]),
        "d": (21, [(24, 1), (20, 1)]),
        "e": (24, [(21, 1)]),
    },
}

# Member lists implied by the tables (which neighbor contributes each term).
T2_MEMBERS = {"a": "b", "b": "ac", "c": "bde", "d": "ce", "e": "cd"}
T3_MEMBERS = {"a": "bcd", "b": "ac", "c": "ab", "d": "ae", "e": "d"}
READINGS = {
    "T2": {"a": 15, "b": 16, "c": 18, "d": 17, "e": 16},
    "T3": {"a": 20, "b": 22, "c": 23, "d": 21, "e": 24},
}


def exact_aggregate(own: int, terms: list[tuple[int, int]]) -> Fraction:
    """Rational-arithmetic aggregate, independent of the float implementation."""
    num = Fraction(own) + sum(Fraction(a) * n for a, n in terms)
    return num / (1 + sum(n for _, n in terms))


def _records(terms: list[tuple[int, int]]) -> list[NeighborRecord]:
    return [NeighborRecord(iR=float(a), aR=float(a), nR=n, last_seen=0.0) for a, n in terms]


def _membership_matrix(members: dict[str, str]) -> np.ndarray:
    ids = {x: i for i, x in enumerate(sorted(members))}
    m = np.zeros((len(ids), len(ids)), dtype=bool)
    for x, ms in members.items():
        for y in ms:
            m[ids[x], ids[y]] = True
    return m


def clustering_fixture() -> list[Check]:
    name = "clustering"
    checks = []
    for instant, table in CLUSTERING_TABLES.items():
        for node, (own, terms) in table.items():
            got = aggregate_reading(float(own), _records(terms))
            want = exact_aggregate(own, terms)
            ok = abs(got - float(want)) <= 1e-12
            checks.append(Check(name, f"aggregate {instant}({node}) = {float(want):.6g}", ok, f"got {got!r}"))

    count, mean = census_snapshot(_membership_matrix(T2_MEMBERS), np.zeros(5, dtype=bool))
    checks.append(Check(name, "T2 membership forms one cluster of a..e", count == 1 and mean == 5.0,
                        f"{count} cluster(s), mean size {mean}"))

    # Leader as seen from node a: itself with one member, b with two.
    a = ClusterState(0)
    a.neighbor_table[1] = NeighborRecord(16.0, 16.333333333333334, 2, 0.0)
    a.add_member(1)
    leader = elect_leader(a, peer_counts(a))
    checks.append(Check(name, "T2 leader is b", leader == 1, f"elected {NAMES[leader]}"))

    # Replay both instants through the state machine over the table topology.
    edges = set()
    for members in (T2_MEMBERS, T3_MEMBERS):
        for x, ms in members.items():
            for y in ms:
                edges.add(tuple(sorted((x, y))))
    nbrs: dict[str, list[str]] = {x: [] for x in "abcde"}
    for x, y in sorted(edges):
        nbrs[x].append(y)
        nbrs[y].append(x)
    states = {x: ClusterState(i) for i, x in enumerate("abcde")}
    params = SimilarityParams(3.0)
    for instant, readings in READINGS.items():
        for _ in range(2):
            msgs = {x: build_data_message(states[x], Reading(float(readings[x]), 0.0)) for x in "abcde"}
            for x in "abcde":
                for y in nbrs[x]:
                    on_data_message(states[y], msgs[x], float(readings[y]), params)
        m = np.zeros((5, 5), dtype=bool)
        for i, x in enumerate("abcde"):
            m[i, sorted(states[x].cluster_members)] = True
        count, mean = census_snapshot(m, np.zeros(5, dtype=bool))
        checks.append(Check(name, f"{instant} replay keeps a..e in one cluster", count == 1 and mean == 5.0,
                            f"{count} cluster(s), mean size {mean}"))
    return checks


# Detection walkthrough: five honest nodes reading 14..18 and node c at 45,
# all in range of each other, lossless channel, one send per node per round.
DETECTION_HONEST = {"a": 14.0, "b": 15.0, "d": 16.0, "e": 17.0, "f": 18.0}
DETECTION_ATTACKER = "c"
DETECTION_ROUNDS = 4


def detection_run(engine: str = "fast"):
    cfg = default_config(
        n_nodes=6, area_width=10.0, area_height=10.0, tx_range=100.0,
        duration_s=float(DETECTION_ROUNDS) + 0.5, send_period_s=1.0, jitter_max_s=0.0,
        loss_probability=0.0, delay_mean_s=0.005, delay_jitter_s=0.0,
        attack_mode="fixed_value", attack_magnitude_low=45.0, attack_magnitude_high=45.0,
        reading_source="synthetic", synthetic_noise_sd=0.0, trace_level="protocol", engine=engine,
    )
    positions = np.array([[1.0 + i, 5.0] for i in range(6)])
    topo = Topology(positions, (10.0, 10.0), 100.0)
    readings = np.zeros((6, DETECTION_ROUNDS + 1))
    for x, v in DETECTION_HONEST.items():
        readings[NAMES.index(x)] = v
    readings[NAMES.index(DETECTION_ATTACKER)] = 16.0  # true value; falsified to 45
    prep = prepare(cfg, topology=topo, readings=readings,
                   attackers=frozenset({NAMES.index(DETECTION_ATTACKER)}))
    return run_prepared(prep)


def _round(t: float) -> int:
    # sends happen at whole seconds, deliveries a few ms later
    return int(np.floor(t))


def detection_fixture(engine: str = "fast") -> list[Check]:
    name = "detection"
    res = detection_run(engine)
    tr = res.trace
    c = NAMES.index(DETECTION_ATTACKER)
    honest = [NAMES.index(x) for x in DETECTION_HONEST]

    def rounds_of(kind: EventKind, node: int) -> list[int]:
        mask = (tr.kind == int(kind)) & (tr.node == node) & (tr.peer == c)
        return sorted({_round(t) for t in tr.t[mask].tolist()})

    checks = []
    sent = res.prep.sent_readings[c]
    checks.append(Check(name, "attacker broadcasts 45", bool(np.all(sent[np.isfinite(sent)] == 45.0))))
    for h in honest:
        sus = rounds_of(EventKind.SUSPECT, h)
        conv = rounds_of(EventKind.CONVICT, h) + rounds_of(EventKind.ALERT_ADOPT, h)
        blocked = rounds_of(EventKind.BLOCKED, h)
        member_ever = bool(np.any((tr.kind == int(EventKind.JOIN)) & (tr.node == h) & (tr.peer == c)))
        ok = sus[:1] == [1] and min(conv, default=None) == 2 and blocked[:1] == [3] and not member_ever
        checks.append(Check(name, f"node {NAMES[h]}: suspect@T1, attacker@T2, blocked@T3", ok,
                            f"suspect {sus}, attacker {sorted(set(conv))}, blocked {blocked}"))
    verdicts = tr.select(EventKind.CONVICT)
    if verdicts.any():
        i = int(np.nonzero(verdicts)[0][0])
        base, joint = float(tr.b[i]), float(tr.c[i])
        checks.append(Check(name, "consensus base <= 5 < joint", base <= 5.0 < joint,
                            f"base {base:.4f}, joint {joint:.4f}"))
    else:
        checks.append(Check(name, "consensus base <= 5 < joint", False, "no conviction"))
    wrong = set(tr.peer[tr.select(EventKind.CONVICT, EventKind.ALERT_ADOPT)].tolist()) - {c}
    checks.append(Check(name, "no honest node convicted", not wrong, f"convicted {sorted(wrong)}"))
    return checks


def all_fixtures() -> list[Check]:
    return clustering_fixture() + detection_fixture()
