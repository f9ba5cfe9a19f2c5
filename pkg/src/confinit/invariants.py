"""Protocol invariants checked over whole simulated runs.

Two independent views are offered.  ``run_checked`` drives the reference
engine and inspects node state after every event; ``check_trace`` replays a
protocol-level trace (from either engine) and rebuilds the suspect and
attacker lists from the logged events alone.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

from .similarity import aggregate_reading
from .simnet.prepare import PreparedRun
from .simnet.reference import ReferenceEngine
from .simnet.trace import EventKind, Trace

PROPERTIES = (
    "list_disjointness",
    "blacklist_monotonicity",
    "two_strike_rule",
    "membership_soundness",
    "flood_termination",
)

# Independent recomputation of the similarity test may differ from the
# engine's running sums by a few ulps; only flag clear-cut failures.
_SLACK = 1e-9


@dataclass
class Report:
    events: int = 0
    checks: Counter = field(default_factory=Counter)
    violations: list[tuple[str, float, int, str]] = field(default_factory=list)

    def fail(self, prop: str, t: float, node: int, detail: str) -> None:
        self.violations.append((prop, t, node, detail))

    def failed(self, prop: str) -> list[tuple[str, float, int, str]]:
        return [v for v in self.violations if v[0] == prop]

    @property
    def ok(self) -> bool:
        return not self.violations

    def merge(self, other: Report) -> None:
        self.events += other.events
        self.checks.update(other.checks)
        self.violations.extend(other.violations)


class CheckedEngine(ReferenceEngine):
    """Reference engine that asserts the invariants at every event boundary."""

    def __init__(self, prep: PreparedRun):
        super().__init__(prep)
        self.report = Report()
        self.seen_attackers = [set() for _ in self.nodes]
        # (receiver, origin) -> whether the last judged message passed the test
        self.last_similar: dict[tuple[int, int], bool] = {}
        self.floods: Counter = Counter()

    def _flood_alert(self, sender: int, ref: int, now: float) -> None:
        key = (sender, self.alerts[ref].attacker_id)
        self.floods[key] += 1
        self.report.checks["flood_termination"] += 1
        if self.floods[key] > 1:
            self.report.fail("flood_termination", now, sender, f"re-flooded alert on {key[1]}")
        super()._flood_alert(sender, ref, now)

    def on_timer(self, now: float, i: int, k: int) -> None:
        super().on_timer(now, i, k)
        self._check_node(now, i)

    def on_deliver(self, now: float, r: int, ref: int) -> None:
        node = self.nodes[r]
        msg = self.messages[ref]
        o = msg.origin
        was_suspect = o in node.detect.suspects
        was_attacker = o in node.detect.attackers
        members_before = set(node.cluster.cluster_members)
        judged = not (self.detection and node.honest and was_attacker) and not math.isnan(node.own)
        super().on_deliver(now, r, ref)
        rep = self.report
        if judged:
            table = node.cluster.neighbor_table
            agg = aggregate_reading(node.own, [table[m] for m in sorted(members_before)])
            cth = self.sim.cthresh
            d1, d2 = abs(msg.iR - agg), abs(node.own - msg.aR)
            if d1 < cth - _SLACK and d2 < cth - _SLACK:
                self.last_similar[(r, o)] = True
            elif d1 >= cth + _SLACK or d2 >= cth + _SLACK:
                self.last_similar[(r, o)] = False
            else:
                self.last_similar.pop((r, o), None)  # too close to call
        if o in node.detect.attackers and not was_attacker:
            rep.checks["two_strike_rule"] += 1
            if not was_suspect:
                rep.fail("two_strike_rule", now, r, f"convicted {o} on its first failure")
        self._check_node(now, r)

    def on_alert(self, now: float, x: int, ref: int) -> None:
        super().on_alert(now, x, ref)
        self._check_node(now, x)

    def _check_node(self, now: float, i: int) -> None:
        rep = self.report
        rep.events += 1
        node = self.nodes[i]
        ids = node.detect.attackers.ids
        rep.checks["list_disjointness"] += 1
        both = set(node.detect.suspects) & ids
        if both:
            rep.fail("list_disjointness", now, i, f"{sorted(both)} on both lists")
        rep.checks["blacklist_monotonicity"] += 1
        lost = self.seen_attackers[i] - ids
        if lost:
            rep.fail("blacklist_monotonicity", now, i, f"{sorted(lost)} left the attacker list")
        self.seen_attackers[i] = set(ids)
        for m in node.cluster.cluster_members:
            rep.checks["membership_soundness"] += 1
            if self.last_similar.get((i, m)) is False:
                rep.fail("membership_soundness", now, i, f"member {m} failed its last similarity test")

    def finish(self) -> Report:
        rep = self.report
        rep.checks["flood_termination"] += 1
        if self.heap and self.heap[0][0] <= self.duration:
            rep.fail("flood_termination", self.duration, -1, "event queue not drained")
        if self.stats.alert_deliveries > self.stats.alerts_sent:
            rep.fail("flood_termination", self.duration, -1, "more alert deliveries than transmissions")
        return rep


def run_checked(prep: PreparedRun) -> Report:
    eng = CheckedEngine(prep)
    eng.run()
    return eng.finish()


def check_trace(trace: Trace) -> Report:
    """Replay a protocol-level trace and check the list invariants on it."""
    rep = Report()
    n = int(trace.meta["n_nodes"])
    suspects = [set() for _ in range(n)]
    attackers = [set() for _ in range(n)]
    floods: Counter = Counter()
    k_susp, k_unsusp, k_clear = int(EventKind.SUSPECT), int(EventKind.UNSUSPECT), int(EventKind.CLEAR)
    k_conv, k_adopt, k_flood = int(EventKind.CONVICT), int(EventKind.ALERT_ADOPT), int(EventKind.ALERT_FLOOD)
    for t, node, kind, peer in zip(trace.t.tolist(), trace.node.tolist(), trace.kind.tolist(), trace.peer.tolist()):
        rep.events += 1
        if kind == k_susp:
            if peer in attackers[node]:
                rep.fail("list_disjointness", t, node, f"suspected convicted node {peer}")
            suspects[node].add(peer)
        elif kind in (k_unsusp, k_clear):
            suspects[node].discard(peer)
        elif kind == k_conv:
            rep.checks["two_strike_rule"] += 1
            if peer not in suspects[node]:
                rep.fail("two_strike_rule", t, node, f"convicted {peer} without a prior strike")
            suspects[node].discard(peer)
            attackers[node].add(peer)
        elif kind == k_adopt:
            suspects[node].discard(peer)
            attackers[node].add(peer)
        elif kind == k_flood:
            floods[(node, peer)] += 1
            rep.checks["flood_termination"] += 1
            if floods[(node, peer)] > 1:
                rep.fail("flood_termination", t, node, f"re-flooded alert on {peer}")
        rep.checks["list_disjointness"] += 1
        if suspects[node] & attackers[node]:
            rep.fail("list_disjointness", t, node, f"{sorted(suspects[node] & attackers[node])} on both lists")
    return rep
