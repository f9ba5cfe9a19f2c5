"""Reference engine: a plain heapq event loop over per-node protocol objects.

It calls the clustering and detection modules exactly as a node would and is
the behavioral definition the compiled engine is checked against.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from ..clustering import ClusterState, MembershipOutcome, build_data_message, elect_leader, on_data_message, peer_counts
from ..detection import (
    AlertOutcome,
    ConsensusParams,
    DetectionState,
    Rejection,
    TooFewParticipants,
    Verdict,
    classify_on_rejection,
    clear_suspect,
    evaluate_suspect,
    on_alert,
    raise_alert,
)
from ..domain import AlertMessage, DataMessage, NeighborRecord, Reading
from ..similarity import SimilarityParams
from .channel import ALERT_FLOOD, ALERT_UNICAST, DATA, ChannelDraws
from .prepare import PreparedRun
from .trace import EventKind, Trace

TIMER, DELIVER, ALERT = 0, 1, 2
NAN = math.nan

_VERDICT_KIND = {
    Verdict.ATTACKER: EventKind.CONVICT,
    Verdict.CLEARED: EventKind.CLEAR,
    Verdict.INCONCLUSIVE: EventKind.INCONCLUSIVE,
}


@dataclass
class NodeRuntime:
    cluster: ClusterState
    detect: DetectionState
    honest: bool
    own: float = NAN
    blocked_logged: set[int] = field(default_factory=set)


@dataclass
class RunStats:
    sends: int = 0
    deliveries: int = 0
    drops: int = 0
    in_range_pairs: int = 0
    alerts_sent: int = 0
    alert_deliveries: int = 0
    events: int = 0


class ReferenceEngine:
    def __init__(self, prep: PreparedRun):
        self.prep = prep
        cfg = prep.config
        self.sim = SimilarityParams(cfg.cthresh)
        self.consensus = ConsensusParams(cfg.consensus_threshold)
        self.chan = prep.channel
        self.draws = ChannelDraws(prep.channel_key)
        self.detection = cfg.detection_enabled
        self.full = cfg.trace_level == "full"
        self.duration = cfg.duration_s
        honest = prep.honest_mask()
        self.nodes = [
            NodeRuntime(ClusterState(i), DetectionState(i), bool(honest[i])) for i in range(prep.n_nodes)
        ]
        self.neighbors = [prep.neighbors(i).tolist() for i in range(prep.n_nodes)]
        self.heap: list[tuple[float, int, int, int, int]] = []
        self.seq = 0
        self.messages: list[DataMessage] = []
        self.alerts: list[AlertMessage] = []
        self.stats = RunStats()
        self.first_conviction: dict[int, float] = {}
        self.rows: list[tuple[float, int, int, int, float, float, float]] = []

    # -- plumbing -----------------------------------------------------------
    def _push(self, at: float, kind: int, target: int, ref: int) -> None:
        heapq.heappush(self.heap, (at, self.seq, kind, target, ref))
        self.seq += 1

    def _log(self, t: float, node: int, kind: EventKind, peer: int, a=NAN, b=NAN, c=NAN) -> None:
        self.rows.append((t, node, int(kind), peer, float(a), float(b), float(c)))

    def _elect(self, i: int, now: float) -> None:
        st = self.nodes[i].cluster
        leader = elect_leader(st, peer_counts(st))
        if leader != st.leader:
            st.leader = leader
            self._log(now, i, EventKind.LEADER, leader)

    def _flood_alert(self, sender: int, ref: int, now: float) -> None:
        alert = self.alerts[ref]
        self._log(now, sender, EventKind.ALERT_FLOOD, alert.attacker_id)
        for r in self.neighbors[sender]:
            self.stats.alerts_sent += 1
            if self.draws.lost(self.chan, ALERT_FLOOD, sender, alert.attacker_id, r):
                continue
            self._push(now + self.draws.delay(self.chan, ALERT_FLOOD, sender, alert.attacker_id, r), ALERT, r, ref)

    def _convict(self, now: float, attacker: int) -> None:
        self.first_conviction.setdefault(attacker, now)

    # -- handlers -----------------------------------------------------------
    def on_timer(self, now: float, i: int, k: int) -> None:
        node = self.nodes[i]
        node.own = float(self.prep.sent_readings[i, k])
        self._elect(i, now)
        node.cluster.resync()
        msg = build_data_message(node.cluster, Reading(node.own, now))
        ref = len(self.messages)
        self.messages.append(msg)
        self.stats.sends += 1
        if self.full:
            self._log(now, i, EventKind.SEND, -1, msg.iR, msg.aR, msg.nR)
        for r in self.neighbors[i]:
            self.stats.in_range_pairs += 1
            if self.draws.lost(self.chan, DATA, i, k, r):
                self.stats.drops += 1
                if self.full:
                    self._log(now, r, EventKind.DROP, i)
                continue
            self.stats.deliveries += 1
            self._push(now + self.draws.delay(self.chan, DATA, i, k, r), DELIVER, r, ref)
        if k + 1 < self.prep.send_times.shape[1]:
            nxt = float(self.prep.send_times[i, k + 1])
            if nxt <= self.duration:
                self._push(nxt, TIMER, i, k + 1)

    def on_deliver(self, now: float, r: int, ref: int) -> None:
        msg = self.messages[ref]
        o = msg.origin
        node = self.nodes[r]
        if self.full:
            self._log(now, r, EventKind.DELIVER, o)
        guarded = self.detection and node.honest
        if guarded and o in node.detect.attackers:
            if self.full or o not in node.blocked_logged:
                node.blocked_logged.add(o)
                self._log(now, r, EventKind.BLOCKED, o)
            return
        if math.isnan(node.own):
            # No reading of our own yet: remember the neighbor, judge nothing.
            node.cluster.store(o, NeighborRecord.from_message(msg, now))
            return
        outcome = on_data_message(node.cluster, msg, node.own, self.sim, now=now)
        if outcome is MembershipOutcome.JOINED:
            self._log(now, r, EventKind.JOIN, o)
        elif outcome is MembershipOutcome.REMOVED:
            self._log(now, r, EventKind.LEAVE, o)
        if outcome.changed:
            self._elect(r, now)
        if not guarded:
            return
        det = node.detect
        if outcome.similar:
            if clear_suspect(det, o):
                self._log(now, r, EventKind.UNSUSPECT, o, msg.iR)
            return
        if classify_on_rejection(det, o, msg.iR, now) is Rejection.NEW_SUSPECT:
            self._log(now, r, EventKind.SUSPECT, o, msg.iR)
            return
        st = node.cluster
        participants = [node.own] + [st.neighbor_table[m].iR for m in sorted(st.cluster_members)]
        try:
            res = evaluate_suspect(msg.iR, participants, self.consensus)
        except TooFewParticipants:
            self._log(now, r, EventKind.DEFERRED, o, msg.iR)
            return
        self._log(now, r, _VERDICT_KIND[res.verdict], o, msg.iR, res.base, res.joint)
        if res.verdict is Verdict.CLEARED:
            clear_suspect(det, o)
        elif res.verdict is Verdict.ATTACKER:
            alert = raise_alert(det, o, msg.iR, r, now)
            self._convict(now, o)
            aref = len(self.alerts)
            self.alerts.append(alert)
            leader = st.leader
            if leader == r:
                self._flood_alert(r, aref, now)
            else:
                self._log(now, r, EventKind.ALERT_SEND, o, leader)
                self.stats.alerts_sent += 1
                if not self.draws.lost(self.chan, ALERT_UNICAST, r, o, leader):
                    self._push(now + self.draws.delay(self.chan, ALERT_UNICAST, r, o, leader), ALERT, leader, aref)

    def on_alert(self, now: float, x: int, ref: int) -> None:
        node = self.nodes[x]
        if not (self.detection and node.honest):
            return
        alert = self.alerts[ref]
        if alert.attacker_id == x:
            return
        self.stats.alert_deliveries += 1
        if on_alert(node.detect, alert) is AlertOutcome.DUPLICATE:
            if self.full:
                self._log(now, x, EventKind.ALERT_DUP, alert.attacker_id, alert.detector_id)
            return
        self._log(now, x, EventKind.ALERT_ADOPT, alert.attacker_id, alert.detector_id)
        self._convict(now, alert.attacker_id)
        if node.cluster.remove_member(alert.attacker_id):
            self._log(now, x, EventKind.LEAVE, alert.attacker_id)
            self._elect(x, now)
        if node.cluster.leader == x:
            self._flood_alert(x, ref, now)

    # -- loop ---------------------------------------------------------------
    def run(self) -> None:
        st = self.prep.send_times
        if st.shape[1]:
            for i in range(self.prep.n_nodes):
                if st[i, 0] <= self.duration:
                    self._push(float(st[i, 0]), TIMER, i, 0)
        while self.heap:
            at, _, kind, target, ref = heapq.heappop(self.heap)
            if at > self.duration:
                break
            self.stats.events += 1
            if kind == TIMER:
                self.on_timer(at, target, ref)
            elif kind == DELIVER:
                self.on_deliver(at, target, ref)
            else:
                self.on_alert(at, target, ref)

    def trace(self) -> Trace:
        cols = list(zip(*self.rows)) if self.rows else [[] for _ in range(7)]
        return Trace.from_arrays(self.prep.meta(), *cols)


def run_reference(prep: PreparedRun):
    from .run import FinalState, RunResult

    eng = ReferenceEngine(prep)
    eng.run()
    n = prep.n_nodes
    final = FinalState(
        members=[frozenset(nd.cluster.cluster_members) for nd in eng.nodes],
        leaders=np.array([-1 if nd.cluster.leader is None else nd.cluster.leader for nd in eng.nodes], dtype=np.int64),
        attackers=[frozenset(nd.detect.attackers.ids) for nd in eng.nodes],
        suspects=[frozenset(nd.detect.suspects) for nd in eng.nodes],
    )
    conv = np.full(n, np.inf)
    for node, t in eng.first_conviction.items():
        conv[node] = t
    return RunResult(prep=prep, trace=eng.trace(), final=final, first_conviction=conv, stats=eng.stats)
