"""Detection metrics, cluster census and cross-replication summaries."""

from __future__ import annotations

import csv
import io
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .domain import ConfinitError
from .simnet.trace import EventKind, Trace

METRIC_NAMES = ("dr", "acc", "fpr", "fnr")
NA = "n/a"


class NoAttackers(ConfinitError, ValueError):
    pass


class NoHonestNodes(ConfinitError, ValueError):
    pass


class TooFewRuns(ConfinitError, ValueError):
    pass


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int  # attackers convicted
    fn: int  # attackers never convicted
    fp: int  # honest nodes convicted
    tn: int  # honest nodes never convicted

    def __post_init__(self) -> None:
        if min(self.tp, self.fn, self.fp, self.tn) < 0:
            raise ValueError(f"negative count in {self}")

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.fp + self.tn

    @classmethod
    def from_sets(cls, attackers: Iterable[int], convicted: Iterable[int], n_nodes: int) -> ConfusionCounts:
        att = set(attackers)
        conv = set(convicted)
        tp = len(att & conv)
        fp = len(conv - att)
        return cls(tp, len(att) - tp, fp, n_nodes - len(att) - fp)


def detection_rate(c: ConfusionCounts) -> float:
    if c.tp + c.fn < 1:
        raise NoAttackers("detection rate is undefined without attackers")
    return c.tp / (c.tp + c.fn)


def accuracy(c: ConfusionCounts) -> float:
    if c.total < 1:
        raise ValueError("empty population")
    return (c.tp + c.tn) / c.total


def false_positive_rate(c: ConfusionCounts) -> float:
    if c.fp + c.tn < 1:
        raise NoHonestNodes("false positive rate is undefined without honest nodes")
    return c.fp / (c.fp + c.tn)


def false_negative_rate(c: ConfusionCounts) -> float:
    if c.fn + c.tp < 1:
        raise NoAttackers("false negative rate is undefined without attackers")
    return c.fn / (c.fn + c.tp)


def rates(c: ConfusionCounts) -> dict[str, float | None]:
    """All four rates; None where the denominator is empty."""
    out: dict[str, float | None] = {}
    for name, fn in (("dr", detection_rate), ("acc", accuracy),
                     ("fpr", false_positive_rate), ("fnr", false_negative_rate)):
        try:
            out[name] = fn(c)
        except (NoAttackers, NoHonestNodes):
            out[name] = None
    return out


def convicted_in_trace(trace: Trace) -> set[int]:
    """Every node that appears on some node's attacker list during the run."""
    mask = trace.select(EventKind.CONVICT, EventKind.ALERT_ADOPT)
    return set(trace.peer[mask].tolist())


def counts_from_trace(trace: Trace) -> ConfusionCounts:
    """Recompute the confusion counts from the trace and its header alone."""
    meta = trace.meta
    return ConfusionCounts.from_sets(meta["attackers"], convicted_in_trace(trace), meta["n_nodes"])


# -- cluster census ---------------------------------------------------------

@dataclass(frozen=True)
class ClusterCensus:
    times: np.ndarray
    counts: np.ndarray
    mean_sizes: np.ndarray  # nan where there is no cluster

    def __len__(self) -> int:
        return len(self.times)

    def rows(self) -> Iterable[tuple[float, int, float]]:
        return zip(self.times.tolist(), self.counts.tolist(), self.mean_sizes.tolist())


def census_snapshot(member: np.ndarray, blacklisted: np.ndarray) -> tuple[int, float]:
    """Clusters among the non-blacklisted nodes of one membership matrix.

    Two nodes are linked when each lists the other as a cluster member; a
    cluster is a connected component of at least two nodes.
    """
    n = member.shape[0]
    keep = ~blacklisted
    mutual = member & member.T & keep[:, None] & keep[None, :]
    if not mutual.any():
        return 0, math.nan
    _, labels = connected_components(csr_matrix(mutual), directed=False)
    sizes = np.bincount(labels, minlength=n)
    sizes = sizes[sizes >= 2]
    if sizes.size == 0:
        return 0, math.nan
    return int(sizes.size), float(sizes.mean())


def cluster_census(trace: Trace, cadence: float, duration: float | None = None) -> ClusterCensus:
    """Sample the cluster structure every ``cadence`` seconds of a run.

    Membership is rebuilt from JOIN/LEAVE events; a node counts as
    blacklisted from its first conviction or alert adoption onward.  A
    sample at time s reflects every event with t <= s.
    """
    if not cadence > 0:
        raise ValueError("cadence must be > 0")
    meta = trace.meta
    n = int(meta["n_nodes"])
    if duration is None:
        duration = float(meta["duration_s"])
    samples = np.arange(1, int(math.floor(duration / cadence + 1e-9)) + 1) * cadence
    member = np.zeros((n, n), dtype=bool)
    black = np.zeros(n, dtype=bool)

    wanted = trace.select(EventKind.JOIN, EventKind.LEAVE, EventKind.CONVICT, EventKind.ALERT_ADOPT)
    t = trace.t[wanted]
    node = trace.node[wanted].tolist()
    kind = trace.kind[wanted].tolist()
    peer = trace.peer[wanted].tolist()
    # event index of the first event after each sample time
    cut = np.searchsorted(t, samples, side="right").tolist()

    counts = np.zeros(len(samples), dtype=np.int64)
    means = np.full(len(samples), math.nan)
    j = 0
    join, leave = int(EventKind.JOIN), int(EventKind.LEAVE)
    for s_idx, stop in enumerate(cut):
        while j < stop:
            k = kind[j]
            if k == join:
                member[node[j], peer[j]] = True
            elif k == leave:
                member[node[j], peer[j]] = False
            else:
                black[peer[j]] = True
            j += 1
        counts[s_idx], means[s_idx] = census_snapshot(member, black)
    return ClusterCensus(samples.astype(float), counts, means)


# -- replication summaries --------------------------------------------------

@dataclass(frozen=True)
class Summary:
    mean: float
    ci_low: float | None
    ci_high: float | None
    runs: int


def aggregate_replications(values: Sequence[float]) -> Summary:
    """Mean and normal-approximation 95% interval, mean +/- 1.96 sd / sqrt(n)."""
    vals = [float(v) for v in values]
    if len(vals) < 2:
        raise TooFewRuns(f"need at least 2 runs for an interval, got {len(vals)}")
    arr = np.asarray(vals)
    mean = float(arr.mean())
    half = 1.96 * float(arr.std(ddof=1)) / math.sqrt(len(arr))
    return Summary(mean, mean - half, mean + half, len(arr))


def summarize(values: Sequence[float | None]) -> Summary | None:
    """Like aggregate_replications, skipping undefined values; one run gives no interval."""
    vals = [v for v in values if v is not None]
    if not vals:
        return None
    if len(vals) == 1:
        return Summary(vals[0], None, None, 1)
    return aggregate_replications(vals)


# -- CSV output ---------------------------------------------------------------

METRICS_COLUMNS = ("run_id", "n_nodes", "attacker_pct", "dr", "acc", "fpr", "fnr")
CLUSTERS_COLUMNS = ("run_id", "time", "cluster_count", "mean_size")
SUMMARY_COLUMNS = ("n_nodes", "attacker_pct", "runs") + tuple(
    f"{m}_{part}" for m in METRIC_NAMES for part in ("mean", "ci_low", "ci_high")
)


def fmt(v: float | int | None) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return NA
    if isinstance(v, float):
        return repr(v)
    return str(v)


def parse_value(text: str) -> float | None:
    return None if text == NA else float(text)


def attacker_pct(fraction: float) -> float:
    return round(fraction * 100.0, 6)


@dataclass(frozen=True)
class RunMetrics:
    run_id: int
    n_nodes: int
    attacker_pct: float
    counts: ConfusionCounts

    def row(self) -> list[str]:
        r = rates(self.counts)
        return [str(self.run_id), str(self.n_nodes), fmt(self.attacker_pct)] + [fmt(r[m]) for m in METRIC_NAMES]


def run_metrics(trace: Trace) -> RunMetrics:
    meta = trace.meta
    return RunMetrics(
        int(meta["run_id"]), int(meta["n_nodes"]), attacker_pct(float(meta["attacker_fraction"])),
        counts_from_trace(trace),
    )


def _csv_text(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def metrics_csv(runs: Sequence[RunMetrics]) -> str:
    return _csv_text(METRICS_COLUMNS, (r.row() for r in runs))


def clusters_csv(census: Mapping[int, ClusterCensus]) -> str:
    rows = []
    for run_id in sorted(census):
        for t, count, mean in census[run_id].rows():
            rows.append([str(run_id), fmt(t), str(count), fmt(mean)])
    return _csv_text(CLUSTERS_COLUMNS, rows)


def summary_rows(runs: Sequence[RunMetrics]) -> list[list[str]]:
    """One row per (n_nodes, attacker_pct) cell, in first-seen order."""
    cells: dict[tuple[int, float], list[RunMetrics]] = {}
    for r in runs:
        cells.setdefault((r.n_nodes, r.attacker_pct), []).append(r)
    out = []
    for (n, pct), members in cells.items():
        row = [str(n), fmt(pct), str(len(members))]
        per = [rates(m.counts) for m in members]
        for name in METRIC_NAMES:
            s = summarize([p[name] for p in per])
            row += [NA] * 3 if s is None else [fmt(s.mean), fmt(s.ci_low), fmt(s.ci_high)]
        out.append(row)
    return out


def summary_csv(runs: Sequence[RunMetrics]) -> str:
    return _csv_text(SUMMARY_COLUMNS, summary_rows(runs))


def read_csv(path) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
