"""Command line: run experiment grids, replay stored traces, check fixtures.

    confinit run --config grid.cfg --out results --jobs 2 --attacker_fraction=0.05
    confinit replay results
    confinit fixtures

Any config key can be overridden as ``--key=value`` (or ``--key value``).
Exit status: 0 success, 1 configuration error, 2 runtime failure.

Config files are flat ``key = value`` lines; ``#`` starts a comment.
``n_nodes`` and ``attacker_fraction`` accept comma-separated lists, and
every combination becomes one grid cell.  Keys and defaults:

    n_nodes = 100                  nodes per run
    area_width, area_height = 200  deployment area in meters
    tx_range = 100                 radio range in meters
    duration_s = 1200              simulated seconds per run
    send_period_s = 1.0            data message period
    jitter_max_s = 0.1             random offset of each node's first send
    cthresh = 3                    similarity threshold
    consensus_threshold = 5        consensus standard-deviation bound
    attacker_fraction = 0.10       share of nodes that falsify readings
    attack_mode = additive_offset  or fixed_value, random_fabrication
    attack_magnitude_low = 20      per-attacker magnitude range
    attack_magnitude_high = 40
    attack_active_from = 0         seconds before attacks begin
    attack_duty_cycle = 1.0        fraction of rounds falsified
    loss_probability = 0.01        independent per-receiver loss
    delay_mean_s = 0.005           delivery delay, uniform within
    delay_jitter_s = 0.002         +/- jitter around the mean
    reading_source = synthetic     or dataset
    synthetic_base = 16            synthetic readings: base value,
    synthetic_drift_per_s = 0      linear drift and
    synthetic_noise_sd = 0.5       gaussian noise
    dataset_path, dataset_column   CSV source: header row, column by name or index
    dataset_node_stride = 1        node i starts reading at row i * stride
    seed = 1                       root seed; run i uses seed + i
    replications = 35              runs per grid cell
    detection_enabled = true       false gives the clustering-only baseline
    census_cadence_s = 10          cluster census sampling period
    trace_level = protocol         or full (adds per-message events)
    engine = fast                  or reference (pure-Python event loop)
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import os
import shutil
import sys
import tempfile
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .config import ConfigError, ScenarioConfig, dump_config, parse_config
from .metrics import ClusterCensus, RunMetrics, cluster_census, clusters_csv, metrics_csv, run_metrics, summary_csv
from .simnet.run import run as run_scenario
from .simnet.trace import Trace

log = logging.getLogger("confinit")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2
DEFAULT_OUT = "confinit-out"
TRACE_DIR = "traces"
DIGEST_FILE = "SHA256SUMS"
OUTPUT_FILES = ("metrics.csv", "clusters.csv", "summary.csv")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # Bad arguments are configuration errors (exit 1), not argparse's exit 2.
    def error(self, message: str):
        raise UsageError(message)


@dataclass(frozen=True)
class RunPlan:
    run_id: int
    config: ScenarioConfig


@dataclass
class RunOutcome:
    run_id: int
    metrics: RunMetrics
    census: ClusterCensus
    digest: str


def plan_runs(cfg: ScenarioConfig) -> list[RunPlan]:
    """Every replication of every grid cell; run i uses seed = root seed + i."""
    plans = []
    for cell in cfg.cells():
        for _ in range(cfg.replications):
            run_id = len(plans)
            plans.append(RunPlan(run_id, cell.with_(seed=cfg.seed + run_id)))
    return plans


def trace_name(run_id: int) -> str:
    return f"run_{run_id:04d}.jsonl"


def execute(plan: RunPlan, trace_dir: str) -> RunOutcome:
    res = run_scenario(plan.config, run_id=plan.run_id)
    text = res.trace.to_jsonl()
    Path(trace_dir, trace_name(plan.run_id)).write_text(text, encoding="utf-8")
    log.info("run %d done: n=%d f=%.3f convicted=%d", plan.run_id, plan.config.n_nodes,
             plan.config.attacker_fraction, len(res.convicted))
    return RunOutcome(
        plan.run_id,
        run_metrics(res.trace),
        cluster_census(res.trace, plan.config.census_cadence_s),
        hashlib.sha256(text.encode()).hexdigest(),
    )


def _write_reports(dest: Path, outcomes: Sequence[RunOutcome]) -> None:
    outcomes = sorted(outcomes, key=lambda o: o.run_id)
    runs = [o.metrics for o in outcomes]
    (dest / "metrics.csv").write_text(metrics_csv(runs), encoding="utf-8")
    (dest / "clusters.csv").write_text(clusters_csv({o.run_id: o.census for o in outcomes}), encoding="utf-8")
    (dest / "summary.csv").write_text(summary_csv(runs), encoding="utf-8")


def _publish(staging: Path, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for item in sorted(staging.iterdir()):
        target = out / item.name
        if target.is_dir():
            shutil.rmtree(target)
        elif target.exists():
            target.unlink()
        os.replace(item, target)


def run_experiment(cfg: ScenarioConfig, out: str | Path, jobs: int = 1) -> int:
    """Run every planned replication and write the reports into ``out``.

    Runs write their traces into a staging directory next to ``out``; the
    reports are written and everything is moved into place only once all
    runs have succeeded, so a failure leaves no partial output behind.
    """
    out = Path(out)
    plans = plan_runs(cfg)
    out.parent.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(prefix=f".{out.name}.", dir=out.parent))
    try:
        trace_dir = staging / TRACE_DIR
        trace_dir.mkdir()
        log.info("%d run(s) over %d cell(s), jobs=%d", len(plans), len(cfg.cells()), jobs)
        if jobs > 1 and len(plans) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                outcomes = list(pool.map(execute, plans, [str(trace_dir)] * len(plans)))
        else:
            outcomes = [execute(p, str(trace_dir)) for p in plans]
        digests = "".join(f"{o.digest}  {trace_name(o.run_id)}\n" for o in outcomes)
        (trace_dir / DIGEST_FILE).write_text(digests, encoding="utf-8")
        (staging / "config.cfg").write_text(dump_config(cfg), encoding="utf-8")
        _write_reports(staging, outcomes)
        _publish(staging, out)
    except Exception:
        log.exception("experiment failed; discarding partial output")
        return EXIT_RUNTIME
    finally:
        shutil.rmtree(staging, ignore_errors=True)
    return EXIT_OK


def replay(trace_dir: str | Path, out: str | Path, cadence: float | None = None) -> int:
    """Re-derive the CSV reports from stored traces alone."""
    trace_dir = Path(trace_dir)
    if (trace_dir / TRACE_DIR).is_dir():
        trace_dir = trace_dir / TRACE_DIR
    files = sorted(trace_dir.glob("run_*.jsonl"))
    if not files:
        log.error("no traces under %s", trace_dir)
        return EXIT_CONFIG
    out = Path(out)
    staging = Path(tempfile.mkdtemp(prefix=f".{out.name}.", dir=out.parent if out.parent.exists() else None))
    try:
        outcomes = []
        for f in files:
            text = f.read_text(encoding="utf-8")
            tr = Trace.from_jsonl(text)
            step = cadence or float(tr.meta["config"]["census_cadence_s"])
            outcomes.append(RunOutcome(int(tr.meta["run_id"]), run_metrics(tr), cluster_census(tr, step),
                                       hashlib.sha256(text.encode()).hexdigest()))
        _write_reports(staging, outcomes)
        _publish(staging, out)
    except Exception:
        log.exception("replay failed")
        return EXIT_RUNTIME
    finally:
        shutil.rmtree(staging, ignore_errors=True)
    return EXIT_OK


def _split_overrides(extra: Sequence[str]) -> dict[str, str]:
    overrides: dict[str, str] = {}
    items = list(extra)
    while items:
        item = items.pop(0)
        if not item.startswith("--"):
            raise UsageError(f"unexpected argument {item!r}")
        key, eq, value = item[2:].partition("=")
        if not eq:
            if not items:
                raise UsageError(f"missing value for --{key}")
            value = items.pop(0)
        overrides[key.replace("-", "_")] = value
    return overrides


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="confinit", description="Clustering-based FDI attacker detection simulator.")
    p.add_argument("--log-level", default="WARNING", help="logging level (default WARNING)")
    sub = p.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="execute a scenario or grid config")
    r.add_argument("--config", help="flat key=value config file")
    r.add_argument("--out", help="output directory (default $CONFINIT_OUT or ./confinit-out)")
    r.add_argument("--seed", type=int, help="root seed")
    r.add_argument("--jobs", type=int, default=1, help="parallel runs (default 1)")

    rp = sub.add_parser("replay", help="re-derive reports from stored traces")
    rp.add_argument("traces", help="directory holding run_*.jsonl traces (or an output dir)")
    rp.add_argument("--out", help="where to write the reports (default: the traces' output dir)")
    rp.add_argument("--cadence", type=float, help="census cadence in seconds (default: from trace)")

    sub.add_parser("fixtures", help="run the scripted walkthrough scenarios")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args, extra = parser.parse_known_args(argv)
        logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
        if args.verb == "run":
            overrides = _split_overrides(extra)
            if args.seed is not None:
                overrides["seed"] = str(args.seed)
            if args.jobs < 1:
                raise UsageError("--jobs must be >= 1")
            cfg = parse_config(args.config, overrides)
            out = args.out or os.environ.get("CONFINIT_OUT") or DEFAULT_OUT
            return run_experiment(cfg, out, args.jobs)
        if extra:
            raise UsageError(f"unexpected arguments {extra}")
        if args.verb == "replay":
            src = Path(args.traces)
            default = src.parent if src.name == TRACE_DIR else src
            return replay(src, args.out or default, args.cadence)
        from .fixtures import all_fixtures

        checks = all_fixtures()
        for c in checks:
            print(c.line())
        return EXIT_OK if all(c.passed for c in checks) else EXIT_RUNTIME
    except (ConfigError, UsageError, FileNotFoundError) as exc:
        print(f"confinit: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
