"""Everything about a run that does not depend on protocol decisions.

Placement, send schedules, readings and attacker falsification are fixed
up front from named sub-streams of the root seed, so both engines consume
identical inputs and one knob never shifts another knob's random draws.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..attack import AttackerAssignment, AttackProfile, assign_attackers, falsify
from ..config import ScenarioConfig, validate
from ..domain import Reading
from ..ingest import DatasetSource, SyntheticSource, load_dataset
from .channel import ChannelParams
from .topology import Topology, place_nodes

STREAMS = {
    "placement": 0,
    "channel": 1,
    "attack": 2,
    "jitter": 3,
    "readings": 4,
    "assignment": 5,
}


def stream_rng(seed: int, name: str, *sub: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(STREAMS[name], *sub)))


def stream_key(seed: int, name: str) -> int:
    ss = np.random.SeedSequence(seed, spawn_key=(STREAMS[name],))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass
class PreparedRun:
    config: ScenarioConfig
    topology: Topology
    nbr_ptr: np.ndarray
    nbr_idx: np.ndarray
    send_times: np.ndarray  # (n, K), +inf padded
    true_readings: np.ndarray  # (n, K)
    sent_readings: np.ndarray  # (n, K), what each node broadcasts
    assignment: AttackerAssignment
    profiles: dict[int, AttackProfile] = field(default_factory=dict)
    channel_key: int = 0
    run_id: int = 0

    @property
    def n_nodes(self) -> int:
        return self.topology.n_nodes

    @property
    def channel(self) -> ChannelParams:
        c = self.config
        return ChannelParams(c.loss_probability, c.delay_mean_s, c.delay_jitter_s)

    def honest_mask(self) -> np.ndarray:
        mask = np.ones(self.n_nodes, dtype=np.bool_)
        mask[list(self.assignment.ids)] = False
        return mask

    def neighbors(self, node: int) -> np.ndarray:
        return self.nbr_idx[self.nbr_ptr[node]:self.nbr_ptr[node + 1]]

    def meta(self) -> dict:
        cfg = self.config.as_dict()
        return {
            "run_id": self.run_id,
            "seed": self.config.seed,
            "n_nodes": self.n_nodes,
            "attacker_fraction": self.config.attacker_fraction,
            "attackers": sorted(self.assignment.ids),
            "duration_s": self.config.duration_s,
            "detection_enabled": self.config.detection_enabled,
            "config": cfg,
        }


def send_schedule(cfg: ScenarioConfig, node: int) -> list[float]:
    """Send instants of one node: each is the previous plus period plus jitter.

    Same arithmetic and draw order as repeated schedule_next_send calls, with
    the jitter draws taken in batches.
    """
    rng = stream_rng(cfg.seed, "jitter", node)
    period, jmax, end = cfg.send_period_s, cfg.jitter_max_s, cfg.duration_s
    batch = int(end / period) + 2
    times: list[float] = []
    t = 0.0
    while True:
        jitter = rng.uniform(0.0, jmax, batch) if jmax > 0 else np.zeros(batch)
        for j in jitter.tolist():
            t = t + period + j
            if t > end:
                return times
            times.append(t)


def _reading_source(cfg: ScenarioConfig, node: int, series: tuple[float, ...] | None):
    if cfg.reading_source == "dataset":
        assert series is not None
        return DatasetSource(series, node * cfg.dataset_node_stride)
    return SyntheticSource(cfg.synthetic_base, cfg.synthetic_drift_per_s, cfg.synthetic_noise_sd)


def reading_series(
    cfg: ScenarioConfig, node: int, times: np.ndarray, series: tuple[float, ...] | None = None
) -> np.ndarray:
    """True readings of one node at the given send instants.

    Vectorized equivalent of calling next_reading once per send.
    """
    src = _reading_source(cfg, node, series)
    count = len(times)
    if isinstance(src, DatasetSource):
        data = np.asarray(src.series, dtype=np.float64)
        return data[(src.node_offset + np.arange(count)) % len(data)]
    noise = np.zeros(count)
    if src.noise_sd > 0:
        noise = stream_rng(cfg.seed, "readings", node).normal(0.0, src.noise_sd, count)
    return src.base + src.drift_per_s * np.asarray(times) + noise


def prepare(
    config: ScenarioConfig,
    *,
    run_id: int = 0,
    topology: Topology | None = None,
    readings: np.ndarray | None = None,
    attackers: frozenset[int] | None = None,
) -> PreparedRun:
    """Fix every input of a run.

    ``topology``, ``readings`` (true per-send readings, shape (n, K)) and
    ``attackers`` override the generated ones; scripted fixtures use them.
    """
    cfg = validate(config)
    if cfg.is_grid:
        raise ValueError("prepare() needs a single grid cell; use config.cells()")
    n = cfg.n_nodes if topology is None else topology.n_nodes
    if topology is None:
        topology = place_nodes(n, (cfg.area_width, cfg.area_height), stream_rng(cfg.seed, "placement"), cfg.tx_range)
    nbr_ptr, nbr_idx = topology.neighbor_csr()

    schedules = [send_schedule(cfg, i) for i in range(n)]
    k_max = max((len(s) for s in schedules), default=0)
    send_times = np.full((n, k_max), np.inf)
    for i, s in enumerate(schedules):
        send_times[i, : len(s)] = s

    if attackers is None:
        assignment = assign_attackers(n, cfg.attacker_fraction, stream_rng(cfg.seed, "assignment"))
    else:
        assignment = AttackerAssignment(len(attackers) / n, frozenset(attackers))

    series = None
    if readings is None and cfg.reading_source == "dataset":
        series = tuple(load_dataset(cfg.dataset_path, cfg.dataset_column).values)

    true = np.full((n, k_max), np.nan)
    sent = np.full((n, k_max), np.nan)
    base_profile = cfg.attack_profile()
    profiles: dict[int, AttackProfile] = {}
    for i in range(n):
        count = len(schedules[i])
        if readings is not None:
            true[i, :count] = readings[i, :count]
        else:
            true[i, :count] = reading_series(cfg, i, send_times[i, :count], series)
        sent[i, :count] = true[i, :count]
        if i in assignment.ids:
            rng = stream_rng(cfg.seed, "attack", i)
            profile = base_profile.realize(rng)
            profiles[i] = profile
            for k in range(count):
                r = Reading(float(true[i, k]), float(send_times[i, k]))
                sent[i, k] = falsify(r, profile, r.timestamp, rng).value

    return PreparedRun(
        config=cfg,
        topology=topology,
        nbr_ptr=nbr_ptr,
        nbr_idx=nbr_idx,
        send_times=send_times,
        true_readings=true,
        sent_readings=sent,
        assignment=assignment,
        profiles=profiles,
        channel_key=stream_key(cfg.seed, "channel"),
        run_id=run_id,
    )
