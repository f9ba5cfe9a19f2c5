"""Per-node sensor reading streams, from a CSV dataset or a synthetic signal."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .domain import ConfinitError, NodeId, Reading

log = logging.getLogger(__name__)


class ColumnNotFound(ConfinitError, KeyError):
    pass


class EmptySeries(ConfinitError, ValueError):
    pass


@dataclass(frozen=True)
class LoadedSeries:
    values: list[float]
    skipped: int


def load_dataset(path: str | Path, column: str | int) -> LoadedSeries:
    """Parse one numeric column of a comma-separated file with a header row.

    Rows whose cell is missing, non-numeric or non-finite are skipped and
    counted.  ``column`` is a header name or a zero-based index.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EmptySeries(f"{path} is empty")
        header = [h.strip() for h in header]
        if isinstance(column, int) or (isinstance(column, str) and column.isdigit() and column not in header):
            idx = int(column)
            if not 0 <= idx < len(header):
                raise ColumnNotFound(f"column index {idx} out of range for {path}")
        else:
            try:
                idx = header.index(column.strip())
            except ValueError:
                raise ColumnNotFound(f"no column {column!r} in {path}") from None
        values: list[float] = []
        skipped = 0
        for row in reader:
            if not row:
                continue
            try:
                v = float(row[idx])
            except (IndexError, ValueError):
                skipped += 1
                continue
            if not math.isfinite(v):
                skipped += 1
                continue
            values.append(v)
    if not values:
        raise EmptySeries(f"no parsable values in column {column!r} of {path}")
    if skipped:
        log.warning("%s: skipped %d unparsable row(s) in column %r", path, skipped, column)
    return LoadedSeries(values, skipped)


@dataclass(frozen=True)
class DatasetSource:
    series: tuple[float, ...]
    node_offset: int = 0


@dataclass(frozen=True)
class SyntheticSource:
    base: float = 16.0
    drift_per_s: float = 0.0
    noise_sd: float = 0.5


@dataclass
class ReadingStream:
    source: DatasetSource | SyntheticSource
    cursor: int = 0


def next_reading(
    stream: ReadingStream, node: NodeId, now: float, rng: np.random.Generator | None = None
) -> Reading:
    src = stream.source
    if isinstance(src, DatasetSource):
        value = src.series[(src.node_offset + stream.cursor) % len(src.series)]
    else:
        noise = 0.0
        if src.noise_sd > 0:
            if rng is None:
                raise ValueError(f"node {node}: synthetic noise needs an rng")
            noise = float(rng.normal(0.0, src.noise_sd))
        value = src.base + src.drift_per_s * now + noise
    stream.cursor += 1
    return Reading(float(value), now)
