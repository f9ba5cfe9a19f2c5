from __future__ import annotations

import numpy as np
import pytest

from confinit.ingest import (
    ColumnNotFound,
    DatasetSource,
    EmptySeries,
    ReadingStream,
    SyntheticSource,
    load_dataset,
    next_reading,
)


def write(tmp_path, text):
    p = tmp_path / "data.csv"
    p.write_text(text)
    return p


def test_load_simple(tmp_path):
    p = write(tmp_path, "pressure\n14\n15\n16\n")
    out = load_dataset(p, "pressure")
    assert out.values == [14.0, 15.0, 16.0] and out.skipped == 0


def test_load_by_index(tmp_path):
    p = write(tmp_path, "t,pressure\n0,14\n1,15\n")
    assert load_dataset(p, 1).values == [14.0, 15.0]
    assert load_dataset(p, "1").values == [14.0, 15.0]


def test_corrupt_row_skipped(tmp_path):
    rows = [str(float(i)) for i in range(100)]
    rows[40] = "oops"
    p = write(tmp_path, "v\n" + "\n".join(rows) + "\n")
    out = load_dataset(p, "v")
    assert len(out.values) == 99 and out.skipped == 1


def test_round_trip(tmp_path):
    series = np.random.default_rng(0).normal(16, 1, 500).tolist()
    p = write(tmp_path, "v\n" + "\n".join(repr(x) for x in series) + "\n")
    assert load_dataset(p, "v").values == series


def test_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_dataset(tmp_path / "missing.csv", "v")
    p = write(tmp_path, "v\n1\n")
    with pytest.raises(ColumnNotFound):
        load_dataset(p, "w")
    with pytest.raises(EmptySeries):
        load_dataset(write(tmp_path, "v\nx\ny\n"), "v")


def test_synthetic_constant():
    s = ReadingStream(SyntheticSource(16.0, 0.0, 0.0))
    assert {next_reading(s, 0, t).value for t in range(10)} == {16.0}


def test_dataset_wraps():
    s = ReadingStream(DatasetSource((14.0, 15.0, 16.0), node_offset=1))
    assert [next_reading(s, 0, 0.0).value for _ in range(4)] == [15.0, 16.0, 14.0, 15.0]


def test_synthetic_noise_sd():
    s = ReadingStream(SyntheticSource(16.0, 0.0, 0.5))
    r = np.random.default_rng(4)
    vals = [next_reading(s, 0, 0.0, r).value for _ in range(10_000)]
    assert abs(np.std(vals, ddof=1) - 0.5) < 0.02


def test_honest_readings_coherent():
    # two honest nodes' simultaneous default readings differ by less than 3
    r = np.random.default_rng(8)
    a = ReadingStream(SyntheticSource())
    b = ReadingStream(SyntheticSource())
    close = sum(abs(next_reading(a, 0, 0.0, r).value - next_reading(b, 1, 0.0, r).value) < 3.0 for _ in range(10_000))
    assert close / 10_000 > 0.99
