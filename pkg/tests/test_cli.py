from __future__ import annotations

from pathlib import Path

import pytest

from confinit import cli
from confinit.metrics import read_csv

GRID = """\
n_nodes = 8, 10
attacker_fraction = 0.125, 0.25
duration_s = 6
area_width = 80
area_height = 80
replications = 2
seed = 3
"""


@pytest.fixture
def grid_cfg(tmp_path):
    p = tmp_path / "grid.cfg"
    p.write_text(GRID)
    return p


def run(*args):
    return cli.main([str(a) for a in args])


def test_run_writes_all_outputs(tmp_path, grid_cfg):
    out = tmp_path / "out"
    assert run("run", "--config", grid_cfg, "--out", out) == 0
    for name in ("metrics.csv", "clusters.csv", "summary.csv", "config.cfg", "traces/SHA256SUMS"):
        assert (out / name).exists(), name
    assert len(list((out / "traces").glob("run_*.jsonl"))) == 8
    metrics = read_csv(out / "metrics.csv")
    assert [int(r["run_id"]) for r in metrics] == list(range(8))
    summary = read_csv(out / "summary.csv")
    assert len(summary) == 4
    assert {r["runs"] for r in summary} == {"2"}
    assert not any(p.name.startswith(".out.") for p in tmp_path.iterdir())


def test_rerun_is_byte_identical(tmp_path, grid_cfg):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("run", "--config", grid_cfg, "--out", a) == 0
    assert run("run", "--config", grid_cfg, "--out", b, "--jobs", 2) == 0
    for name in ("metrics.csv", "clusters.csv", "summary.csv", "traces/SHA256SUMS"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_replay_reproduces_reports(tmp_path, grid_cfg):
    out = tmp_path / "out"
    assert run("run", "--config", grid_cfg, "--out", out) == 0
    again = tmp_path / "replayed"
    assert run("replay", out / "traces", "--out", again) == 0
    for name in ("metrics.csv", "clusters.csv", "summary.csv"):
        assert (out / name).read_bytes() == (again / name).read_bytes(), name


def test_overrides_beat_config_file(tmp_path, grid_cfg):
    out = tmp_path / "out"
    assert run("run", "--config", grid_cfg, "--out", out, "--n_nodes=12", "--attacker_fraction", "0.25",
               "--replications=1", "--seed", 5) == 0
    metrics = read_csv(out / "metrics.csv")
    assert [(r["n_nodes"], r["attacker_pct"]) for r in metrics] == [("12", "25.0")]
    summary = read_csv(out / "summary.csv")
    assert summary[0]["dr_ci_low"] == "n/a" and summary[0]["runs"] == "1"
    assert "seed=5" in (out / "config.cfg").read_text().splitlines()


def test_out_from_environment(tmp_path, grid_cfg, monkeypatch):
    monkeypatch.setenv("CONFINIT_OUT", str(tmp_path / "env-out"))
    assert run("run", "--config", grid_cfg, "--replications=1", "--n_nodes=8", "--attacker_fraction=0.125") == 0
    assert (tmp_path / "env-out" / "metrics.csv").exists()


@pytest.mark.parametrize("args", [
    ["run", "--config", "/nonexistent.cfg"],
    ["run", "--n_nodes=-3"],
    ["run", "--no_such_key=1"],
    ["run", "--jobs", "0"],
    ["frobnicate"],
    ["replay", "/nonexistent-dir"],
])
def test_configuration_errors_exit_1(tmp_path, args, monkeypatch):
    monkeypatch.setenv("CONFINIT_OUT", str(tmp_path / "o"))
    assert run(*args) == 1


def test_runtime_failure_leaves_no_partial_output(tmp_path, grid_cfg, monkeypatch):
    out = tmp_path / "out"
    real = cli.execute

    def flaky(plan, trace_dir):
        if plan.run_id == 3:
            raise RuntimeError("simulated crash")
        return real(plan, trace_dir)

    monkeypatch.setattr(cli, "execute", flaky)
    assert run("run", "--config", grid_cfg, "--out", out) == 2
    assert not out.exists()
    assert list(tmp_path.iterdir()) == [grid_cfg]


def test_fixtures_verb(capsys):
    assert run("fixtures") == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines and all(line.startswith("PASS") for line in lines)
