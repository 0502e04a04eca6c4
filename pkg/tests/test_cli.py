import csv
import json
import os
from pathlib import Path

import numpy as np
import pytest

import stefan_front as sf
from stefan_front import runio
from stefan_front.cli import (build_initial_data, cmd_dimension, cmd_simulate,
                              cmd_sweep, cmd_verify_bounds, load_config, main,
                              oscillation_metrics)
from stefan_front.errors import ConfigError


def write_config(tmp_path, **kw):
    cfg = {
        "params": {"gamma": 0.7,
                   "kinetics": {"family": "arrhenius", "V0": 2.0,
                                "A": 1.0, "u_inf": -1.0}},
        "grid": {"L": 240.0, "dx": 0.12},
        "solver": {"dt": 2e-3},
        "initial_data": {"kind": "zero"},
        "T_final": 0.5,
        "snapshot_times": [],
        "seed": 0,
    }
    cfg.update(kw)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return path


def read_rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


class TestConfig:
    def test_missing_kinetics_key_named(self, tmp_path):
        path = write_config(tmp_path)
        cfg = load_config(path)
        del cfg["params"]["kinetics"]["A"]
        with pytest.raises(ConfigError, match="'A'"):
            cmd_simulate(cfg, tmp_path / "out")

    def test_missing_config_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "nope.json")

    def test_overrides(self, tmp_path):
        path = write_config(tmp_path)
        cfg = load_config(path, {"solver.dt": 1e-3, "grid.L": 120.0})
        assert cfg["solver"]["dt"] == 1e-3
        assert cfg["grid"]["L"] == 120.0

    def test_cli_exit_code_on_bad_config(self, tmp_path, capsys):
        path = write_config(tmp_path)
        cfg = json.loads(path.read_text())
        del cfg["params"]["kinetics"]["V0"]
        path.write_text(json.dumps(cfg))
        rc = main(["simulate", "--config", str(path),
                   "--out", str(tmp_path / "o")])
        assert rc == 2
        assert "V0" in capsys.readouterr().err


class TestSimulate:
    def test_zero_data_first_row(self, tmp_path):
        cfg = load_config(write_config(tmp_path))
        out = cmd_simulate(cfg, tmp_path / "run")
        rows = read_rows(out / "history.csv")
        kin = sf.arrhenius(V0=2.0, A=1.0, u_inf=-1.0)
        assert float(rows[0]["v"]) == -kin.v0
        assert float(rows[0]["t"]) == 0.0

    def test_outputs_self_describing(self, tmp_path):
        cfg = load_config(write_config(
            tmp_path, T_final=1.0, snapshot_times=[0.5, 1.0],
            initial_data={"kind": "gaussian", "amplitude": 1.0, "width": 3.0},
            bounds_alpha=0.0875))
        out = cmd_simulate(cfg, tmp_path / "run")
        for name in ("config.json", "constants.json", "manifest.json",
                     "summary.json", "history.csv", "u0.csv",
                     "bounds_report.json"):
            assert (out / name).exists(), name
        manifest = runio.read_json(out / "manifest.json")
        for entry in manifest["snapshots"]:
            snap = runio.read_field_csv(out / entry["file"])
            assert snap.grid.L == 240.0
        report = runio.read_json(out / "bounds_report.json")
        assert report["all_pass"] is True
        summary = runio.read_json(out / "summary.json")
        assert summary["bounds_all_pass"] is True

    def test_snapshot_times_validated(self, tmp_path):
        cfg = load_config(write_config(tmp_path, snapshot_times=[2.0]))
        with pytest.raises(ConfigError):
            cmd_simulate(cfg, tmp_path / "run")

    def test_traveling_wave_initial_data(self, tmp_path):
        cfg = load_config(write_config(
            tmp_path, initial_data={"kind": "traveling_wave"}, T_final=0.2))
        out = cmd_simulate(cfg, tmp_path / "run")
        rows = read_rows(out / "history.csv")
        v = np.array([float(r["v"]) for r in rows])
        kin = sf.arrhenius(V0=2.0, A=1.0, u_inf=-1.0)
        grid = sf.SpatialGrid.uniform(240.0, 0.12)
        params = sf.ProblemParams(gamma=0.7, kinetics=kin, grid=grid,
                                  solver=sf.SolverConfig(dt=2e-3))
        tw = sf.traveling_wave(params)
        # deliberately coarse grid here; the tight 1e-3 hold is the
        # acceptance-resolution check
        assert np.max(np.abs(v - tw.V_star)) < 1e-2

    def test_bit_for_bit_determinism(self, tmp_path):
        base = write_config(tmp_path, T_final=0.5, snapshot_times=[0.25, 0.5],
                            initial_data={"kind": "random", "alpha": 0.0875,
                                          "target_norm": 2.0},
                            bounds_alpha=0.0875, seed=7)
        out1 = cmd_simulate(load_config(base), tmp_path / "r1")
        out2 = cmd_simulate(load_config(base), tmp_path / "r2")
        for name in sorted(p.name for p in out1.iterdir()):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name


class TestSweepAndCompare:
    def test_single_value_sweep_matches_simulate(self, tmp_path):
        cfgp = write_config(tmp_path, T_final=0.5,
                            initial_data={"kind": "traveling_wave"})
        cfg = load_config(cfgp)
        out_s = cmd_simulate(dict(cfg), tmp_path / "sim")
        out_w = cmd_sweep(dict(cfg), "kinetics.A", [1.0], tmp_path / "sweep")
        srow = runio.read_json(out_s / "summary.json")["metrics"]
        wrow = read_rows(out_w / "sweep.csv")[0]
        assert float(wrow["mean_v"]) == pytest.approx(srow["mean_v"], rel=1e-12)
        assert float(wrow["amplitude"]) == pytest.approx(srow["amplitude"],
                                                         abs=1e-15)

    def test_sweep_axis_validation(self, tmp_path):
        cfg = load_config(write_config(tmp_path))
        with pytest.raises(ConfigError):
            cmd_sweep(cfg, "kinetics.family", [1.0], tmp_path / "s")

    def test_sweep_records_failures_and_continues(self, tmp_path):
        cfg = load_config(write_config(tmp_path, T_final=0.2,
                                       initial_data={"kind": "traveling_wave"}))
        out = cmd_sweep(cfg, "params.gamma", [0.7, -1.0], tmp_path / "s")
        rows = read_rows(out / "sweep.csv")
        assert rows[0]["status"] == "ok"
        assert rows[1]["status"].startswith("failed")

    def test_sweep_worker_pool(self, tmp_path, monkeypatch):
        monkeypatch.setenv("STEFAN_FRONT_THREADS", "2")
        cfg = load_config(write_config(tmp_path, T_final=0.2,
                                       initial_data={"kind": "traveling_wave"},
                                       solver_kind="fd"))
        out = cmd_sweep(cfg, "kinetics.A", [1.0, 1.1], tmp_path / "s")
        rows = read_rows(out / "sweep.csv")
        assert [r["status"] for r in rows] == ["ok", "ok"]

    def test_fd_compare(self, tmp_path):
        path = write_config(tmp_path, T_final=0.3,
                            initial_data={"kind": "traveling_wave"})
        rc = main(["fd-compare", "--config", str(path),
                   "--out", str(tmp_path / "cmp")])
        assert rc == 0
        summary = runio.read_json(tmp_path / "cmp" / "fd_compare.json")
        assert summary["max_abs_diff"] < 1e-2
        assert (tmp_path / "cmp" / "discrepancy.csv").exists()


class TestOtherCommands:
    def test_traveling_wave_command(self, tmp_path, capsys):
        path = write_config(tmp_path)
        rc = main(["traveling-wave", "--config", str(path)])
        assert rc == 0
        out = capsys.readouterr().out
        assert "V_star" in out and "lam_plus" in out

    def test_verify_bounds_reaudit(self, tmp_path):
        cfg = load_config(write_config(
            tmp_path, T_final=1.0, snapshot_times=[0.5, 1.0],
            initial_data={"kind": "gaussian", "amplitude": 1.0, "width": 3.0},
            bounds_alpha=0.0875))
        out = cmd_simulate(cfg, tmp_path / "run")
        res = cmd_verify_bounds(out)
        assert res["all_pass"] is True
        assert res["confirmed_violations"] == []

    def test_dimension_command(self, tmp_path):
        cfg = {
            "params": {"gamma": 10.0,
                       "kinetics": {"family": "arrhenius", "V0": 1.0,
                                    "A": 0.2, "u_inf": -2.0}},
            "grid": {"L": 10.0, "dx": 0.02},
            "solver": {"dt": 1e-3},
            "initial_data": {"kind": "traveling_wave"},
            "T_final": 0.3,
            "seed": 0,
        }
        path = tmp_path / "c.json"
        path.write_text(json.dumps(cfg))
        out = cmd_dimension(load_config(path), [1, 2], tmp_path / "dim")
        for m in (1, 2):
            rep = runio.read_json(out / f"spectrum_m{m}.json")
            assert rep["mean_log_volume_rate"] < 0.0
            assert rep["dimension_estimate"] <= rep["m_dim_closed_form"]
        summary = runio.read_json(out / "dimension_summary.json")
        assert len(summary) == 2


class TestMetricsAndIO:
    def test_oscillation_metrics_on_sine(self):
        dt = 1e-3
        t = np.arange(0, 20.0, dt)
        v = -1.0 + 0.25 * np.sin(2 * np.pi * t / 2.5)
        hist = sf.FrontHistory(dt=dt, v=v, s=np.zeros_like(v),
                               boundary_temp=np.zeros_like(v))
        met = oscillation_metrics(hist)
        assert met["mean_v"] == pytest.approx(-1.0, abs=1e-2)
        assert met["amplitude"] == pytest.approx(0.5, rel=1e-2)
        assert met["period"] == pytest.approx(2.5, rel=2e-2)

    def test_field_csv_round_trip(self, tmp_path, baseline_tw):
        path = tmp_path / "f.csv"
        runio.write_field_csv(path, baseline_tw.profile)
        back = runio.read_field_csv(path)
        assert np.array_equal(back.values, baseline_tw.profile.values)
        assert back.grid == baseline_tw.profile.grid

    def test_history_csv_round_trip(self, tmp_path, baseline_params, baseline_tw):
        hist = sf.run(baseline_params, baseline_tw.profile, 0.05)
        path = tmp_path / "h.csv"
        runio.write_history_csv(path, hist)
        back = runio.read_history_csv(path)
        assert np.array_equal(back.v, hist.v)
        assert np.array_equal(back.s, hist.s)

    def test_initial_data_file_kind(self, tmp_path, baseline_params, baseline_tw):
        runio.write_field_csv(tmp_path / "u0.csv", baseline_tw.profile)
        spec = {"kind": "file", "path": "u0.csv"}
        got = build_initial_data(spec, baseline_params, tmp_path, seed=0)
        assert np.array_equal(got.values, baseline_tw.profile.values)
