"""Run orchestration: configuration, simulation, sweeps and audits.

No interactive UI; every command writes a self-describing output directory
(config echo, constants, CSV data, JSON reports) that can be re-audited
later.  Sweep workers share nothing mutable and results merge by value
index, so identical configurations reproduce bit for bit.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import runio
from .bounds import RunArtifacts, compute_constants, confirm_violations, verify_apriori
from .errors import ConfigError, StefanFrontError
from .interface_solver import run as ie_run
from .interface_solver import traveling_wave
from .kinetics import arrhenius, custom, from_table
from .params import ProblemParams, SolverConfig
from .reconstruction import reconstruct, t1_apply, t2_apply
from .reference_pde import fd_run
from .spaces import GridField, SpatialGrid
from .tangent import volume_growth

__all__ = ["main", "load_config", "cmd_simulate", "cmd_dimension",
           "cmd_sweep", "cmd_fd_compare", "cmd_traveling_wave",
           "cmd_verify_bounds", "build_initial_data", "oscillation_metrics"]

ENV_THREADS = "STEFAN_FRONT_THREADS"


# ---------------------------------------------------------------------------
# configuration

def _need(mapping: dict, key: str, where: str):
    if key not in mapping:
        raise ConfigError(f"missing key '{key}' in {where} section")
    return mapping[key]


def build_kinetics(spec: dict, base_dir: Path):
    family = str(_need(spec, "family", "kinetics")).lower()
    V0 = float(_need(spec, "V0", "kinetics"))
    if family == "arrhenius":
        return arrhenius(V0=V0, A=float(_need(spec, "A", "kinetics")),
                         u_inf=float(_need(spec, "u_inf", "kinetics")))
    if family == "table":
        table_path = base_dir / str(_need(spec, "table_path", "kinetics"))
        rows = np.loadtxt(table_path, delimiter=",", ndmin=2)
        return from_table(rows[:, 0], rows[:, 1], V0=V0)
    raise ConfigError(f"unknown kinetics family '{family}'")


def load_config(path, overrides: dict | None = None) -> dict:
    """Read and normalize a run configuration (JSON)."""
    path = Path(path)
    try:
        cfg = runio.read_json(path)
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found")
    except ValueError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}")
    cfg.setdefault("seed", 0)
    cfg.setdefault("snapshot_times", [])
    cfg.setdefault("solver_kind", "integral")
    cfg["_base_dir"] = str(path.parent)
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        node = cfg
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = val
    return cfg


def build_problem(cfg: dict) -> ProblemParams:
    base = Path(cfg.get("_base_dir", "."))
    p = _need(cfg, "params", "config")
    kin = build_kinetics(_need(p, "kinetics", "params"), base)
    grid_cfg = _need(cfg, "grid", "config")
    grid = SpatialGrid.uniform(float(_need(grid_cfg, "L", "grid")),
                               float(_need(grid_cfg, "dx", "grid")))
    s = _need(cfg, "solver", "config")
    solver = SolverConfig(dt=float(_need(s, "dt", "solver")),
                          picard_tol=float(s.get("picard_tol", 1e-10)),
                          max_picard_iters=int(s.get("max_picard_iters", 50)),
                          quad_points=int(s.get("quad_points", 3)))
    return ProblemParams(gamma=float(_need(p, "gamma", "params")),
                         kinetics=kin, grid=grid, solver=solver)


def build_initial_data(spec: dict, params: ProblemParams,
                       base_dir: Path, seed: int = 0) -> GridField:
    kind = str(_need(spec, "kind", "initial_data")).lower()
    grid = params.grid
    if kind == "zero":
        return GridField.zero(grid)
    if kind == "traveling_wave":
        return traveling_wave(params).profile_on(grid)
    if kind == "gaussian":
        amp = float(_need(spec, "amplitude", "initial_data"))
        width = float(_need(spec, "width", "initial_data"))
        center = float(spec.get("center", 0.0))
        return GridField.from_function(
            grid, lambda x: amp * np.exp(-((x - center) / width) ** 2))
    if kind == "random":
        # nonnegative random bump sum, rescaled to a target weighted sup norm
        from .spaces import WeightSpec, c_alpha_norm
        alpha = float(spec.get("alpha", 0.0))
        target = float(spec.get("target_norm", 1.0))
        n_bumps = int(spec.get("n_bumps", 6))
        rng = np.random.default_rng(seed)
        span = 0.5 * grid.L
        vals = np.zeros(grid.size)
        for _ in range(n_bumps):
            c = rng.uniform(-span, span)
            w = rng.uniform(1.0, 4.0)
            a = rng.uniform(0.2, 1.0)
            vals += a * np.exp(-((grid.x - c) / w) ** 2)
        f = GridField(grid, vals)
        nrm = c_alpha_norm(f, WeightSpec(alpha))
        return GridField(grid, vals * (target / nrm))
    if kind == "file":
        return runio.read_field_csv(base_dir / str(_need(spec, "path",
                                                         "initial_data")))
    raise ConfigError(f"unknown initial_data kind '{kind}'")


# ---------------------------------------------------------------------------
# run metrics

def oscillation_metrics(history, window_frac: float = 0.25) -> dict:
    """Mean speed, oscillation amplitude and dominant period of the tail."""
    v = history.v
    n0 = int(len(v) * (1.0 - window_frac))
    tail = v[n0:]
    mean_v = float(np.mean(tail))
    amplitude = float(np.max(tail) - np.min(tail))
    x = tail - mean_v
    up = np.nonzero((x[:-1] < 0) & (x[1:] >= 0))[0]
    if up.size >= 2:
        period = float(np.mean(np.diff(up)) * history.dt)
    else:
        period = float("nan")
    return {"mean_v": mean_v, "amplitude": amplitude, "period": period,
            "window_frac": window_frac}


def _run_solver(params: ProblemParams, u0: GridField, T_final: float,
                solver_kind: str, snapshot_times=()):
    if solver_kind == "fd":
        return fd_run(params, u0, T_final, snapshot_times=snapshot_times)
    history = ie_run(params, u0, T_final)
    snaps = {float(t): reconstruct(u0, history, float(t), params.gamma,
                                   quad_points=params.solver.quad_points)
             for t in snapshot_times}
    return history, snaps


def make_artifacts(params: ProblemParams, u0: GridField, history,
                   snapshot_times) -> RunArtifacts:
    """Reconstruct the potential split at the snapshot times (integral path)."""
    gamma = params.gamma
    q = params.solver.quad_points
    t1p, t2p, full = {}, {}, {}
    for t in snapshot_times:
        t = float(t)
        if t <= 0:
            continue
        p1 = t1_apply(history, t, gamma, u0.grid, quad_points=q)
        p2 = t2_apply(u0, t, gamma, float(history.s[int(round(t / history.dt))]))
        t1p[t] = p1
        t2p[t] = p2
        full[t] = GridField(u0.grid, p1.values + p2.values)
    times = sorted(t1p)
    return RunArtifacts(u0=u0, history=history, snapshot_times=times,
                        t1_parts=t1p, t2_parts=t2p, fields=full)


# ---------------------------------------------------------------------------
# commands

def cmd_simulate(cfg: dict, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t_start = time.perf_counter()
    params = build_problem(cfg)
    u0 = build_initial_data(_need(cfg, "initial_data", "config"), params,
                            Path(cfg.get("_base_dir", ".")),
                            seed=int(cfg.get("seed", 0)))
    T = float(_need(cfg, "T_final", "config"))
    times = [float(t) for t in cfg.get("snapshot_times", [])]
    bad = [t for t in times if t < 0 or t > T]
    if bad:
        raise ConfigError(f"snapshot times {bad} outside [0, T_final]")
    kind = cfg.get("solver_kind", "integral")
    history, snaps = _run_solver(params, u0, T, kind, snapshot_times=times)

    runio.write_field_csv(out / "u0.csv", u0)
    runio.write_history_csv(out / "history.csv", history, source=kind)
    manifest = []
    for t in sorted(snaps):
        name = f"snapshot_t{t:g}.csv"
        runio.write_field_csv(out / name, snaps[t])
        manifest.append({"t": t, "file": name, "source": kind})
    table = compute_constants(params)
    report_dict = None
    if kind == "integral" and [t for t in times if t > 0]:
        alpha = float(cfg.get("bounds_alpha", 0.5 * table.alpha_min))
        artifacts = make_artifacts(params, u0, history, times)
        report = verify_apriori(artifacts, table, alpha, params.gamma)
        report_dict = report.as_dict()
        runio.write_json(out / "bounds_report.json", report_dict)
    summary = {
        "solver": kind,
        "T_final": T,
        "samples": int(history.v.size),
        "matching_residual": history.matching_residual,
        "metrics": oscillation_metrics(history),
        "bounds_all_pass": (None if report_dict is None
                            else report_dict["all_pass"]),
        "runtime_s": round(time.perf_counter() - t_start, 3),
    }
    cfg_echo = {k: v for k, v in cfg.items() if not k.startswith("_")}
    runio.write_json(out / "config.json", cfg_echo)
    runio.write_json(out / "constants.json", table.as_dict())
    runio.write_json(out / "manifest.json", {"snapshots": manifest})
    runio.write_json(out / "summary.json", summary)
    return out


def cmd_dimension(cfg: dict, m_list, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    params = build_problem(cfg)
    u0 = build_initial_data(_need(cfg, "initial_data", "config"), params,
                            Path(cfg.get("_base_dir", ".")),
                            seed=int(cfg.get("seed", 0)))
    table = compute_constants(params)
    horizon = float(cfg.get("tangent_horizon", _need(cfg, "T_final", "config")))
    renorm = int(cfg.get("renorm_period", 10))
    rows = []
    for m in m_list:
        rep = volume_growth(params, u0, int(m), horizon,
                            renorm_period=renorm, seed=int(cfg.get("seed", 0)))
        rep["m_dim_closed_form"] = table.m_dim
        rep["m_dim_optimized"] = table.mu_over_gamma
        runio.write_json(out / f"spectrum_m{m}.json", rep)
        rows.append(rep)
    runio.write_json(out / "constants.json", table.as_dict())
    summary = [{"m": r["m"],
                "mean_log_volume_rate": r["mean_log_volume_rate"],
                "mean_trace": r["mean_trace"],
                "dimension_estimate": r["dimension_estimate"],
                "m_dim_closed_form": r["m_dim_closed_form"],
                "m_dim_optimized": r["m_dim_optimized"]} for r in rows]
    runio.write_json(out / "dimension_summary.json", summary)
    return out


def _set_path(cfg: dict, dotted: str, value):
    node = cfg
    parts = dotted.split(".")
    # allow both "kinetics.A" and fully qualified "params.kinetics.A"
    if parts[0] not in cfg and parts[0] != "params" and "params" in cfg \
            and parts[0] in cfg["params"]:
        node = cfg["params"]
    for p in parts[:-1]:
        if p not in node or not isinstance(node[p], dict):
            raise ConfigError(f"sweep axis '{dotted}': no section '{p}'")
        node = node[p]
    leaf = parts[-1]
    if leaf not in node or not isinstance(node[leaf], (int, float)):
        raise ConfigError(f"sweep axis '{dotted}' must name a numeric key")
    node[leaf] = float(value)


def _sweep_worker(args):
    idx, cfg, axis, value = args
    import copy
    cfg = copy.deepcopy(cfg)
    _set_path(cfg, axis, value)
    try:
        params = build_problem(cfg)
        u0 = build_initial_data(cfg["initial_data"], params,
                                Path(cfg.get("_base_dir", ".")),
                                seed=int(cfg.get("seed", 0)))
        history, _ = _run_solver(params, u0, float(cfg["T_final"]),
                                 cfg.get("solver_kind", "integral"))
        met = oscillation_metrics(history)
        return idx, {"value": value, "status": "ok", **met}
    except StefanFrontError as exc:
        return idx, {"value": value, "status": f"failed: {exc}",
                     "mean_v": float("nan"), "amplitude": float("nan"),
                     "period": float("nan")}


def cmd_sweep(cfg: dict, axis: str, values, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(i, cfg, axis, float(v)) for i, v in enumerate(values)]
    workers = int(os.environ.get(ENV_THREADS, "1"))
    results = [None] * len(jobs)
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as ex:
            for idx, row in ex.map(_sweep_worker, jobs):
                results[idx] = row
    else:
        for job in jobs:
            idx, row = _sweep_worker(job)
            results[idx] = row
    with (out / "sweep.csv").open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["value", "mean_v", "amplitude",
                                           "period", "window_frac", "status"])
        w.writeheader()
        for row in results:
            w.writerow(row)
    runio.write_json(out / "sweep_summary.json",
                     {"axis": axis, "rows": results})
    return out


def cmd_fd_compare(cfg: dict, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    params = build_problem(cfg)
    u0 = build_initial_data(_need(cfg, "initial_data", "config"), params,
                            Path(cfg.get("_base_dir", ".")),
                            seed=int(cfg.get("seed", 0)))
    T = float(_need(cfg, "T_final", "config"))
    h_ie, _ = _run_solver(params, u0, T, "integral")
    h_fd, _ = _run_solver(params, u0, T, "fd")
    dv = np.abs(h_ie.v - h_fd.v)
    with (out / "discrepancy.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "v_integral", "v_fd", "abs_diff"])
        for t, a, b, d in zip(h_ie.t, h_ie.v, h_fd.v, dv):
            w.writerow([runio._fmt(t), runio._fmt(a), runio._fmt(b),
                        runio._fmt(d)])
    summary = {"max_abs_diff": float(dv.max()),
               "at_t": float(h_ie.t[int(np.argmax(dv))]), "T_final": T}
    runio.write_json(out / "fd_compare.json", summary)
    runio.write_history_csv(out / "history_integral.csv", h_ie, "integral")
    runio.write_history_csv(out / "history_fd.csv", h_fd, "fd")
    return out


def cmd_traveling_wave(cfg: dict) -> dict:
    params = build_problem(cfg)
    tw = traveling_wave(params)
    return {"V_star": tw.V_star, "u_star": tw.u_star,
            "lam_plus": tw.lam_plus, "lam_minus": tw.lam_minus,
            "residual": tw.residual}


def cmd_verify_bounds(run_dir, refine: int = 1) -> dict:
    """Re-audit an existing run directory from its stored artifacts."""
    run_dir = Path(run_dir)
    cfg = runio.read_json(run_dir / "config.json")
    cfg["_base_dir"] = str(run_dir)
    params = build_problem(cfg)
    u0 = runio.read_field_csv(run_dir / "u0.csv")
    history = runio.read_history_csv(run_dir / "history.csv")
    table = compute_constants(params)
    alpha = float(cfg.get("bounds_alpha", 0.5 * table.alpha_min))
    times = [float(t) for t in cfg.get("snapshot_times", []) if float(t) > 0]
    artifacts = make_artifacts(params, u0, history, times)
    report = verify_apriori(artifacts, table, alpha, params.gamma)

    def rerun(factor: int):
        fine = dict(cfg)
        fine["solver"] = dict(cfg["solver"])
        fine["grid"] = dict(cfg["grid"])
        fine["solver"]["dt"] = float(cfg["solver"]["dt"]) / factor
        fine["grid"]["dx"] = float(cfg["grid"]["dx"]) / factor
        p2 = build_problem(fine)
        u02 = build_initial_data(cfg["initial_data"], p2, run_dir,
                                 seed=int(cfg.get("seed", 0)))
        h2 = ie_run(p2, u02, float(cfg["T_final"]))
        art2 = make_artifacts(p2, u02, h2, times)
        return verify_apriori(art2, compute_constants(p2), alpha, p2.gamma)

    confirmed = confirm_violations(report, rerun)
    out = report.as_dict()
    out["confirmed_violations"] = confirmed
    runio.write_json(run_dir / "bounds_report.json", out)
    return out


# ---------------------------------------------------------------------------
# entry point

def _add_common(p):
    p.add_argument("--config", required=True, help="run configuration JSON")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--dt", type=float, default=None, help="override solver.dt")
    p.add_argument("--dx", type=float, default=None, help="override grid.dx")
    p.add_argument("--L", type=float, default=None, help="override grid.L")


def _overrides(args) -> dict:
    return {"solver.dt": args.dt, "grid.dx": args.dx, "grid.L": args.L}


def _out_dir(args, cfg, default_name):
    if args.out:
        return Path(args.out)
    if cfg.get("out_dir"):
        return Path(cfg["out_dir"])
    return Path(default_name)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="stefan-front",
        description="Free-interface front dynamics laboratory")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one trajectory and audit it")
    _add_common(p)

    p = sub.add_parser("dimension", help="tangent volume growth and spectra")
    _add_common(p)
    p.add_argument("--m", default="1", help="comma-separated tangent counts")

    p = sub.add_parser("sweep", help="batch runs along one parameter axis")
    _add_common(p)
    p.add_argument("--axis", required=True, help="config path, e.g. kinetics.A")
    p.add_argument("--values", required=True, help="comma-separated values")

    p = sub.add_parser("traveling-wave", help="print the steady front")
    p.add_argument("--config", required=True)

    p = sub.add_parser("verify-bounds", help="re-audit an existing run dir")
    p.add_argument("--run", required=True)

    p = sub.add_parser("fd-compare", help="run both solvers, emit discrepancy")
    _add_common(p)

    args = ap.parse_args(argv)
    try:
        if args.command == "traveling-wave":
            cfg = load_config(args.config)
            res = cmd_traveling_wave(cfg)
            for k, v in res.items():
                print(f"{k} = {v:.12g}")
            return 0
        if args.command == "verify-bounds":
            res = cmd_verify_bounds(args.run)
            print(f"bounds all_pass = {res['all_pass']}; "
                  f"confirmed violations: {res['confirmed_violations']}")
            return 0 if res["all_pass"] else 3

        cfg = load_config(args.config, _overrides(args))
        if args.command == "simulate":
            out = cmd_simulate(cfg, _out_dir(args, cfg, "run_out"))
            print(f"run written to {out}")
        elif args.command == "dimension":
            m_list = [int(m) for m in args.m.split(",") if m]
            out = cmd_dimension(cfg, m_list, _out_dir(args, cfg, "dimension_out"))
            print(f"spectra written to {out}")
        elif args.command == "sweep":
            values = [float(v) for v in args.values.split(",") if v]
            out = cmd_sweep(cfg, args.axis, values, _out_dir(args, cfg, "sweep_out"))
            print(f"sweep written to {out}")
        elif args.command == "fd-compare":
            out = cmd_fd_compare(cfg, _out_dir(args, cfg, "compare_out"))
            print(f"comparison written to {out}")
        return 0
    except StefanFrontError as exc:
        stage = args.command.replace("-", "_")
        print(f"error in stage '{stage}': {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
