"""Run orchestration: evolve / extract / iterate, then persist results.

Each runner writes into its output directory:
  norms.csv          densely recorded norm series (run-llg)
  monitor.csv        per-snapshot series with u-norms and K/K'/R/R0 columns
  frames.csv         per-snapshot identity residuals (run-frames)
  picard.csv         iterate history (run-picard)
  summary.json       fitted constants, flags, margins, config echo
  m_*.llgf, u_*.llgf binary field checkpoints

Summaries validate against schema/summary.schema.json before they are
written; outputs carry no timestamps, so identical configs reproduce
byte-identical files.
"""

from __future__ import annotations

import csv
import importlib.resources
import json
import os

import numpy as np

import jsonschema

from .cgl import graded_mesh, picard_solve
from .config import RunConfig
from .errors import BlowUpSuspected, FrameDegenerate, NoContraction, NonFinite, ProjectionDegenerate
from .fieldio import read_field, write_field
from .frames import (
    coulomb_residual,
    derive_connection,
    construct_frame,
    coulomb_gauge,
    extract_gauged,
    u_norm_series,
    verify_curvature,
    verify_torsion,
    verify_u0_consistency,
)
from .grid import get_workspace
from .llg import SpinField, evolve, sobolev_monitor
from .monitor import (
    NormSeries,
    check_bootstrap,
    check_decay_bound,
    check_theorem_bounds,
    r0_series,
    spectral_gap_time,
    weighted_norms,
)
from .scenarios import make_initial

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BLOWUP = 10
EXIT_FRAME_DEGENERATE = 11
EXIT_NO_CONTRACTION = 12


def _schema():
    ref = importlib.resources.files("llgflow") / "schema" / "summary.schema.json"
    return json.loads(ref.read_text())


def write_summary(path, run_kind, exit_info, config_echo, grid, results) -> dict:
    summary = {
        "schema_version": 1,
        "run_kind": run_kind,
        "exit": exit_info,
        "config": config_echo,
        "grid": {
            "dimension": grid.dimension,
            "points_per_axis": grid.points_per_axis,
            "box_length": grid.box_length,
        },
        "results": results,
    }
    jsonschema.validate(summary, _schema())
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (int, float, np.floating)) else v for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def _initial_field(cfg: RunConfig, resume=None) -> SpinField:
    if resume is not None:
        values, grid = read_field(resume, kind="real")
        return SpinField(m=np.asarray(values, float), m_inf=np.asarray(cfg.scenario.m_inf, float), grid=grid)
    return make_initial(cfg.scenario, cfg.grid)


def run_llg(cfg: RunConfig, out_dir=None, resume=None) -> tuple:
    """Evolve, monitor, export. Returns (exit_code, summary dict)."""
    out = out_dir or cfg.output_dir
    os.makedirs(out, exist_ok=True)
    sf0 = _initial_field(cfg, resume)
    exit_info = {"status": "ok", "code": EXIT_OK, "time": None}
    results = {}
    try:
        traj = evolve(sf0, cfg.solver)
    except BlowUpSuspected as exc:
        exit_info = {"status": "blow-up-suspected", "code": EXIT_BLOWUP, "time": exc.time}
        traj = exc.trajectory
    except (ProjectionDegenerate, NonFinite) as exc:
        t = getattr(exc, "time", None)
        exit_info = {"status": "projection-degenerate", "code": EXIT_BLOWUP, "time": t}
        traj = None

    if traj is not None:
        traj.series.to_csv(os.path.join(out, "norms.csv"))
        results["final_time"] = float(traj.times[-1])
        results["final_energy"] = float(traj.series["E"][-1])
        results["snapshots"] = len(traj)
        write_field(os.path.join(out, "m_final.llgf"), traj.final().m, traj.grid)
        if cfg.checkpoint_every > 0:
            for i in range(0, len(traj), cfg.checkpoint_every):
                write_field(os.path.join(out, f"m_{i:05d}.llgf"), traj.fields[i], traj.grid)

        if cfg.monitor_sigma >= 2:
            rep = sobolev_monitor(traj, cfg.monitor_sigma)
            results["sobolev"] = {
                "sigma": cfg.monitor_sigma,
                "fitted_rate": rep.fitted_rate,
                "violations": int(np.count_nonzero(rep.violations)),
            }

        if cfg.monitor_weighted and exit_info["code"] == EXIT_OK:
            try:
                series = u_norm_series(traj, cfg.delta)
            except FrameDegenerate as exc:
                exit_info = {"status": "frame-degenerate", "code": EXIT_FRAME_DEGENERATE, "time": None}
                series = None
            if series is not None:
                K, Kp, R = weighted_norms(series, cfg.delta)
                u0 = extract_gauged(traj.snapshot(0), traj.lam).derived.u
                r0 = r0_series(u0, series.times, cfg.delta, traj.lam, traj.grid)
                series.add_column("K", K)
                series.add_column("Kp", Kp)
                series.add_column("R", R)
                series.add_column("R0", r0.R0)
                series.to_csv(os.path.join(out, "monitor.csv"))
                boot = check_bootstrap(series, cfg.delta)
                theorem = check_theorem_bounds(series)
                results["weighted"] = {
                    "r0_fitted_c": r0.fitted_c,
                    "bootstrap_ok": boot.ok,
                    "bootstrap_worst_margin": boot.worst_margin,
                    "c_u": theorem.c_u,
                    "c_grad_m": theorem.c_grad_m,
                    "c_ln": theorem.c_ln,
                    "h1_nonincreasing": theorem.h1_nonincreasing,
                }
                if cfg.decay_window is not None:
                    dec = check_decay_bound(
                        series, "linf_dev", cfg.decay_window, traj.grid, traj.lam
                    )
                    results["decay"] = {
                        "exponent": dec.fit.exponent,
                        "target_exponent": dec.target_exponent,
                        "exponent_ok": dec.exponent_ok,
                        "bound_constant": dec.bound_constant,
                        "gap_time": dec.gap_time,
                    }

    summary = write_summary(
        os.path.join(out, "summary.json"),
        "llg",
        exit_info,
        cfg.echo(),
        cfg.grid,
        _jsonable(results),
    )
    return exit_info["code"], summary


def run_frames(cfg: RunConfig, out_dir=None, resume=None) -> tuple:
    """Frame extraction and identity residuals along a run (or one checkpoint)."""
    out = out_dir or cfg.output_dir
    os.makedirs(out, exist_ok=True)
    exit_info = {"status": "ok", "code": EXIT_OK, "time": None}
    results = {}
    rows = []
    try:
        if resume is not None:
            sf = _initial_field(cfg, resume)
            snapshots = [(0.0, sf)]
        else:
            traj = evolve(_initial_field(cfg), cfg.solver)
            snapshots = [(traj.times[i], traj.snapshot(i)) for i in range(len(traj))]
        lam = cfg.solver.lam
        ws = get_workspace(snapshots[0][1].grid)
        for t, sf in snapshots:
            frame = construct_frame(sf)
            conn, der = derive_connection(sf, frame, lam)
            conn_g, der_g, theta = coulomb_gauge(conn, der)
            a_scale = max(ws.lp_norm(conn.a, np.inf), 1e-300)
            rows.append(
                (
                    t,
                    verify_torsion(der, conn),
                    verify_curvature(der, conn),
                    verify_u0_consistency(der, conn, lam).relative,
                    coulomb_residual(conn_g) / a_scale,
                )
            )
    except FrameDegenerate as exc:
        exit_info = {"status": "frame-degenerate", "code": EXIT_FRAME_DEGENERATE, "time": None}
        results["worst_value"] = getattr(exc, "worst_value", None)
    except BlowUpSuspected as exc:
        exit_info = {"status": "blow-up-suspected", "code": EXIT_BLOWUP, "time": exc.time}

    if rows:
        _write_csv(
            os.path.join(out, "frames.csv"),
            ["t", "torsion", "curvature", "u0_rel", "div_a_rel"],
            rows,
        )
        results["max_torsion"] = max(r[1] for r in rows)
        results["max_curvature"] = max(r[2] for r in rows)
        results["max_u0_rel"] = max(r[3] for r in rows)
        results["max_div_a_rel"] = max(r[4] for r in rows)

    summary = write_summary(
        os.path.join(out, "summary.json"),
        "frames",
        exit_info,
        cfg.echo(),
        cfg.grid,
        _jsonable(results),
    )
    return exit_info["code"], summary


def run_picard(cfg: RunConfig, out_dir=None, resume=None) -> tuple:
    """Picard-iterate the mild formulation from the scenario's initial u."""
    out = out_dir or cfg.output_dir
    os.makedirs(out, exist_ok=True)
    exit_info = {"status": "ok", "code": EXIT_OK, "time": None}
    results = {}
    history = []
    try:
        sf0 = _initial_field(cfg, resume)
        u0 = extract_gauged(sf0, cfg.solver.lam).derived.u
        mesh = graded_mesh(cfg.solver.t_end, cfg.picard_mesh_points)
        res = picard_solve(
            u0,
            cfg.solver.t_end,
            cfg.solver.lam,
            sf0.grid,
            mesh=mesh,
            max_iter=cfg.picard_max_iter,
            tol=cfg.picard_tol,
            smallness_gate=cfg.picard_smallness_gate,
        )
        history = res.history
        results["iterations"] = len(res.history)
        results["final_difference"] = res.history[-1].diff_norm if res.history else 0.0
        ratios = [s.ratio for s in res.history if np.isfinite(s.ratio)]
        results["worst_ratio"] = max(ratios) if ratios else None
        write_field(os.path.join(out, "u_final.llgf"), res.u[-1], sf0.grid)
    except FrameDegenerate:
        exit_info = {"status": "frame-degenerate", "code": EXIT_FRAME_DEGENERATE, "time": None}
    except NoContraction as exc:
        exit_info = {"status": "no-contraction", "code": EXIT_NO_CONTRACTION, "time": None}
        history = exc.history or []
        results["iterations"] = len(history)
    except ValueError as exc:
        # smallness gate and mesh validation
        exit_info = {"status": f"rejected: {exc}", "code": EXIT_NO_CONTRACTION, "time": None}

    if history:
        _write_csv(
            os.path.join(out, "picard.csv"),
            ["iter", "sup_difference", "contraction_ratio"],
            [(s.index, s.diff_norm, s.ratio) for s in history],
        )

    summary = write_summary(
        os.path.join(out, "summary.json"),
        "picard",
        exit_info,
        cfg.echo(),
        cfg.grid,
        _jsonable(results),
    )
    return exit_info["code"], summary


def run_monitor(cfg: RunConfig, run_dir, out_dir=None) -> tuple:
    """Recompute weighted-norm checks from a previous run's monitor.csv."""
    out = out_dir or cfg.output_dir
    os.makedirs(out, exist_ok=True)
    path = os.path.join(run_dir, "monitor.csv")
    try:
        series = NormSeries.from_csv(path)
    except OSError as exc:
        raise FileNotFoundError(f"no monitor series at {path}: {exc}") from exc
    delta = series.delta if series.delta is not None else cfg.delta
    K, Kp, R = weighted_norms(series, delta)
    results = {
        "delta": delta,
        "R_end": float(R[-1]),
    }
    if "R0" in series:
        series.columns["R"] = R
        boot = check_bootstrap(series, delta)
        results["bootstrap_ok"] = boot.ok
        results["bootstrap_worst_margin"] = boot.worst_margin
    theorem = check_theorem_bounds(series)
    results["c_u"] = theorem.c_u
    results["c_grad_m"] = theorem.c_grad_m
    results["h1_nonincreasing"] = theorem.h1_nonincreasing
    if cfg.decay_window is not None:
        dec = check_decay_bound(series, "linf_dev", cfg.decay_window, cfg.grid, cfg.solver.lam)
        results["decay_exponent"] = dec.fit.exponent
        results["decay_exponent_ok"] = dec.exponent_ok
    else:
        results["gap_time"] = spectral_gap_time(cfg.grid, cfg.solver.lam)
    exit_info = {"status": "ok", "code": EXIT_OK, "time": None}
    summary = write_summary(
        os.path.join(out, "monitor_summary.json"),
        "monitor",
        exit_info,
        cfg.echo(),
        cfg.grid,
        _jsonable(results),
    )
    return EXIT_OK, summary
