"""Batch front-end: solve / moments / simulate / compare.

Every command loads one experiment config (JSON), writes plot-ready CSV
plus a machine-readable JSON report into the output directory, and is
deterministic given (config, seed): re-runs produce byte-identical files.

Exit codes: 0 success, 2 config error, 3 solver non-convergence,
4 oracle/ordering check failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import baseline, simulate
from .config import ConfigError, ExperimentConfig, load_config
from .grid import StateGrid
from .hjb import ACTION_NAMES, HOLD, PAY, PolicyPartition, SolveResult, SolverError, ValueSurface, refine_check, solve

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NO_CONVERGENCE = 3
EXIT_CHECK_FAILED = 4

_ACTION_CODES = {name: code for code, name in ACTION_NAMES.items()}


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path: Path, header: list[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_json(path: Path, doc: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _outdir(cfg: ExperimentConfig, args) -> Path:
    return Path(args.out) if args.out else Path(cfg.outdir)


def _partition_summary(result: SolveResult, grid: StateGrid) -> list[dict]:
    rows = []
    for m in range(grid.intensity.m_max + 1):
        bands = result.partition.action_bands(m)
        barrier = result.partition.barrier_index(m)
        rows.append(
            {
                "m": m,
                "lambda": grid.intensity.value(m),
                "barrier_n": barrier,
                "barrier_x": None if barrier is None else grid.surplus.x(barrier),
                "bands": [[int(lo), int(hi)] for lo, hi in bands],
            }
        )
    return rows


def _solve_config(cfg: ExperimentConfig) -> tuple[SolveResult, StateGrid]:
    grid = cfg.grid()
    result = solve(cfg.params, grid, tol=cfg.tol, max_iter=cfg.max_iter, quad_order=cfg.quad_order)
    return result, grid


def cmd_solve(args) -> int:
    cfg = load_config(args.config)
    out = _outdir(cfg, args)
    result, grid = _solve_config(cfg)
    xs = grid.surplus.values()
    lams = grid.intensity.values()
    rows = []
    for n in range(grid.surplus.n_max + 1):
        for m in range(grid.intensity.m_max + 1):
            rows.append(
                (n, m, xs[n], lams[m], float(result.values[n, m]), ACTION_NAMES[int(result.labels[n, m])])
            )
    _write_csv(out / "value_surface.csv", ["n", "m", "x", "lambda", "value", "action"], rows)

    report = {
        "config": cfg.resolved(),
        "iterations": result.iterations,
        "final_sup_change": result.sup_change,
        "converged": result.converged,
        "top_value": float(result.values[grid.surplus.n_max, 0]),
        "excess_over_surplus": float(result.values[grid.surplus.n_max, 0] - xs[-1]),
        "partition": _partition_summary(result, grid),
    }
    rc = EXIT_OK
    if args.refine:
        rep = refine_check(
            cfg.params,
            cfg.delta,
            cfg.delta_lambda,
            cfg.m_max,
            tol=cfg.refine_tol_rel * float(result.values[grid.surplus.n_max, 0]),
            tol_m_top=cfg.m_top_tol_rel * float(result.values[grid.surplus.n_max, 0]),
            solver_tol=cfg.tol,
            max_iter=cfg.max_iter,
            quad_order=cfg.quad_order,
        )
        report["refine"] = {
            "sup_diff_grid": rep.sup_diff_grid,
            "refine_monotone": rep.refine_monotone,
            "sup_diff_m_top": rep.sup_diff_m_top,
            "partition_stable_m_top": rep.partition_stable_m_top,
            "tol": rep.tol,
            "tol_m_top": rep.tol_m_top,
            "passes": rep.passes,
        }
        if not rep.passes:
            rc = EXIT_CHECK_FAILED
    _write_json(out / "solve_report.json", report)
    print(f"solved {cfg.name}: {result.iterations} sweeps, sup-change {result.sup_change:.3e} -> {out}")
    return rc


def cmd_moments(args) -> int:
    cfg = load_config(args.config)
    out = _outdir(cfg, args)
    ts = [float(t) for t in args.times.split(",")] if args.times else [0.5, 1.0, 2.0, 5.0]
    n_paths = args.n_paths or cfg.mc.n_paths
    seed = args.seed if args.seed is not None else cfg.mc.seed
    params = cfg.params
    rows = []
    worst = 0.0
    for label, lam0 in (("floor", float(params.lambda_floor)), ("average", float(params.lambda_av))):
        m_lam, se_lam, m_cum, se_cum = simulate.moment_mc(params, lam0, ts, n_paths, seed)
        for j, t in enumerate(ts):
            a_lam = params.mean_intensity(lam0, t)
            a_cum = params.mean_cumulative_intensity(lam0, t)
            z_lam = (m_lam[j] - a_lam) / se_lam[j] if se_lam[j] > 0 else 0.0
            z_cum = (m_cum[j] - a_cum) / se_cum[j] if se_cum[j] > 0 else 0.0
            worst = max(worst, abs(z_lam), abs(z_cum))
            rows.append((label, lam0, t, "intensity", a_lam, float(m_lam[j]), float(se_lam[j]), float(z_lam)))
            rows.append((label, lam0, t, "cumulative", a_cum, float(m_cum[j]), float(se_cum[j]), float(z_cum)))
    _write_csv(
        out / "moments.csv",
        ["lambda0_kind", "lambda0", "t", "stat", "analytic", "mc_mean", "mc_se", "z"],
        rows,
    )
    print(f"moments {cfg.name}: worst |z| = {worst:.2f} over {len(rows)} statistics -> {out}")
    return EXIT_OK if worst <= 3.0 else EXIT_CHECK_FAILED


def _read_surface(path: Path, grid: StateGrid) -> tuple[ValueSurface, PolicyPartition]:
    if not path.exists():
        raise ConfigError(f"missing solved surface: {path} (run `coxdiv solve` first)")
    values = np.full((grid.surplus.n_max + 1, grid.intensity.m_max + 1), np.nan)
    labels = np.full(values.shape, -1, dtype=np.int8)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            n, m = int(row["n"]), int(row["m"])
            if not (0 <= n <= grid.surplus.n_max and 0 <= m <= grid.intensity.m_max):
                raise ConfigError(f"{path}: cell ({n}, {m}) does not fit the configured grid")
            values[n, m] = float(row["value"])
            labels[n, m] = _ACTION_CODES[row["action"]]
    if np.isnan(values).any() or (labels < 0).any():
        raise ConfigError(f"{path}: incomplete surface for the configured grid")
    return ValueSurface(grid, values), PolicyPartition(grid, labels)


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    out = _outdir(cfg, args)
    surface_dir = Path(args.surface) if args.surface else out
    grid = cfg.grid()
    surface, partition = _read_surface(surface_dir / "value_surface.csv", grid)
    seed = args.seed if args.seed is not None else cfg.mc.seed
    n_paths = args.n_paths or cfg.mc.n_paths
    cells = cfg.mc.probe_cells or ((grid.surplus.n_max // 2, 0),)
    reports = []
    all_ok = True
    for n, m in cells:
        value = float(surface.values[n, m])
        horizon = cfg.mc.horizon or simulate.default_horizon(cfg.params, grid, max(value, grid.surplus.step), cfg.mc.rel_tail)
        est = simulate.evaluate_policy_mc(cfg.params, partition, grid, (n, m), n_paths, horizon, seed)
        gap = abs(est.mean - value)
        allowed = 3.0 * est.std_error + est.truncation_bound
        ok = gap <= allowed
        all_ok &= ok
        reports.append(
            {
                "cell": [n, m],
                "x": grid.surplus.x(n),
                "lambda": grid.intensity.value(m),
                "solver_value": value,
                "mc_mean": est.mean,
                "mc_se": est.std_error,
                "n_paths": est.n_paths,
                "horizon": est.horizon,
                "truncation_bound": est.truncation_bound,
                "n_ruined": est.n_ruined,
                "n_finished": est.n_finished,
                "n_truncated": est.n_truncated,
                "abs_gap": gap,
                "allowed": allowed,
                "pass": ok,
            }
        )
        print(
            f"cell ({n},{m}): solver {value:.6f} mc {est.mean:.6f} +- {est.std_error:.6f} "
            f"trunc {est.truncation_bound:.2e} [{'ok' if ok else 'FAIL'}]"
        )
    _write_json(out / "mc_report.json", {"config": cfg.resolved(), "seed": seed, "cells": reports, "pass": all_ok})
    return EXIT_OK if all_ok else EXIT_CHECK_FAILED


def cmd_compare(args) -> int:
    cfg = load_config(args.config)
    out = _outdir(cfg, args)
    result, grid = _solve_config(cfg)
    mode = args.mode
    if mode == "floor":
        cl_cfg = baseline.CLConfig(cfg.params, cfg.params.lambda_floor, "reloaded", cfg.delta)
        m_probe = 0
    elif mode == "average":
        m_probe = grid.intensity.sigma(float(cfg.params.lambda_av))
        lam_probe = cfg.params.lambda_floor + m_probe * cfg.delta_lambda
        cl_cfg = baseline.CLConfig(cfg.params, lam_probe, "same_p", cfg.delta)
    else:
        cl_cfg = baseline.CLConfig(cfg.params, cfg.params.lambda_floor, "same_p", cfg.delta)
        m_probe = 0
    cl = baseline.solve_cl(cl_cfg, tol=cfg.tol, max_iter=cfg.max_iter, quad_order=cfg.quad_order)
    table = baseline.compare_surfaces(result, cl, mode, m_probe=m_probe)
    rows = list(zip(table.xs, table.values, table.values_cl, table.difference))
    _write_csv(out / f"compare_{mode}.csv", ["x", "value_shot", "value_cl", "difference"], rows)
    print(
        f"compare {mode}: {table.violations} ordering violations over {table.xs.size} points "
        f"(expected {table.expected}) -> {out}"
    )
    return EXIT_OK if table.violations == 0 else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coxdiv",
        description="Optimal dividends under shot-noise Cox claim arrivals: grid solver and Monte-Carlo validation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="experiment config JSON")
        p.add_argument("--out", default=None, help="output directory (default: config output.directory)")
        p.add_argument("--seed", type=int, default=None, help="override the config Monte-Carlo seed")

    p_solve = sub.add_parser("solve", help="solve the grid problem; write value_surface.csv and solve_report.json")
    common(p_solve)
    p_solve.add_argument("--refine", action="store_true", help="also solve halved/enlarged grids and report stability")
    p_solve.set_defaults(func=cmd_solve)

    p_mom = sub.add_parser("moments", help="validate the intensity moment formulas by Monte-Carlo")
    common(p_mom)
    p_mom.add_argument("--times", default=None, help="comma-separated evaluation times (default 0.5,1,2,5)")
    p_mom.add_argument("--n-paths", type=int, default=None)
    p_mom.set_defaults(func=cmd_moments)

    p_sim = sub.add_parser("simulate", help="Monte-Carlo policy evaluation at the configured probe cells")
    common(p_sim)
    p_sim.add_argument("--surface", default=None, help="directory holding value_surface.csv (default: output dir)")
    p_sim.add_argument("--n-paths", type=int, default=None)
    p_sim.set_defaults(func=cmd_simulate)

    p_cmp = sub.add_parser("compare", help="compare against the classical constant-intensity model")
    common(p_cmp)
    p_cmp.add_argument("--mode", choices=["floor", "average", "bound"], default="floor")
    p_cmp.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    threads = os.environ.get("COXDIV_THREADS")
    if threads:
        import numba

        numba.set_num_threads(int(threads))
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except baseline.GridMismatchError as exc:
        print(f"grid mismatch: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
