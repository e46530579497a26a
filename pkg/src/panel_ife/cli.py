"""Command-line front end.

Subcommands: ``estimate``, ``montecarlo``, ``simulate``, ``bootstrap``.
Configuration comes from a single JSON document (``--config``) with blocks
``data``/``dgp``, ``basis``, ``estimators``, ``bootstrap``, ``montecarlo``,
``output``; command-line flags override file values.  Exit codes: 0 success,
1 input/config error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from .basis import BasisFamily, BasisSpec, sieve_dimension
from .bootstrap import BootstrapConfig, bootstrap_beta, residualize_panel
from .data import load_panel_csv, write_panel_csv
from .estimator import (
    estimate_beta,
    estimate_factors,
    loading_decomposition_norms,
    select_num_factors,
)
from .exceptions import InputError, NumericalError, PanelIfeError
from .simulation import (
    CoverageMethod,
    DgpConfig,
    ESTIMATOR_NAMES,
    generate,
    run_coverage_study,
    run_monte_carlo,
)
from .tables import ResultTable

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NUMERICAL = 2


def _default_seed() -> int:
    env = os.environ.get("PANEL_IFE_SEED")
    return int(env) if env else 0


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    p = Path(path)
    if not p.exists():
        raise InputError(f"config file not found: {p}")
    with open(p, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{p}: invalid JSON ({exc})") from None


def _basis_spec_from(config: dict, n_units: int, args) -> BasisSpec:
    block = dict(config.get("basis", {}))
    if getattr(args, "basis_family", None):
        block["family"] = args.basis_family
    if getattr(args, "basis_j", None):
        block["j_per_covariate"] = args.basis_j
    block.setdefault("family", BasisFamily.BSPLINE.value)
    if "j_per_covariate" not in block:
        block["j_per_covariate"] = sieve_dimension(n_units, "empirical")
    # keep the BSpline degree feasible for small J
    if BasisFamily(block["family"]) is BasisFamily.BSPLINE:
        degree = int(block.get("bspline_degree", 3))
        block["bspline_degree"] = max(1, min(degree, int(block["j_per_covariate"]) - 1))
    return BasisSpec.from_dict(block)


def _write_factor_series(path: Path, time_ids, f_hat: np.ndarray) -> None:
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time", *(f"f{k + 1}" for k in range(f_hat.shape[1]))])
        for tt, row in zip(time_ids, f_hat):
            writer.writerow([tt, *(f"{v:.10g}" for v in row)])


def _factor_svg(f_hat: np.ndarray, path: Path) -> None:
    """Line plot of the factor series as a standalone SVG."""
    w, h, pad = 720, 360, 40
    t, k = f_hat.shape
    lo, hi = float(f_hat.min()), float(f_hat.max())
    if hi - lo <= 0:
        hi = lo + 1.0
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
              "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}">',
        f'<rect width="{w}" height="{h}" fill="white"/>',
    ]
    for kk in range(k):
        pts = []
        for tt in range(t):
            x = pad + (w - 2 * pad) * (tt / max(t - 1, 1))
            y = h - pad - (h - 2 * pad) * ((f_hat[tt, kk] - lo) / (hi - lo))
            pts.append(f"{x:.1f},{y:.1f}")
        color = colors[kk % len(colors)]
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                     f'points="{" ".join(pts)}"/>')
        parts.append(f'<text x="{pad + 8 + 60 * kk}" y="{pad - 12}" fill="{color}" '
                     f'font-family="sans-serif" font-size="13">f{kk + 1}</text>')
    parts.append("</svg>")
    path.write_text("\n".join(parts), encoding="utf-8")


def cmd_estimate(args) -> int:
    config = _load_config(args.config)
    data_path = args.data or config.get("data", {}).get("path")
    if not data_path:
        raise InputError("no data source: pass --data or a config data.path")
    panel = load_panel_csv(data_path, schema=config.get("data", {}).get("schema"))
    spec = _basis_spec_from(config, panel.n_units, args)
    outdir = Path(args.out or config.get("output", {}).get("directory", "."))
    outdir.mkdir(parents=True, exist_ok=True)
    seed = args.seed if args.seed is not None else config.get("bootstrap", {}).get("seed", _default_seed())
    n_boot = args.bootstrap or config.get("bootstrap", {}).get("n_replicates", 999)
    level = args.level or config.get("bootstrap", {}).get("level", 0.95)

    fit = estimate_beta(panel, spec)
    y_dot, x_dot = residualize_panel(panel, fit.projector)
    boot = bootstrap_beta(y_dot, x_dot,
                          BootstrapConfig(n_replicates=n_boot, level=level, seed=seed))
    j = spec.j_per_covariate
    k_hat, ratios = select_num_factors(fit, fit.projector, j, panel.n_covariates)
    k_use = args.factors or k_hat
    factors = estimate_factors(fit, fit.projector, k_use)
    g_frob, g_max, gamma_frob, gamma_max = loading_decomposition_norms(factors)

    coef_table = ResultTable(
        row_keys=list(panel.covariate_names),
        col_keys=["estimate", f"ci{int(round(level * 100))}_lower", f"ci{int(round(level * 100))}_upper"],
        cells=np.column_stack([fit.beta_hat,
                               [iv[0] for iv in boot.intervals],
                               [iv[1] for iv in boot.intervals]]),
        caption=f"P-IFE coefficients with {int(round(level * 100))}% bootstrap CIs "
                f"(B={n_boot}, J={j}, K={k_use})",
        row_label="covariate",
    )
    coef_table.to_csv(outdir / "coefficients.csv")
    (outdir / "coefficients.txt").write_text(coef_table.to_text(), encoding="utf-8")
    _write_factor_series(outdir / "factors.csv", panel.time_ids, factors.f_hat)
    norms_table = ResultTable(
        row_keys=["explained", "idiosyncratic"],
        col_keys=["frobenius", "max_abs"],
        cells=np.array([[g_frob, g_max], [gamma_frob, gamma_max]]),
        caption="Loading decomposition norms",
        row_label="component",
    )
    norms_table.to_csv(outdir / "loading_norms.csv")
    summary = {
        "beta_hat": fit.beta_hat.tolist(),
        "intervals": [list(iv) for iv in boot.intervals],
        "level": level,
        "k_hat": k_hat,
        "k_used": k_use,
        "eigenvalue_ratios": ratios.tolist(),
        "projector_rank": fit.projector_rank,
        "basis": spec.to_dict(),
        "seed": seed,
    }
    (outdir / "summary.json").write_text(json.dumps(summary, indent=2), encoding="utf-8")
    if args.plot:
        _factor_svg(factors.f_hat, outdir / "factors.svg")
    if args.save_fit:
        doc = {"pife": fit.to_dict(), "factors": factors.to_dict()}
        Path(args.save_fit).write_text(json.dumps(doc), encoding="utf-8")
    print(coef_table.to_text(), end="")
    print(f"K_hat={k_hat} (used K={k_use}); ||G||_F={g_frob:.4g}, ||Gamma||_F={gamma_frob:.4g}")
    return EXIT_OK


def cmd_bootstrap(args) -> int:
    config = _load_config(args.config)
    data_path = args.data or config.get("data", {}).get("path")
    if not data_path:
        raise InputError("no data source: pass --data or a config data.path")
    panel = load_panel_csv(data_path, schema=config.get("data", {}).get("schema"))
    spec = _basis_spec_from(config, panel.n_units, args)
    seed = args.seed if args.seed is not None else _default_seed()
    fit = estimate_beta(panel, spec)
    y_dot, x_dot = residualize_panel(panel, fit.projector)
    combos = tuple(tuple(v) for v in config.get("bootstrap", {}).get("linear_combinations", []))
    boot = bootstrap_beta(
        y_dot, x_dot,
        BootstrapConfig(n_replicates=args.bootstrap or 999, level=args.level or 0.95,
                        seed=seed, linear_combinations=combos),
    )
    outdir = Path(args.out or ".")
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "bootstrap.json").write_text(json.dumps(boot.to_dict()), encoding="utf-8")
    for name, iv in zip(panel.covariate_names, boot.intervals):
        print(f"{name}: {boot.beta_hat[list(panel.covariate_names).index(name)]:.6g} "
              f"[{iv[0]:.6g}, {iv[1]:.6g}]")
    return EXIT_OK


def cmd_simulate(args) -> int:
    config = _load_config(args.config)
    block = dict(config.get("dgp", {}))
    if args.n:
        block["n_units"] = args.n
    if args.t:
        block["n_periods"] = args.t
    if args.scenario:
        block["scenario"] = args.scenario
    if args.seed is not None:
        block["seed"] = args.seed
    block.setdefault("seed", _default_seed())
    if "n_units" not in block or "n_periods" not in block:
        raise InputError("simulate needs --n and --t (or a config dgp block)")
    dgp = DgpConfig.from_dict(block)
    sim = generate(dgp)
    outdir = Path(args.out or config.get("output", {}).get("directory", "."))
    outdir.mkdir(parents=True, exist_ok=True)
    write_panel_csv(sim.panel, outdir / "panel.csv")
    truth = {
        "dgp": dgp.to_dict(),
        "beta": sim.true_beta.tolist(),
        "f": sim.true_f.tolist(),
        "lambda": sim.true_lambda.tolist(),
        "gamma": sim.true_gamma.tolist(),
        "g_of_xbar": sim.true_g_of_xbar.tolist(),
    }
    (outdir / "truth.json").write_text(json.dumps(truth), encoding="utf-8")
    print(f"wrote {outdir / 'panel.csv'} "
          f"(N={dgp.n_units}, T={dgp.n_periods}, scenario={dgp.scenario.value})")
    return EXIT_OK


def cmd_montecarlo(args) -> int:
    config = _load_config(args.config)
    mc = dict(config.get("montecarlo", {}))
    dgp_block = dict(config.get("dgp", {}))
    if args.scenario:
        dgp_block["scenario"] = args.scenario
    if args.seed is not None:
        dgp_block["seed"] = args.seed
    dgp_block.setdefault("seed", _default_seed())
    s = args.s or mc.get("s", 500)
    cells = mc.get("cells")
    if not cells:
        if args.n and args.t:
            cells = [[args.n, args.t]]
        else:
            raise InputError("montecarlo needs cells in the config or --n/--t")
    estimators = tuple(mc.get("estimators", ESTIMATOR_NAMES))
    jobs = args.jobs or mc.get("parallelism", os.cpu_count() or 1)
    outdir = Path(args.out or config.get("output", {}).get("directory", "."))
    outdir.mkdir(parents=True, exist_ok=True)

    q = len(dgp_block.get("beta_true", (2.0, -1.0)))
    col_keys = [f"{name}_beta{j + 1}" for name in estimators for j in range(q)]
    row_keys, cells_rmse, meta_cells = [], [], []
    for n_units, n_periods in cells:
        t0 = time.perf_counter()
        dgp = DgpConfig.from_dict({**dgp_block, "n_units": n_units, "n_periods": n_periods})
        result = run_monte_carlo(dgp, estimators=estimators, s=s, parallelism=jobs)
        row = []
        for name in estimators:
            row.extend(result.rmse[name].tolist())
        row_keys.append(f"{n_units}x{n_periods}")
        cells_rmse.append(row)
        meta_cells.append({"n": n_units, "t": n_periods, "s": s,
                           "failures": result.failures,
                           "wall_seconds": round(time.perf_counter() - t0, 3)})
    rmse_table = ResultTable(
        row_keys=row_keys, col_keys=col_keys, cells=np.array(cells_rmse),
        caption=f"RMSE per estimator and coefficient (scenario="
                f"{dgp_block.get('scenario', 'gaussian_strong')}, S={s})",
        row_label="NxT",
    )
    rmse_table.to_csv(outdir / "rmse.csv")
    (outdir / "rmse.txt").write_text(rmse_table.to_text(), encoding="utf-8")

    coverage_block = mc.get("coverage")
    meta = {"seed": dgp_block["seed"], "s": s, "cells": meta_cells}
    if coverage_block:
        b = coverage_block.get("b", 199)
        levels = tuple(coverage_block.get("levels", (0.90, 0.95, 0.99)))
        methods = coverage_block.get("methods", [m.value for m in CoverageMethod])
        cov_rows, cov_cells = [], []
        for n_units, n_periods in cells:
            dgp = DgpConfig.from_dict({**dgp_block, "n_units": n_units, "n_periods": n_periods})
            row = []
            for method in methods:
                t0 = time.perf_counter()
                out = run_coverage_study(dgp, method, s=s, b=b, levels=levels,
                                         parallelism=jobs)
                row.extend(out["coverage"][lv] for lv in levels)
                meta_cells.append({"n": n_units, "t": n_periods, "method": method,
                                   "b": b, "failures": out["failures"],
                                   "wall_seconds": round(time.perf_counter() - t0, 3)})
            cov_rows.append(f"{n_units}x{n_periods}")
            cov_cells.append(row)
        cov_table = ResultTable(
            row_keys=cov_rows,
            col_keys=[f"{m}_{int(round(lv * 100))}" for m in methods for lv in levels],
            cells=np.array(cov_cells),
            caption=f"Empirical coverage for beta1 (S={s}, B={b})",
            row_label="NxT",
        )
        cov_table.to_csv(outdir / "coverage.csv")
        (outdir / "coverage.txt").write_text(cov_table.to_text(), encoding="utf-8")
        meta["b"] = b
    (outdir / "run_meta.json").write_text(json.dumps(meta, indent=2), encoding="utf-8")
    print(rmse_table.to_text(), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="panel-ife",
                                     description="Projection-based interactive fixed effects estimation")
    sub = parser.add_subparsers(dest="command", required=True)

    def shared(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, default=None,
                       help="RNG seed (falls back to PANEL_IFE_SEED, then 0)")
        p.add_argument("--jobs", type=int, default=None, help="worker count")
        p.add_argument("--out", help="output directory")

    p_est = sub.add_parser("estimate", help="fit a CSV panel and report coefficients")
    shared(p_est)
    p_est.add_argument("--data", help="long-format CSV panel")
    p_est.add_argument("--bootstrap", type=int, default=None, help="bootstrap replicates")
    p_est.add_argument("--level", type=float, default=None, help="confidence level")
    p_est.add_argument("--factors", type=int, default=None,
                       help="factor count (default: eigenvalue-ratio selection)")
    p_est.add_argument("--basis-family", choices=[f.value for f in BasisFamily])
    p_est.add_argument("--basis-j", type=int, help="sieve terms per covariate")
    p_est.add_argument("--plot", action="store_true", help="emit factors.svg")
    p_est.add_argument("--save-fit", help="write the fit as JSON to this path")
    p_est.set_defaults(func=cmd_estimate)

    p_boot = sub.add_parser("bootstrap", help="bootstrap intervals for a CSV panel")
    shared(p_boot)
    p_boot.add_argument("--data", help="long-format CSV panel")
    p_boot.add_argument("--bootstrap", type=int, default=None, help="bootstrap replicates")
    p_boot.add_argument("--level", type=float, default=None, help="confidence level")
    p_boot.add_argument("--basis-family", choices=[f.value for f in BasisFamily])
    p_boot.add_argument("--basis-j", type=int)
    p_boot.set_defaults(func=cmd_bootstrap)

    p_sim = sub.add_parser("simulate", help="materialize a simulated panel as CSV")
    shared(p_sim)
    p_sim.add_argument("--n", type=int, help="units")
    p_sim.add_argument("--t", type=int, help="periods")
    p_sim.add_argument("--scenario", choices=["gaussian_strong", "ar1_errors",
                                              "many_factors", "weak_factors"])
    p_sim.set_defaults(func=cmd_simulate)

    p_mc = sub.add_parser("montecarlo", help="run RMSE and coverage studies")
    shared(p_mc)
    p_mc.add_argument("--n", type=int, help="units (single-cell shortcut)")
    p_mc.add_argument("--t", type=int, help="periods (single-cell shortcut)")
    p_mc.add_argument("--s", type=int, default=None, help="replication count")
    p_mc.add_argument("--scenario", choices=["gaussian_strong", "ar1_errors",
                                             "many_factors", "weak_factors"])
    p_mc.set_defaults(func=cmd_montecarlo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except PanelIfeError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
