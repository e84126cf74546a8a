"""Command-line interface: fit, simulate, diagnose.

Exit codes: 0 success, 2 input problem (files, CSV shape or cells), 3
numeric/solver failure, 4 invalid configuration. Worker count for simulate
comes from --threads, falling back to the PWHL_THREADS environment variable
and then to 1. All commands are deterministic given --seed; reports embed
the seed, the grids, and a content hash of the input data.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import time

import numpy as np

from .core import Dataset, NumericError, PenaltyConfig, SolverError
from .diagnostics import SmoothingParams, empirical_breakdown, influence_function, smoothing_gap
from .metrics import aggregate, evaluate_replication, write_report_csv, write_report_json
from .simgen import (
    CASES,
    NOISES,
    ContaminationSpec,
    PipelineConfig,
    derive_seed,
    run_scenario,
)
from .solver import InnerSolverOptions, fit_pwhl
from .tuning import TuningGrid, select_alpha_lambda, select_mu, write_bic_table, write_mu_table
from .warmstart import WarmStart, compute_warm_start, pilot_refit

SCHEMA_VERSION = 1
PRESET_ALPHA = {"detect": 0.1, "estimate": 0.01}
_NA_TOKENS = {"", "na", "n/a", "nan", "null", "none", "missing"}


class InputError(Exception):
    """Problem with input files or their contents (exit code 2)."""


class ConfigError(Exception):
    """Invalid or inconsistent options (exit code 4)."""


def sis_screen(X, y, keep):
    """Rank columns by absolute Pearson correlation with y; return the top
    ``keep`` column indices in rank order, ties broken by column order.

    Constant columns (and a constant response) get correlation 0.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X and y must have matching rows")
    keep = int(keep)
    if not (1 <= keep <= X.shape[1]):
        raise ValueError("keep must lie in [1, p]")
    xc = X - X.mean(axis=0)
    yc = y - y.mean()
    xn = np.sqrt(np.sum(xc * xc, axis=0))
    yn = float(np.sqrt(yc @ yc))
    corr = np.zeros(X.shape[1])
    ok = xn > 0.0
    if yn > 0.0:
        corr[ok] = np.abs(xc[:, ok].T @ yc) / (xn[ok] * yn)
    order = np.argsort(-corr, kind="stable")
    return order[:keep]


def _sha256_file(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def read_csv_dataset(path, response):
    """Strict CSV reader: comma-separated, header row, UTF-8, '.' decimals.

    Any empty or NA-like cell, or any cell that does not parse as a finite
    number, is rejected with its (1-based) row and column coordinates.
    """
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except (StopIteration, UnicodeDecodeError) as exc:
            raise InputError(f"{path}: missing or undecodable header row") from exc
        header = [c.strip() for c in header]
        if response not in header:
            raise InputError(f"{path}: response column {response!r} not in header")
        y_col = header.index(response)
        rows = []
        for r, rec in enumerate(reader, start=2):
            if len(rec) != len(header):
                raise InputError(f"{path}: row {r} has {len(rec)} cells, expected {len(header)}")
            vals = []
            for c, cell in enumerate(rec):
                token = cell.strip()
                if token.lower() in _NA_TOKENS:
                    raise InputError(
                        f"{path}: missing value at row {r}, column {header[c]!r}")
                try:
                    v = float(token)
                except ValueError as exc:
                    raise InputError(
                        f"{path}: cannot parse {cell!r} at row {r}, column {header[c]!r}"
                    ) from exc
                if not math.isfinite(v):
                    raise InputError(
                        f"{path}: non-finite value at row {r}, column {header[c]!r}")
                vals.append(v)
            rows.append(vals)
    if len(rows) < 2:
        raise InputError(f"{path}: need at least two data rows")
    arr = np.asarray(rows, dtype=float)
    y = arr[:, y_col]
    X = np.delete(arr, y_col, axis=1)
    names = [h for k, h in enumerate(header) if k != y_col]
    if X.shape[1] < 1:
        raise InputError(f"{path}: no feature columns besides the response")
    return Dataset(X, y, feature_names=names), _sha256_file(path)


def _resolve_threads(args):
    if getattr(args, "threads", None) is not None:
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        return args.threads
    env = os.environ.get("PWHL_THREADS", "").strip()
    if env:
        try:
            val = int(env)
        except ValueError as exc:
            raise ConfigError(f"PWHL_THREADS is not an integer: {env!r}") from exc
        if val < 1:
            raise ConfigError("PWHL_THREADS must be at least 1")
        return val
    return 1


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------- fit

def _cmd_fit(args):
    t0 = time.monotonic()
    data, digest = read_csv_dataset(args.data, args.response)
    names = list(data.feature_names)

    screen_info = None
    if args.screen is not None:
        if not (1 <= args.screen <= data.p):
            raise ConfigError(f"--screen must lie in [1, {data.p}]")
        ranked = sis_screen(data.X, data.y, args.screen)
        kept = np.sort(ranked)
        screen_info = {
            "k": int(args.screen),
            "ranked": [names[int(j)] for j in ranked],
            "kept": [names[int(j)] for j in kept],
        }
        data = Dataset(data.X[:, kept], data.y,
                       feature_names=[names[int(j)] for j in kept])
        names = list(data.feature_names)

    if args.preset and args.alpha is not None:
        raise ConfigError("--preset and --alpha are mutually exclusive")
    fixed_alpha = args.alpha if args.alpha is not None else PRESET_ALPHA.get(args.preset)
    if args.tune and fixed_alpha is not None:
        raise ConfigError("--tune selects alpha from the grid; do not also fix it")
    if not args.tune and fixed_alpha is None:
        raise ConfigError("choose --preset detect|estimate, give --alpha, or pass --tune")

    try:
        base = TuningGrid(hetero=args.hetero_grid)
        grid = TuningGrid(
            mu_grid=base.mu_grid if args.mu is None else (float(args.mu),),
            alpha_grid=base.alpha_grid if fixed_alpha is None else (float(fixed_alpha),),
            lambda_grid=base.lambda_grid if args.lam is None else (float(args.lam),),
            hetero=args.hetero_grid,
        )
        warm = compute_warm_start(
            data, lambda0=args.lambda0, trim_fraction=args.trim,
            n_starts=args.lts_starts, rng_seed=derive_seed(args.seed, 100))
        if not args.no_pilot:
            warm = pilot_refit(data, warm)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    tuning_info = {"grids": {"mu": list(grid.mu_grid), "alpha": list(grid.alpha_grid),
                             "lambda": list(grid.lambda_grid)}}
    if args.mu is not None:
        mu_hat = float(args.mu)
    else:
        alpha_for_mu = fixed_alpha if fixed_alpha is not None else 0.1
        mu_sel = select_mu(data, warm.beta0, warm.varpi, alpha_for_mu, grid,
                           rng_seed=derive_seed(args.seed, 101))
        mu_hat = mu_sel.mu
        tuning_info["mu_table"] = [[m, s] for m, s in mu_sel.table]
        if args.tables:
            write_mu_table(f"{args.tables}_mu.csv", mu_sel.table)

    sel = select_alpha_lambda(data, mu_hat, grid, warm)
    fit = sel.fit
    tuning_info["bic_table"] = [
        [row.alpha, row.lam, row.score, row.df, row.rss] for row in sel.table
    ]
    if args.tables:
        write_bic_table(f"{args.tables}_bic.csv", sel.table)

    support = fit.beta.support()
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": "fit",
        "seed": args.seed,
        "data": {
            "path": os.path.abspath(args.data),
            "sha256": digest,
            "n": data.n,
            "p": data.p,
            "response": args.response,
            "feature_names": names,
        },
        "screen": screen_info,
        "preset": args.preset,
        "tuning": tuning_info,
        "selected": {"alpha": sel.alpha, "mu": mu_hat, "lambda": sel.lam},
        "coefficients": {
            "nonzero": [
                {"name": names[int(j)], "index": int(j) + 1, "value": float(fit.beta.beta[j])}
                for j in support
            ],
            "beta": fit.beta.beta.tolist(),
            "zero_tolerance": fit.beta.zero_tolerance,
        },
        "weights": fit.w.tolist(),
        "varpi": warm.varpi.tolist(),
        "outliers": [
            {"index": int(i) + 1, "weight": float(fit.w[i])} for i in sorted(fit.outliers)
        ],
        "converged": fit.converged,
        "outer_iterations": fit.outer_iterations,
        "objective_trace": list(fit.objective_trace),
        "timing_seconds": round(time.monotonic() - t0, 6),
    }
    _write_json(args.out, report)
    print(f"fit: {len(support)} variables, {len(fit.outliers)} flagged rows "
          f"-> {args.out}")
    return 0


# ---------------------------------------------------------------- simulate

def _load_scenario(args):
    if args.scenario:
        try:
            with open(args.scenario, encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise InputError(f"cannot open {args.scenario}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise InputError(f"{args.scenario}: invalid JSON ({exc})") from exc
        if not isinstance(raw, dict):
            raise InputError(f"{args.scenario}: scenario must be a JSON object")
        allowed = {"n", "p", "case", "c", "kappa", "noise", "hetero",
                   "beta_star", "seed", "both_from_contaminated"}
        unknown = set(raw) - allowed
        if unknown:
            raise ConfigError(f"unknown scenario fields: {sorted(unknown)}")
        raw.setdefault("seed", args.seed)
        try:
            return ContaminationSpec(**raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid scenario: {exc}") from exc
    try:
        return ContaminationSpec(
            n=args.n, p=args.p, case=args.case, c=args.c, kappa=args.kappa,
            noise=args.noise, hetero=args.hetero, seed=args.seed,
        )
    except ValueError as exc:
        raise ConfigError(f"invalid scenario: {exc}") from exc


def _parse_fixed_params(text):
    out = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ConfigError(f"--fixed-params entries look like key=value, got {part!r}")
        key, _, val = part.partition("=")
        key = key.strip().lower()
        if key not in ("alpha", "mu", "lambda"):
            raise ConfigError(f"--fixed-params keys are alpha, mu, lambda; got {key!r}")
        try:
            out[key] = float(val)
        except ValueError as exc:
            raise ConfigError(f"--fixed-params value for {key} is not a number") from exc
    missing = {"alpha", "mu", "lambda"} - set(out)
    if missing:
        raise ConfigError(f"--fixed-params is missing {sorted(missing)}")
    return out


def _cmd_simulate(args):
    t0 = time.monotonic()
    spec = _load_scenario(args)
    threads = _resolve_threads(args)
    if args.fixed_params and args.tune_each:
        raise ConfigError("--fixed-params and --tune-each are mutually exclusive")
    if not args.fixed_params and not args.tune_each:
        raise ConfigError("choose --tune-each or --fixed-params alpha=..,mu=..,lambda=..")
    try:
        if args.fixed_params:
            fixed = _parse_fixed_params(args.fixed_params)
            pipeline = PipelineConfig(
                tune=False, alpha=fixed["alpha"], mu=fixed["mu"], lam=fixed["lambda"],
                grid=TuningGrid(hetero=spec.hetero), holdout_fraction=args.holdout,
            )
        else:
            pipeline = PipelineConfig(
                tune=True, grid=TuningGrid(hetero=spec.hetero),
                holdout_fraction=args.holdout,
            )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if args.reps < 1:
        raise ConfigError("--reps must be at least 1")

    records = run_scenario(spec, pipeline, args.reps, threads=threads)
    report = aggregate([evaluate_replication(rec) for rec in records])
    scenario_echo = {
        "n": spec.n, "p": spec.p, "case": spec.case, "c": spec.c,
        "kappa": spec.kappa, "noise": spec.noise, "hetero": spec.hetero,
        "seed": spec.seed, "replications": args.reps,
        "tuned": bool(args.tune_each),
        "grids": {"mu": list(pipeline.grid.mu_grid),
                  "alpha": list(pipeline.grid.alpha_grid),
                  "lambda": list(pipeline.grid.lambda_grid)},
        "threads": threads,
        "holdout_fraction": args.holdout,
        "timing_seconds": round(time.monotonic() - t0, 6),
    }
    label = f"{spec.case}:c={spec.c}:noise={spec.noise}" + (":hetero" if spec.hetero else "")
    write_report_csv(f"{args.out}.csv", report, scenario_label=label)
    write_report_json(f"{args.out}.json", report, scenario=scenario_echo)
    print(f"simulate: {args.reps} replications -> {args.out}.csv, {args.out}.json")
    return 0


# ---------------------------------------------------------------- diagnose

def _load_fit_report(path):
    try:
        with open(path, encoding="utf-8") as fh:
            report = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot open {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from exc
    if report.get("schema_version") != SCHEMA_VERSION:
        raise InputError(f"{path}: unsupported schema_version "
                         f"{report.get('schema_version')!r}")
    if report.get("command") != "fit":
        raise InputError(f"{path}: not a fit report")
    return report


def _rebuild_fit(report, data):
    from .core import Coefficients, FitResult

    beta = np.asarray(report["coefficients"]["beta"], dtype=float)
    w = np.asarray(report["weights"], dtype=float)
    varpi = np.asarray(report["varpi"], dtype=float)
    sel = report["selected"]
    if beta.shape[0] != data.p or w.shape[0] != data.n:
        raise InputError("fit report does not match the data dimensions")
    cfg = PenaltyConfig(alpha=sel["alpha"], mu=sel["mu"], lam=sel["lambda"], varpi=varpi)
    trace = report.get("objective_trace") or [0.0]
    return FitResult(
        beta=Coefficients(beta, report["coefficients"].get("zero_tolerance", 1e-6)),
        w=w,
        outliers=frozenset(np.flatnonzero(w < 1.0).tolist()),
        objective_trace=tuple(trace),
        outer_iterations=max(1, int(report.get("outer_iterations", 1))),
        converged=bool(report.get("converged", True)),
        config_used=cfg,
    )


def _parse_float_list(text, flag):
    try:
        vals = [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"{flag} expects a comma-separated list of numbers") from exc
    if not vals:
        raise ConfigError(f"{flag} expects at least one value")
    return vals


def _cmd_diagnose(args):
    report = _load_fit_report(args.fit)
    data, digest = read_csv_dataset(args.data, report["data"]["response"])
    if digest != report["data"]["sha256"]:
        raise InputError("data file does not match the fit report (checksum mismatch)")
    kept = report["data"]["feature_names"]
    if list(data.feature_names) != kept:
        try:
            idx = [data.feature_names.index(name) for name in kept]
        except ValueError as exc:
            raise InputError(f"fit report feature missing from data: {exc}") from exc
        data = Dataset(data.X[:, idx], data.y, feature_names=kept)
    fit = _rebuild_fit(report, data)
    names = list(data.feature_names)

    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        if args.smoothing_gap:
            hs = _parse_float_list(args.smoothing_gap, "--smoothing-gap")
            writer.writerow(["h", "sup_gap"])
            for h in hs:
                gap = smoothing_gap(fit.config_used.alpha, h)
                writer.writerow([repr(float(h)), repr(gap)])
        elif args.influence is not None:
            idx = int(args.influence) - 1
            if not (0 <= idx < data.n):
                raise ConfigError(f"--influence index must lie in [1, {data.n}]")
            sm = SmoothingParams(h=args.bandwidth)
            res = influence_function(data, fit, idx, sm=sm)
            writer.writerow(["coordinate", "value"])
            for j in range(data.p):
                writer.writerow([names[j], repr(float(res.vector[j]))])
            for i in range(data.n):
                writer.writerow([f"obs_{i + 1}", repr(float(res.vector[data.p + i]))])
        else:
            mags = _parse_float_list(args.breakdown, "--breakdown")
            try:
                curve = empirical_breakdown(
                    data, fit.config_used, mags, rng_seed=args.seed,
                    beta0=fit.beta, gamma=args.gamma,
                )
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
            writer.writerow(["magnitude", "beta_norm", "max_abs_residual"])
            for tau, norm_, resid in zip(curve.magnitudes, curve.beta_norms,
                                         curve.max_abs_residuals):
                writer.writerow([repr(tau), repr(norm_), repr(resid)])
    print(f"diagnose -> {args.out}")
    return 0


# ---------------------------------------------------------------- parser

def build_parser():
    parser = argparse.ArgumentParser(
        prog="pwhl",
        description="Sparse regression with joint outlier detection.",
    )
    sub = parser.add_subparsers(dest="cmd", required=True)

    p_fit = sub.add_parser("fit", help="fit a CSV dataset and write a JSON report")
    p_fit.add_argument("--data", required=True, help="CSV file with a header row")
    p_fit.add_argument("--response", required=True, help="name of the response column")
    p_fit.add_argument("--screen", type=int, default=None,
                       help="keep only the top K correlation-ranked features")
    p_fit.add_argument("--preset", choices=sorted(PRESET_ALPHA),
                       help="detection-oriented (alpha=0.1) or estimation-oriented "
                            "(alpha=0.01) Huber parameter")
    p_fit.add_argument("--tune", action="store_true",
                       help="select alpha from the grid instead of a preset")
    p_fit.add_argument("--hetero-grid", action="store_true",
                       help="use the heteroskedastic default alpha grid with --tune")
    p_fit.add_argument("--alpha", type=float, default=None, help="fix alpha")
    p_fit.add_argument("--mu", type=float, default=None, help="fix mu (skip stability selection)")
    p_fit.add_argument("--lambda", dest="lam", type=float, default=None,
                       help="fix the L1 level (skip BIC selection of lambda)")
    p_fit.add_argument("--lambda0", type=float, default=0.05,
                       help="L1 level of the trimmed warm start")
    p_fit.add_argument("--trim", type=float, default=0.65,
                       help="fraction of rows kept by the trimmed warm start")
    p_fit.add_argument("--lts-starts", type=int, default=60,
                       help="random starts for the trimmed warm start")
    p_fit.add_argument("--no-pilot", action="store_true",
                       help="skip the pilot refit that rescales the initial weights")
    p_fit.add_argument("--seed", type=int, default=0)
    p_fit.add_argument("--tables", default=None,
                       help="prefix for CSV score tables (_mu.csv, _bic.csv)")
    p_fit.add_argument("--out", required=True, help="output JSON report path")
    p_fit.set_defaults(func=_cmd_fit)

    p_sim = sub.add_parser("simulate", help="run a synthetic scenario study")
    p_sim.add_argument("--scenario", default=None,
                       help="JSON file with scenario fields (n, p, case, c, ...)")
    p_sim.add_argument("--case", choices=CASES, default="none")
    p_sim.add_argument("--c", type=float, default=0.0, help="contamination fraction")
    p_sim.add_argument("--n", type=int, default=100)
    p_sim.add_argument("--p", type=int, default=400)
    p_sim.add_argument("--kappa", type=float, default=0.4)
    p_sim.add_argument("--noise", choices=NOISES, default="normal")
    p_sim.add_argument("--hetero", action="store_true")
    p_sim.add_argument("--reps", type=int, required=True)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--tune-each", action="store_true",
                       help="full tuning in every replication")
    p_sim.add_argument("--fixed-params", default=None,
                       help="alpha=A,mu=M,lambda=L (skip tuning)")
    p_sim.add_argument("--holdout", type=float, default=None,
                       help="hold out this fraction per replication and report test MSE")
    p_sim.add_argument("--threads", type=int, default=None,
                       help="worker processes (default: PWHL_THREADS or 1)")
    p_sim.add_argument("--out", required=True,
                       help="output prefix; writes <out>.csv and <out>.json")
    p_sim.set_defaults(func=_cmd_simulate)

    p_diag = sub.add_parser("diagnose", help="influence, breakdown, or smoothing-gap "
                                             "diagnostics for a finished fit")
    p_diag.add_argument("--fit", required=True, help="JSON report from the fit command")
    p_diag.add_argument("--data", required=True, help="the same CSV used for the fit")
    group = p_diag.add_mutually_exclusive_group(required=True)
    group.add_argument("--influence", type=int, default=None,
                       help="1-based observation index")
    group.add_argument("--breakdown", default=None,
                       help="comma-separated contamination magnitudes (ascending)")
    group.add_argument("--smoothing-gap", dest="smoothing_gap", default=None,
                       help="comma-separated bandwidths")
    p_diag.add_argument("--bandwidth", type=float, default=None,
                        help="smoothing bandwidth (default n**-0.5)")
    p_diag.add_argument("--gamma", type=float, default=2.0,
                        help="response slope of the breakdown probe")
    p_diag.add_argument("--seed", type=int, default=0)
    p_diag.add_argument("--out", required=True, help="output CSV path")
    p_diag.set_defaults(func=_cmd_diagnose)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except (SolverError, NumericError, FloatingPointError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
