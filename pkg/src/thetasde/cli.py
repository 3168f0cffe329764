"""Command line interface.

Subcommands:
  simulate          integrate a single path or coupled pair, write CSV
  region            print the admissible stepsize region
  experiment        deviation ensembles over a stepsize sweep (CSV + JSON
                    manifest + rendered decay figure)
  estimate          run the constant estimation pipeline, emit JSON
  linear-stability  raster of the linear mean-square stability region

Exit codes: 0 on success (including negative verdicts such as an empty
region), 2 on usage errors, 1 on runtime failures.  The default output
directory comes from $THETASDE_OUTDIR.  ``experiment --config file.json``
reads a config mirroring the flags; explicit flags win over the file.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from fractions import Fraction

import numpy as np

from . import __version__, contractivity, report
from .contractivity import DomainError
from .ensemble import FitError, contractivity_experiment
from .estimation import (EstimationConfig, EstimationError, MU_RULES,
                         estimate_constants)
from .integrators import (MethodConfig, Scheme, SolverError, integrate_pair,
                          integrate_path)
from .problems import (BUILTIN_NAMES, ProblemConstants, SdeProblem,
                       UnknownProblemError, UnsupportedProblemError,
                       builtin_problem)
from .wiener import NoiseGrid

ENV_OUTDIR = "THETASDE_OUTDIR"

DEFAULT_DT_SWEEP = (2.0, 1.0, 0.5, 0.25, 0.125)

PRESETS = {
    "fig1": {"problem": "problem1", "scheme": "maruyama", "theta": 0.5},
    "fig2": {"problem": "problem1", "scheme": "maruyama", "theta": 1.0},
    "fig3": {"problem": "problem1", "scheme": "milstein", "theta": 0.5},
    "fig4": {"problem": "problem2", "scheme": "maruyama", "theta": 0.5},
    "fig5": {"problem": "problem2", "scheme": "maruyama", "theta": 0.65},
    "fig6": {"problem": "problem3", "scheme": "maruyama", "theta": 0.5},
    "fig7": {"problem": "problem3", "scheme": "maruyama", "theta": 1.0},
    "p2-milstein-065": {"problem": "problem2", "scheme": "milstein",
                        "theta": 0.65},
}

_EXPERIMENT_FIELDS = {
    "problem", "scheme", "theta", "dts", "paths", "pairs", "seed",
    "horizon", "constants", "mtilde", "mu_rule", "x0", "y0", "formats",
    "figure", "preset", "lam", "mu_diff",
}

_EXPERIMENT_DEFAULTS = {
    "scheme": "maruyama", "theta": 0.5, "dts": None, "paths": 2000,
    "pairs": 10000, "seed": 42, "horizon": None, "constants": "paper",
    "mtilde": None, "mu_rule": "max", "x0": None, "y0": None,
    "formats": ["csv", "json"], "figure": True, "lam": -4.0,
    "mu_diff": 1.0,
}


class UsageError(Exception):
    """Bad arguments discovered after parsing (exit code 2)."""


def _theta_arg(text):
    try:
        value = float(Fraction(text))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(
            f"invalid theta {text!r}") from None
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(
            f"theta must lie in [0, 1], got {text}")
    return value


def _rational_arg(text):
    try:
        return float(Fraction(text))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(
            f"expected a number or fraction, got {text!r}") from None


def _positive_float(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected a number, got {text!r}") from None
    if value <= 0.0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return value


def _float_list(text):
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected comma-separated numbers, got {text!r}") from None


def _range_arg(text):
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(
            f"expected min:max:count, got {text!r}")
    try:
        lo, hi = float(parts[0]), float(parts[1])
        count = int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected min:max:count, got {text!r}") from None
    if count < 2 or hi <= lo:
        raise argparse.ArgumentTypeError(
            f"need max > min and count >= 2, got {text!r}")
    return (lo, hi, count)


def _outdir(args):
    out = getattr(args, "out", None) or os.environ.get(ENV_OUTDIR) or "."
    os.makedirs(out, exist_ok=True)
    return out


def _load_problem(name, args=None, horizon=None):
    params = {}
    if name == "linear" and args is not None:
        if getattr(args, "lam", None) is not None:
            params["lam"] = args.lam
        if getattr(args, "mu_diff", None) is not None:
            params["mu_diff"] = args.mu_diff
    problem = builtin_problem(name, **params)
    if horizon is not None:
        import dataclasses
        problem = dataclasses.replace(problem, horizon=float(horizon))
    return problem


def _constants_from_source(source, problem, scheme, theta, est_config):
    if source in ("paper", "paper-preset"):
        if problem.constants is None:
            raise UsageError(
                f"problem {problem.label!r} has no preset constants; use "
                "--constants estimated or a JSON file")
        return problem.constants
    if source == "estimated":
        method = MethodConfig(scheme=scheme, theta=theta, dt=0.25)
        constants, _ = estimate_constants(
            problem, method, est_config,
            include_m_tilde=Scheme.parse(scheme) is Scheme.MILSTEIN)
        return constants
    try:
        with open(source, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read constants file {source!r}: {exc}")
    try:
        return ProblemConstants(L=float(data["L"]), mu=float(data["mu"]),
                                M=float(data["M"]),
                                M_tilde=(None if data.get("M_tilde") is None
                                         else float(data["M_tilde"])))
    except KeyError as exc:
        raise UsageError(f"constants file misses key {exc}")


def _apply_mtilde(constants, mtilde):
    if mtilde is None:
        return constants
    tags = dict(constants.provenance)
    tags["M_tilde"] = "user-supplied"
    return ProblemConstants(L=constants.L, mu=constants.mu, M=constants.M,
                            M_tilde=float(mtilde), provenance=tags)


def _provenance_summary(constants):
    tags = set(constants.provenance.values())
    return tags.pop() if len(tags) == 1 else "mixed"


# ---------------------------------------------------------------------------
# simulate

def cmd_simulate(args):
    problem = _load_problem(args.problem, args, horizon=args.horizon)
    config = MethodConfig(scheme=args.scheme, theta=args.theta, dt=args.dt)
    steps = int(round(problem.horizon / args.dt))
    if steps < 1:
        raise UsageError("horizon shorter than one step")
    x0 = problem.x0 if args.x0 is None else np.asarray(args.x0)
    if x0 is None:
        raise UsageError("problem has no default x0; pass --x0")
    grid = NoiseGrid(dt=args.dt, steps=steps, m=problem.m,
                     master_seed=args.seed, path_index=args.path_index)
    echo = {
        "command": "simulate", "problem": args.problem,
        "scheme": str(Scheme.parse(args.scheme).value), "theta": args.theta,
        "dt": args.dt, "horizon": problem.horizon, "seed": args.seed,
        "path_index": args.path_index, "pair": bool(args.pair),
        "x0": [float(v) for v in x0],
    }
    if args.pair:
        y0 = problem.y0 if args.y0 is None else np.asarray(args.y0)
        if y0 is None:
            raise UsageError("problem has no default y0; pass --y0")
        echo["y0"] = [float(v) for v in y0]
        tx, ty = integrate_pair(problem, config, x0, y0, grid=grid)
        trajectories = [tx, ty]
    else:
        trajectories = [integrate_path(problem, config, x0, grid=grid)]
    outdir = _outdir(args)
    name = (f"trajectory_{args.problem}_{echo['scheme']}"
            f"_theta{args.theta:g}_dt{args.dt:g}_path{args.path_index}.csv")
    path = os.path.join(outdir, name)
    report.write_trajectory_csv(path, trajectories, config=echo)
    print(f"wrote {path}")
    return 0


# ---------------------------------------------------------------------------
# region

def cmd_region(args):
    problem = _load_problem(args.problem, args)
    est = EstimationConfig(P=args.paths, Q=args.pairs, seed=args.seed,
                           mu_rule=args.mu_rule)
    constants = _constants_from_source(args.constants, problem, args.scheme,
                                       args.theta, est)
    constants = _apply_mtilde(constants, args.mtilde)
    reg = contractivity.region(args.scheme, constants, args.theta)
    if args.json:
        payload = {
            "problem": args.problem,
            "scheme": str(Scheme.parse(args.scheme).value),
            "theta": args.theta,
            "constants": constants.to_dict(),
            "region": {
                "sup": None if reg.empty else (
                    "inf" if math.isinf(reg.sup) else reg.sup),
                "sup_display": reg.format_sup(),
                "unconditional": reg.unconditional,
                "empty": reg.empty,
            },
        }
        print(json.dumps(report._sanitize(payload), indent=2,
                         sort_keys=True))
        return 0
    c = constants
    mt = "none" if c.M_tilde is None else f"{c.M_tilde:g}"
    print(f"constants: L={c.L:g} mu={c.mu:g} M={c.M:g} M_tilde={mt} "
          f"alpha={c.alpha:g} [{_provenance_summary(c)}]")
    if reg.empty:
        print(f"R = ∅; not mean-square contractive ({reg.note})")
    elif reg.unconditional:
        print("R = (0, ∞), unconditional")
    else:
        print(f"R = (0, {reg.format_sup()})")
        if reg.sup_fraction is not None:
            print(f"  = (0, {reg.sup:.12g})")
    return 0


# ---------------------------------------------------------------------------
# estimate

def cmd_estimate(args):
    problem = _load_problem(args.problem, args, horizon=args.horizon)
    method = MethodConfig(scheme=args.scheme, theta=args.theta, dt=args.dt)
    est = EstimationConfig(P=args.paths, Q=args.pairs, seed=args.seed,
                           mu_rule=args.mu_rule)
    include_mt = (Scheme.parse(args.scheme) is Scheme.MILSTEIN
                  or args.with_mtilde)
    constants, box = estimate_constants(problem, method, est,
                                        include_m_tilde=include_mt)
    payload = {
        "config": {
            "command": "estimate", "problem": args.problem,
            "scheme": str(method.scheme.value), "theta": args.theta,
            "dt": args.dt, "horizon": problem.horizon,
            "paths": args.paths, "pairs": args.pairs, "seed": args.seed,
            "mu_rule": args.mu_rule,
        },
        "constants": constants.to_dict(),
        "box": {"lower": list(box.lower), "upper": list(box.upper)},
    }
    text = json.dumps(report._sanitize(payload), indent=2, sort_keys=True)
    print(text)
    if args.out:
        outdir = _outdir(args)
        path = os.path.join(outdir, f"estimate_{args.problem}.json")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        print(f"wrote {path}", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# experiment

def _load_config_file(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path!r}: {exc}")
    if isinstance(data, dict) and isinstance(data.get("config"), dict):
        data = data["config"]
    data = dict(data)
    data.pop("command", None)
    unknown = sorted(set(data) - _EXPERIMENT_FIELDS)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    return data


def _resolve_experiment_config(args):
    file_cfg = _load_config_file(args.config) if args.config else {}
    preset = args.preset or file_cfg.get("preset")
    if preset is not None and preset not in PRESETS:
        raise UsageError(f"unknown preset {preset!r}; valid: "
                         + ", ".join(sorted(PRESETS)))
    resolved = dict(_EXPERIMENT_DEFAULTS)
    resolved["problem"] = None
    resolved["preset"] = preset
    if preset:
        resolved.update(PRESETS[preset])
    for key, value in file_cfg.items():
        if key != "preset" and value is not None:
            resolved[key] = value
    for key in ("problem", "scheme", "theta", "dts", "paths", "pairs",
                "seed", "horizon", "constants", "mtilde", "mu_rule",
                "x0", "y0", "formats", "figure", "lam", "mu_diff"):
        value = getattr(args, key)
        if value is not None:
            resolved[key] = value
    if resolved["problem"] is None:
        raise UsageError("no problem selected; pass --problem or --preset")
    if not 0.0 <= float(resolved["theta"]) <= 1.0:
        raise UsageError(
            f"theta must lie in [0, 1], got {resolved['theta']}")
    if resolved["mu_rule"] not in MU_RULES:
        raise UsageError(f"mu_rule must be one of {MU_RULES}")
    bad = set(resolved["formats"]) - {"csv", "json"}
    if bad:
        raise UsageError(f"unknown formats: {', '.join(sorted(bad))}")
    return resolved


def _default_sweep(reg):
    dts = [dt for dt in DEFAULT_DT_SWEEP
           if reg.empty or math.isinf(reg.sup) or dt <= 2.0 * reg.sup]
    return dts or list(DEFAULT_DT_SWEEP[-1:])


def cmd_experiment(args):
    cfg = _resolve_experiment_config(args)
    problem = _load_problem(cfg["problem"], argparse.Namespace(
        lam=cfg["lam"], mu_diff=cfg["mu_diff"]), horizon=cfg["horizon"])
    est = EstimationConfig(P=int(cfg["paths"]), Q=int(cfg["pairs"]),
                           seed=int(cfg["seed"]), mu_rule=cfg["mu_rule"])
    constants = _constants_from_source(cfg["constants"], problem,
                                       cfg["scheme"], float(cfg["theta"]),
                                       est)
    constants = _apply_mtilde(constants, cfg["mtilde"])
    reg = contractivity.region(cfg["scheme"], constants, float(cfg["theta"]))
    dts = [float(dt) for dt in (cfg["dts"] or _default_sweep(reg))]
    cfg["dts"] = dts

    x0 = None if cfg["x0"] is None else np.asarray(cfg["x0"], dtype=float)
    y0 = None if cfg["y0"] is None else np.asarray(cfg["y0"], dtype=float)

    echo = {"command": "experiment"}
    for key in ("problem", "scheme", "theta", "dts", "paths", "pairs",
                "seed", "horizon", "constants", "mtilde", "mu_rule",
                "formats", "figure", "preset"):
        echo[key] = cfg[key]
    echo["scheme"] = str(Scheme.parse(cfg["scheme"]).value)
    echo["theta"] = float(cfg["theta"])
    echo["x0"] = None if x0 is None else [float(v) for v in x0]
    echo["y0"] = None if y0 is None else [float(v) for v in y0]
    if cfg["problem"] == "linear":
        echo["lam"] = float(cfg["lam"])
        echo["mu_diff"] = float(cfg["mu_diff"])

    table = _run_experiment_table(problem, cfg, constants, x0, y0,
                                  workers=args.workers)

    outdir = _outdir(args)
    manifest_rows = []
    for row in table.rows:
        entry = {
            "dt": row.dt, "in_region": row.in_region,
            "amplification": row.amplification, "exponent": row.exponent,
            "csv": None, "fitted_slope": None, "fit_window": None,
            "D0": None, "slope_note": None, "error": row.error,
        }
        if row.result is not None:
            res = row.result
            entry.update({
                "fitted_slope": res.fitted_slope,
                "fit_window": list(res.fit_window),
                "D0": float(res.msd[0]),
                "slope_note": res.slope_note or None,
            })
            if "csv" in cfg["formats"]:
                name = f"msd_dt{row.dt:g}.csv"
                row_echo = dict(echo)
                row_echo["this_dt"] = row.dt
                report.write_msd_csv(os.path.join(outdir, name), res,
                                     config=row_echo)
                entry["csv"] = name
        manifest_rows.append(entry)

    figure_name = None
    if cfg["figure"]:
        figure_name = "decay.png"
        title = (f"{table.problem} {table.scheme} theta={table.theta:g} "
                 f"P={cfg['paths']}")
        report.render_decay_figure(os.path.join(outdir, figure_name),
                                   table, title=title)

    if "json" in cfg["formats"]:
        manifest = {
            "config": echo,
            "constants": constants.to_dict(),
            "region": {
                "sup": reg.sup, "sup_display": reg.format_sup(),
                "unconditional": reg.unconditional, "empty": reg.empty,
            },
            "rows": manifest_rows,
            "figure": figure_name,
        }
        report.write_json(os.path.join(outdir, "manifest.json"), manifest)

    print(f"problem={table.problem} scheme={table.scheme} "
          f"theta={table.theta:g} region_sup={reg.format_sup()}")
    for row in table.rows:
        if row.error:
            print(f"  dt={row.dt:g}: error: {row.error}")
            continue
        res = row.result
        slope = (f"{res.fitted_slope:.6g}"
                 if math.isfinite(res.fitted_slope) else "nan")
        rate = (f"{row.exponent:.6g}" if math.isfinite(row.exponent)
                else "undefined")
        print(f"  dt={row.dt:g}: in_region={row.in_region} "
              f"slope={slope} rate={rate}")
    print(f"outputs in {outdir}")
    return 0


def _run_experiment_table(problem, cfg, constants, x0, y0, workers):
    from .ensemble import ExperimentRow, ExperimentTable, run_ensemble

    reg = contractivity.region(cfg["scheme"], constants, float(cfg["theta"]))
    table = ExperimentTable(
        problem=problem.label,
        scheme=str(Scheme.parse(cfg["scheme"]).value),
        theta=float(cfg["theta"]), constants=constants, region=reg)
    for dt in cfg["dts"]:
        row = ExperimentRow(dt=float(dt), in_region=reg.contains(dt))
        try:
            method = MethodConfig(scheme=cfg["scheme"],
                                  theta=float(cfg["theta"]), dt=float(dt))
            row.result = run_ensemble(
                problem, method, x0=x0, y0=y0, paths=int(cfg["paths"]),
                master_seed=int(cfg["seed"]), workers=workers,
                constants=constants, horizon=cfg["horizon"])
            row.amplification = row.result.amplification
            row.exponent = row.result.theoretical_exponent
        except Exception as exc:  # noqa: BLE001 - rows record their failure
            row.error = f"{type(exc).__name__}: {exc}"
        table.rows.append(row)
    return table


# ---------------------------------------------------------------------------
# linear stability raster

def cmd_linear_stability(args):
    lo_u, hi_u, count_u = args.u_range
    lo_v, hi_v, count_v = args.v_range
    if lo_v < 0.0:
        raise UsageError("v = dt*mu^2 cannot be negative")
    u = np.linspace(lo_u, hi_u, count_u)
    v = np.linspace(lo_v, hi_v, count_v)
    factor = np.empty((count_v, count_u))
    for i, vv in enumerate(v):
        for j, uu in enumerate(u):
            try:
                factor[i, j] = contractivity.linear_ms_stable(
                    args.scheme, args.theta, 1.0, uu, math.sqrt(vv)).factor
            except DomainError:
                # grid point on the singular line theta*u = 1, where the
                # implicit step is undefined; certainly not stable
                factor[i, j] = math.inf
    echo = {
        "command": "linear-stability",
        "scheme": str(Scheme.parse(args.scheme).value), "theta": args.theta,
        "u_range": list(args.u_range), "v_range": list(args.v_range),
    }
    outdir = _outdir(args)
    uu, vv = np.meshgrid(u, v)
    csv_path = os.path.join(outdir, "stability.csv")
    report.write_csv(csv_path, ["u", "v", "factor", "stable"],
                     [uu.ravel(), vv.ravel(), factor.ravel(),
                      (factor < 1.0).astype(float).ravel()],
                     config=echo)
    png_path = os.path.join(outdir, "stability.png")
    report.render_stability_figure(
        png_path, u, v, factor,
        title=f"{echo['scheme']} theta={args.theta:g}")
    stable_share = float((factor < 1.0).mean())
    print(f"stable share of the raster: {stable_share:.3f}")
    print(f"wrote {csv_path}")
    print(f"wrote {png_path}")
    return 0


# ---------------------------------------------------------------------------
# parser

def build_parser():
    parser = argparse.ArgumentParser(
        prog="thetasde",
        description="Stochastic theta methods with mean-square "
                    "contractivity analysis")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_common(p, problem_required=True):
        p.add_argument("--problem", required=problem_required,
                       help="built-in problem name: "
                            + ", ".join(BUILTIN_NAMES))
        p.add_argument("--scheme", default="maruyama",
                       help="maruyama or milstein")
        p.add_argument("--theta", type=_theta_arg, default=0.5,
                       help="implicitness parameter in [0, 1]")
        p.add_argument("--seed", type=int, default=42,
                       help="master seed (default 42)")
        p.add_argument("--out", default=None,
                       help=f"output directory (default ${ENV_OUTDIR} "
                            "or current directory)")
        p.add_argument("--lam", type=float, default=None,
                       help="drift coefficient of the linear problem")
        p.add_argument("--mu-diff", dest="mu_diff", type=float,
                       default=None,
                       help="diffusion coefficient of the linear problem")

    p = sub.add_parser("simulate", help="integrate one path or pair")
    add_common(p)
    p.add_argument("--dt", type=_positive_float, required=True)
    p.add_argument("--horizon", type=_positive_float, default=None)
    p.add_argument("--path-index", type=int, default=0)
    p.add_argument("--pair", action="store_true",
                   help="integrate the coupled pair (x0, y0)")
    p.add_argument("--x0", type=_float_list, default=None)
    p.add_argument("--y0", type=_float_list, default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("region", help="admissible stepsize region")
    add_common(p)
    p.add_argument("--constants", default="paper",
                   help="'paper', 'estimated', or a JSON file with "
                        "L, mu, M, M_tilde")
    p.add_argument("--mtilde", type=_rational_arg, default=None,
                   help="override M_tilde (accepts fractions like 2/3)")
    p.add_argument("--mu-rule", dest="mu_rule", choices=MU_RULES,
                   default="max")
    p.add_argument("--paths", type=int, default=2000)
    p.add_argument("--pairs", type=int, default=10000)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("estimate", help="estimate problem constants")
    add_common(p)
    p.add_argument("--dt", type=_positive_float, default=0.25)
    p.add_argument("--horizon", type=_positive_float, default=None)
    p.add_argument("--paths", type=int, default=2000,
                   help="ensemble size P")
    p.add_argument("--pairs", type=int, default=10000,
                   help="quotient sample size Q")
    p.add_argument("--mu-rule", dest="mu_rule", choices=MU_RULES,
                   default="max")
    p.add_argument("--with-mtilde", action="store_true",
                   help="also estimate M_tilde for a Maruyama run")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("experiment",
                       help="deviation ensembles over a stepsize sweep")
    p.add_argument("--preset", default=None,
                   help="named preset: " + ", ".join(sorted(PRESETS)))
    p.add_argument("--config", default=None,
                   help="JSON config file; flags override its values")
    p.add_argument("--problem", default=None)
    p.add_argument("--scheme", default=None)
    p.add_argument("--theta", type=_theta_arg, default=None)
    p.add_argument("--dt-list", dest="dts", type=_float_list, default=None,
                   help="comma-separated stepsizes (default sweep "
                        "2,1,0.5,0.25,0.125 clipped to twice the region)")
    p.add_argument("--paths", type=int, default=None)
    p.add_argument("--pairs", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--horizon", type=_positive_float, default=None)
    p.add_argument("--constants", default=None)
    p.add_argument("--mtilde", type=_rational_arg, default=None)
    p.add_argument("--mu-rule", dest="mu_rule", choices=MU_RULES,
                   default=None)
    p.add_argument("--x0", type=_float_list, default=None)
    p.add_argument("--y0", type=_float_list, default=None)
    p.add_argument("--formats", type=lambda s: s.split(","), default=None)
    p.add_argument("--figure", action=argparse.BooleanOptionalAction,
                   default=None)
    p.add_argument("--lam", type=float, default=None)
    p.add_argument("--mu-diff", dest="mu_diff", type=float, default=None)
    p.add_argument("--workers", type=int, default=1,
                   help="thread count; never changes results")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("linear-stability",
                       help="raster of the linear stability region")
    p.add_argument("--scheme", default="maruyama")
    p.add_argument("--theta", type=_theta_arg, default=0.5)
    p.add_argument("--u-range", dest="u_range", type=_range_arg,
                   default=(-6.0, 2.0, 161),
                   help="dt*lam as min:max:count")
    p.add_argument("--v-range", dest="v_range", type=_range_arg,
                   default=(0.0, 4.0, 81),
                   help="dt*mu^2 as min:max:count")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_linear_stability)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (UnknownProblemError, UnsupportedProblemError, SolverError,
            EstimationError, FitError, DomainError, ValueError,
            np.linalg.LinAlgError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
