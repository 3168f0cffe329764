"""Coupled-path Monte Carlo verification of mean-square contractivity.

An ensemble advances P coupled pairs (X, Y) through shared Wiener paths
and tracks the mean-square deviation

    D_n = (1/P) sum_p |X_n^p - Y_n^p|^2 .

The fitted log-linear slope of D_n is compared against the closed-form
decay rate.  Results are independent of the worker count: every path has
its own seed substream and the reduction over paths runs in fixed path
order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import contractivity
from .contractivity import DomainError
from .integrators import MethodConfig, integrate_pairs_batch

FLOOR_RATIO = 1e-24
TAIL_SHARE_CAP = 0.1


class FitError(RuntimeError):
    """Too few usable points to fit a slope."""


@dataclass
class EnsembleResult:
    """Mean-square deviation statistics of one coupled ensemble."""

    times: np.ndarray
    msd: np.ndarray
    msd_stderr: np.ndarray
    paths: int
    config: MethodConfig
    x0: np.ndarray
    y0: np.ndarray
    master_seed: int
    tail_share: np.ndarray = None
    theoretical_exponent: float = math.nan
    amplification: float = math.nan
    fitted_slope: float = math.nan
    fit_window: tuple = (0, 0)
    slope_note: str = ""


def fit_window_indices(msd, tail_share=None, floor_ratio=FLOOR_RATIO,
                       share_cap=TAIL_SHARE_CAP):
    """Usable index range [start, stop) for the log-linear fit.

    Skips the initial 5% of steps and truncates at the first point that
    is nonpositive or below ``floor_ratio`` times the initial deviation.
    When ``tail_share`` is given (per-step fraction of the ensemble sum
    carried by the single largest path) the window also stops once that
    share exceeds ``share_cap``: an average dominated by one path out of
    thousands no longer estimates the mean, and points past that horizon
    only bias the slope toward the typical-path rate.  The sample
    standard error is no diagnostic here since the unobserved tails
    that bias the mean bias it the same way.
    """
    msd = np.asarray(msd)
    steps = len(msd) - 1
    start = max(1, math.ceil(0.05 * steps))
    floor = floor_ratio * msd[0]
    stop = start
    for i in range(start, len(msd)):
        if msd[i] <= 0.0 or msd[i] < floor:
            break
        if tail_share is not None and tail_share[i] > share_cap:
            break
        stop = i + 1
    return start, stop


def fit_slope(result) -> float:
    """Least-squares slope of ln D_n against t_n over the usable window.

    Raises FitError when fewer than 3 points are usable.
    """
    start, stop = fit_window_indices(result.msd, result.tail_share)
    if stop - start < 3:
        raise FitError(
            f"only {stop - start} usable points in the fit window; "
            "need at least 3")
    t = result.times[start:stop]
    logd = np.log(result.msd[start:stop])
    return float(np.polyfit(t, logd, 1)[0])


def _squared_deviations(problem, config, x0, y0, steps, master_seed,
                        path_indices):
    X, Y = integrate_pairs_batch(problem, config, x0, y0, steps,
                                 master_seed, path_indices)
    return ((X - Y) ** 2).sum(axis=2)


def run_ensemble(problem, config, x0=None, y0=None, paths=2000,
                 master_seed=42, workers=1, constants=None,
                 horizon=None) -> EnsembleResult:
    """Monte Carlo mean-square deviation study of one configuration.

    Args:
      problem: SdeProblem (defaults for x0, y0, horizon, constants come
        from it when not given).
      config: MethodConfig fixing scheme, theta and dt.
      paths: ensemble size P, at least 2.
      workers: thread count; affects wall time only, never results.

    Returns:
      EnsembleResult with per-step D_n, standard errors, the fitted
      slope and the closed-form rate for comparison.
    """
    if paths < 2:
        raise ValueError("need at least 2 paths")
    if workers < 1:
        raise ValueError("workers must be positive")
    x0 = problem.x0 if x0 is None else np.asarray(x0, dtype=float)
    y0 = problem.y0 if y0 is None else np.asarray(y0, dtype=float)
    if x0 is None or y0 is None:
        raise ValueError("problem has no default initial data; pass x0, y0")
    horizon = problem.horizon if horizon is None else float(horizon)
    steps = int(round(horizon / config.dt))
    if steps < 1:
        raise ValueError("horizon shorter than one step")

    chunks = [c for c in np.array_split(np.arange(paths), workers)
              if len(c)]
    compute = lambda chunk: _squared_deviations(
        problem, config, x0, y0, steps, master_seed, chunk)
    if len(chunks) == 1:
        blocks = [compute(chunks[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            blocks = list(pool.map(compute, chunks))
    sqdev = np.concatenate(blocks, axis=0)

    msd = sqdev.mean(axis=0)
    # all paths start from the same pair; the initial deviation is exact
    msd[0] = float(((x0 - y0) ** 2).sum())
    stderr = sqdev.std(axis=0, ddof=1) / math.sqrt(paths)
    times = np.arange(steps + 1) * config.dt
    col_sum = sqdev.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        tail_share = np.where(col_sum > 0.0,
                              sqdev.max(axis=0) / col_sum, 0.0)

    result = EnsembleResult(
        times=times, msd=msd, msd_stderr=stderr, paths=paths,
        config=config, x0=x0, y0=y0, master_seed=master_seed,
        tail_share=tail_share)

    constants = problem.constants if constants is None else constants
    if constants is not None:
        try:
            result.amplification = contractivity.amplification(
                config.scheme, constants, config.theta, config.dt)
            result.theoretical_exponent = contractivity.exponent(
                config.scheme, constants, config.theta, config.dt)
        except DomainError as exc:
            result.slope_note = str(exc)
    result.fit_window = fit_window_indices(msd, tail_share)
    try:
        result.fitted_slope = fit_slope(result)
    except FitError as exc:
        result.fitted_slope = math.nan
        note = f"no slope: {exc}"
        result.slope_note = (result.slope_note + "; " + note
                             if result.slope_note else note)
    return result


def decay_bound_violations(result, sigmas=3.0):
    """Grid indices where D_n exceeds D_0 exp(rate t_n) by > sigmas SE.

    Empty when the closed-form rate is undefined.
    """
    rate = result.theoretical_exponent
    if not math.isfinite(rate):
        return []
    bound = result.msd[0] * np.exp(rate * result.times)
    margin = sigmas * result.msd_stderr
    return list(np.flatnonzero(result.msd > bound + margin))


def monotone_after_burnin(result, sigmas=3.0) -> bool:
    """True when D_n decreases past the initial 5% of steps, up to noise."""
    steps = len(result.msd) - 1
    start = max(1, math.ceil(0.05 * steps))
    d = result.msd
    se = result.msd_stderr
    for i in range(start, steps):
        if d[i + 1] > d[i] + sigmas * (se[i] + se[i + 1]):
            return False
    return True


@dataclass
class ExperimentRow:
    dt: float
    in_region: bool
    amplification: float = math.nan
    exponent: float = math.nan
    result: EnsembleResult | None = None
    error: str | None = None


@dataclass
class ExperimentTable:
    problem: str
    scheme: str
    theta: float
    constants: object
    region: object
    rows: list = field(default_factory=list)


def contractivity_experiment(problem, scheme, theta, dt_list, paths=2000,
                             master_seed=42, constants=None, workers=1,
                             horizon=None,
                             newton_tol=1e-12,
                             newton_max_iter=50) -> ExperimentTable:
    """Deviation ensembles across a stepsize sweep.

    Rows that fail (solver breakdown, undefined rate) record the error
    and leave the remaining stepsizes untouched.
    """
    constants = problem.constants if constants is None else constants
    if constants is None:
        raise ValueError("no constants available; estimate or supply them")
    reg = contractivity.region(scheme, constants, theta)
    table = ExperimentTable(problem=problem.label, scheme=str(
        contractivity.Scheme.parse(scheme).value), theta=float(theta),
        constants=constants, region=reg)
    for dt in dt_list:
        row = ExperimentRow(dt=float(dt), in_region=reg.contains(dt))
        try:
            config = MethodConfig(scheme=scheme, theta=theta, dt=float(dt),
                                  newton_tol=newton_tol,
                                  newton_max_iter=newton_max_iter)
            row.result = run_ensemble(problem, config, paths=paths,
                                      master_seed=master_seed,
                                      workers=workers, constants=constants,
                                      horizon=horizon)
            row.amplification = row.result.amplification
            row.exponent = row.result.theoretical_exponent
        except Exception as exc:  # noqa: BLE001 - rows record their failure
            row.error = f"{type(exc).__name__}: {exc}"
        table.rows.append(row)
    return table
