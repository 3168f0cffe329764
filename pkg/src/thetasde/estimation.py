"""Sampling-based estimation of problem constants.

The pipeline mirrors how the constants enter the contractivity bounds:

  1. integrate an ensemble of paths of the chosen theta method,
  2. enclose the visited states in a componentwise box,
  3. draw Q independent uniform pairs from the box and take the extremal
     difference quotients for L (diffusion) and mu (drift),
  4. bound M and M_tilde by ensemble averages along the trajectories.

All draws come from seeded substreams, so fixed (seed, P, Q) reproduces
every estimate bit-exactly, and doubling Q extends the previous pair
sample instead of reshuffling it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .integrators import MethodConfig, Scheme, integrate_pairs_batch
from .problems import (ProblemConstants, batched_diffusion,
                       batched_diffusion_column_derivative,
                       batched_drift, batched_drift_jacobian)

# keeps the pair stream disjoint from the per-path streams, whose second
# seed word is a path index
_PAIR_STREAM_TAG = 2 ** 64 + 1

MU_RULES = ("max", "min")


class EstimationError(RuntimeError):
    """Estimation cannot proceed (degenerate box, vanished deviation)."""


@dataclass
class EstimationConfig:
    """Sampling parameters for the constant estimators."""

    P: int = 2000
    Q: int = 10000
    seed: int = 42
    degeneracy_eps: float = 1e-12
    mu_rule: str = "max"

    def __post_init__(self):
        if self.P < 1 or self.Q < 1:
            raise ValueError("P and Q must be positive")
        if self.mu_rule not in MU_RULES:
            raise ValueError(f"mu_rule must be one of {MU_RULES}")


@dataclass(frozen=True)
class SampleBox:
    """Componentwise box [lower_i, upper_i] enclosing sampled states."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ValueError("box bounds must be 1-d arrays of equal length")
        if np.any(lower > upper):
            raise ValueError("box lower bound exceeds upper bound")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def degenerate(self) -> bool:
        return bool(np.all(self.lower == self.upper))


def _states_array(trajectories):
    if isinstance(trajectories, np.ndarray):
        arr = trajectories
    else:
        items = list(trajectories)
        if not items:
            raise ValueError("no trajectories given")
        arrs = [item.states if hasattr(item, "states") else np.asarray(item)
                for item in items]
        arr = np.stack(arrs)
    if arr.ndim == 2:
        arr = arr[None, ...]
    if arr.ndim != 3:
        raise ValueError("expected trajectories of shape (P, steps+1, n)")
    return np.asarray(arr, dtype=float)


def sample_box(trajectories) -> SampleBox:
    """Componentwise extent of an ensemble of trajectories.

    Accepts an array of shape (P, steps+1, n), a single (steps+1, n)
    array, or an iterable of Trajectory objects.
    """
    arr = _states_array(trajectories)
    return SampleBox(lower=arr.min(axis=(0, 1)), upper=arr.max(axis=(0, 1)))


def _pair_rng(seed):
    return np.random.default_rng(
        np.random.SeedSequence([int(seed), _PAIR_STREAM_TAG]))


def _sample_pairs(box, n, config):
    """Q uniform pairs in the box with |x - y| >= degeneracy_eps.

    Pairs are drawn as (Q, 2, n) blocks so that enlarging Q extends the
    sample; degenerate pairs are resampled, keeping exactly Q quotients.
    """
    if box.degenerate:
        raise EstimationError("sample box is degenerate in every component")
    rng = _pair_rng(config.seed)
    span = box.upper - box.lower
    u = rng.uniform(size=(config.Q, 2, n))
    pts = box.lower + u * span
    dist = np.linalg.norm(pts[:, 0, :] - pts[:, 1, :], axis=1)
    bad = dist < config.degeneracy_eps
    guard = 0
    while bad.any():
        guard += 1
        if guard > 100:
            raise EstimationError("could not draw non-degenerate pairs")
        repl = box.lower + rng.uniform(size=(int(bad.sum()), 2, n)) * span
        pts[bad] = repl
        dist = np.linalg.norm(pts[:, 0, :] - pts[:, 1, :], axis=1)
        bad = dist < config.degeneracy_eps
    return pts[:, 0, :], pts[:, 1, :]


def estimate_L(problem, box, config=None) -> float:
    """Extremal diffusion difference quotient over uniform box pairs.

    max_k |g(x_k) - g(y_k)|_F^2 / |x_k - y_k|^2, an estimate (from below)
    of the diffusion growth constant on the box.
    """
    config = config or EstimationConfig()
    x, y = _sample_pairs(box, problem.n, config)
    gx = np.asarray(batched_diffusion(problem, x))
    gy = np.asarray(batched_diffusion(problem, y))
    num = ((gx - gy) ** 2).sum(axis=(-2, -1))
    den = ((x - y) ** 2).sum(axis=-1)
    return float(np.max(num / den))


def estimate_mu(problem, box, config=None) -> float:
    """Extremal one-sided drift quotient over uniform box pairs.

    Quotients are <x - y, f(x) - f(y)> / |x - y|^2.  The reduction rule
    is configurable: "max" yields an upper bound of the one-sided
    Lipschitz constant on the box (the quantity the decay rate needs),
    "min" the most contractive quotient seen.
    """
    config = config or EstimationConfig()
    x, y = _sample_pairs(box, problem.n, config)
    fx = np.asarray(batched_drift(problem, x))
    fy = np.asarray(batched_drift(problem, y))
    num = ((x - y) * (fx - fy)).sum(axis=-1)
    den = ((x - y) ** 2).sum(axis=-1)
    quotients = num / den
    if config.mu_rule == "max":
        return float(np.max(quotients))
    return float(np.min(quotients))


def estimate_M(problem, trajectories) -> float:
    """sup over grid times of the ensemble mean of |f'(X)|_F^2."""
    states = _states_array(trajectories)
    paths, times, n = states.shape
    jac = np.asarray(batched_drift_jacobian(
        problem, states.reshape(-1, n))).reshape(paths, times, n, n)
    mean_sq = (jac ** 2).sum(axis=(-2, -1)).mean(axis=0)
    return float(mean_sq.max())


def _interaction_vectors(problem, states):
    # T[p, k, i, j, :] = g^{k,i}(x_p) * d g^{j} / d x^k (x_p)
    flat = states.reshape(-1, problem.n)
    g = np.asarray(batched_diffusion(problem, flat))
    dcols = np.stack([
        np.asarray(batched_diffusion_column_derivative(problem, flat, j))
        for j in range(problem.m)])
    return np.einsum('pki,jpak->pkija', g, dcols)


def estimate_M_tilde(problem, x_states, y_states) -> float:
    """Second-order noise interaction constant from coupled ensembles.

    For every component pair the ratio of the ensemble mean of the
    interaction difference products to the mean squared deviation is
    tracked over time; the estimate sums the per-component suprema.
    Grid times where the deviation has vanished are skipped.
    """
    X = _states_array(x_states)
    Y = _states_array(y_states)
    if X.shape != Y.shape:
        raise ValueError("coupled ensembles must have identical shape")
    paths, times, n = X.shape
    m = problem.m
    ratios = np.full((times, m, m, n, n), np.nan)
    usable = 0
    for t in range(times):
        dev = ((X[:, t, :] - Y[:, t, :]) ** 2).sum(axis=1).mean()
        if dev < 1e-300:
            continue
        usable += 1
        tx = _interaction_vectors(problem, X[:, t, :])
        ty = _interaction_vectors(problem, Y[:, t, :])
        diff = tx - ty
        h = np.einsum('pkija,plija->pijkl', diff, diff).mean(axis=0)
        ratios[t] = h / dev
    if usable == 0:
        raise EstimationError(
            "mean-square deviation vanished at every grid time")
    sup = np.nanmax(ratios, axis=0)
    return float(sup.sum())


def estimate_constants(problem, method_config=None, config=None, x0=None,
                       y0=None, horizon=None,
                       include_m_tilde=None):
    """Full estimation pipeline; returns (ProblemConstants, SampleBox).

    Integrates P coupled pairs of the chosen method, boxes the X states,
    then runs the quotient estimators.  M_tilde is estimated from the
    coupled pairs when requested (default: when the method is Milstein).
    """
    config = config or EstimationConfig()
    method_config = method_config or MethodConfig(
        scheme=Scheme.MARUYAMA, theta=0.5, dt=0.25)
    x0 = problem.x0 if x0 is None else np.asarray(x0, dtype=float)
    y0 = problem.y0 if y0 is None else np.asarray(y0, dtype=float)
    if x0 is None or y0 is None:
        raise ValueError("problem has no default initial data; pass x0, y0")
    horizon = problem.horizon if horizon is None else float(horizon)
    steps = max(1, int(round(horizon / method_config.dt)))
    if include_m_tilde is None:
        include_m_tilde = method_config.scheme is Scheme.MILSTEIN
    X, Y = integrate_pairs_batch(problem, method_config, x0, y0, steps,
                                 config.seed, range(config.P))
    box = sample_box(X)
    L = estimate_L(problem, box, config)
    mu = estimate_mu(problem, box, config)
    M = estimate_M(problem, X)
    m_tilde = estimate_M_tilde(problem, X, Y) if include_m_tilde else None
    return ProblemConstants.estimated(L=L, mu=mu, M=M, M_tilde=m_tilde), box
