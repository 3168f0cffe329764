"""Stochastic theta-method integrators for Ito SDEs.

Two one-step schemes on a uniform grid with stepsize dt and implicitness
parameter theta in [0, 1]:

  theta-Maruyama
      X_{n+1} = X_n + (1 - theta) dt f(X_n) + theta dt f(X_{n+1})
                + g(X_n) dW_n

  theta-Milstein (commutative noise)
      adds  (1/2) sum_j c_{jj}(X_n) (dW_n^j^2 - dt)
          + (1/2) sum_{j1 != j2} c_{j1 j2}(X_n) dW_n^{j1} dW_n^{j2}

with c the noise interaction tensor of
:func:`thetasde.problems.levy_free_correction`.  The drift-implicit part
is solved by damped Newton iteration.

All step functions accept a single state of shape (n,) or a batch of
shape (P, n); batched rows are advanced independently, so results do not
depend on how states are grouped into batches.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .problems import (batched_drift, batched_drift_jacobian,
                       batched_diffusion, levy_free_correction)
from .wiener import NoiseGrid, increments, increments_matrix, milstein_products


class Scheme(str, Enum):
    MARUYAMA = "maruyama"
    MILSTEIN = "milstein"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(
                f"unknown scheme {value!r}; choose from "
                + ", ".join(s.value for s in cls)) from None


class SolverError(RuntimeError):
    """Newton iteration failed to reach the residual tolerance."""

    def __init__(self, message, residual=None, rows=None):
        super().__init__(message)
        self.residual = residual
        self.rows = rows


@dataclass(frozen=True)
class MethodConfig:
    """Scheme selection and stepping parameters."""

    scheme: Scheme
    theta: float
    dt: float
    newton_tol: float = 1e-12
    newton_max_iter: int = 50

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme.parse(self.scheme))
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [0, 1]")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.newton_tol <= 0.0 or self.newton_max_iter < 1:
            raise ValueError("invalid Newton settings")


@dataclass(frozen=True)
class Trajectory:
    """States of one path on the uniform grid, shape (steps + 1, n)."""

    times: np.ndarray
    states: np.ndarray
    config: MethodConfig
    path_index: int = 0


def implicit_solve(problem, h, b, tol=1e-12, max_iter=50, start=None):
    """Solve ``a - h f(a) = b`` for ``a`` by damped Newton iteration.

    Args:
      problem: SdeProblem supplying drift and drift Jacobian.
      h: positive scalar, or per-row array when ``b`` is batched.
      b: right-hand side, shape (n,) or (P, n).
      tol: Euclidean residual tolerance per row.
      max_iter: Newton iteration cap per row.
      start: initial iterate, same shape as ``b``; defaults to ``b``.
        Integrators pass the previous state so that a non-monotone
        drift resolves to the root continuing that state rather than
        a spurious distant one.

    Returns:
      Solution with the same shape as ``b``.  On residual non-decrease
      the Newton update is halved until the residual drops.

    Raises:
      SolverError: some row failed to converge within ``max_iter``.
      numpy.linalg.LinAlgError: singular Newton matrix.
    """
    b_in = np.asarray(b, dtype=float)
    single = b_in.ndim == 1
    b2 = np.atleast_2d(b_in)
    rows = b2.shape[0]
    if np.ndim(h) == 0:
        h_col = np.full((rows, 1), float(h))
    else:
        h_col = np.asarray(h, dtype=float).reshape(rows, 1)
    if np.any(h_col <= 0.0):
        raise ValueError("h must be positive")

    if start is None:
        a = b2.copy()
    else:
        a = np.atleast_2d(np.asarray(start, dtype=float)).copy()
        if a.shape != b2.shape:
            raise ValueError("start must have the same shape as b")
    res = a - h_col * np.asarray(batched_drift(problem, a)) - b2
    res_norm = np.sqrt((res ** 2).sum(axis=1))
    active = res_norm >= tol
    iterations = 0
    while active.any():
        if iterations >= max_iter:
            bad = np.flatnonzero(active)
            raise SolverError(
                f"Newton iteration did not converge in {max_iter} steps "
                f"(worst residual {res_norm[bad].max():.3e})",
                residual=float(res_norm[bad].max()), rows=bad)
        idx = np.flatnonzero(active)
        a_act = a[idx]
        b_act = b2[idx]
        h_act = h_col[idx]
        rn_act = res_norm[idx]
        if problem.n == 1:
            jd = 1.0 - h_act * np.asarray(
                batched_drift_jacobian(problem, a_act))[..., 0]
            if np.any(jd == 0.0):
                raise np.linalg.LinAlgError("singular Newton matrix")
            delta = res[idx] / jd
        else:
            jac = np.eye(problem.n) - h_act[..., None] * np.asarray(
                batched_drift_jacobian(problem, a_act))
            delta = np.linalg.solve(jac, res[idx][..., None])[..., 0]
        step = np.ones((len(idx), 1))
        while True:
            trial = a_act - step * delta
            t_res = trial - h_act * np.asarray(
                batched_drift(problem, trial)) - b_act
            t_norm = np.sqrt((t_res ** 2).sum(axis=1))
            shrink = (t_norm >= rn_act) & (t_norm >= tol) & (step[:, 0] > 2e-9)
            if not shrink.any():
                break
            step[shrink, 0] *= 0.5
        a[idx] = trial
        res[idx] = t_res
        res_norm[idx] = t_norm
        active = res_norm >= tol
        iterations += 1
    return a[0] if single else a


def step_batch(problem, config, x, dw):
    """Advance a batch of states (P, n) by one step with increments (P, m)."""
    x = np.asarray(x, dtype=float)
    dw = np.asarray(dw, dtype=float)
    fx = np.asarray(batched_drift(problem, x))
    gx = np.asarray(batched_diffusion(problem, x))
    b = x + (1.0 - config.theta) * config.dt * fx \
        + np.einsum('...nm,...m->...n', gx, dw)
    if config.scheme is Scheme.MILSTEIN:
        inter = levy_free_correction(problem, x)
        prods = milstein_products(dw, config.dt)
        b = b + 0.5 * np.einsum('...abn,...ab->...n', inter, prods)
    if config.theta == 0.0:
        return b
    return implicit_solve(problem, config.theta * config.dt, b,
                          tol=config.newton_tol,
                          max_iter=config.newton_max_iter, start=x)


def _step_single(problem, config, x, dw):
    x = np.asarray(x, dtype=float)
    dw = np.asarray(dw, dtype=float)
    return step_batch(problem, config, x[None, :], dw[None, :])[0]


def maruyama_step(problem, config, x, dw):
    """One theta-Maruyama step from state ``x`` with increment ``dw``."""
    if config.scheme is not Scheme.MARUYAMA:
        raise ValueError("config selects a different scheme")
    return _step_single(problem, config, x, dw)


def milstein_step(problem, config, x, dw):
    """One theta-Milstein step; requires commutative noise."""
    if config.scheme is not Scheme.MILSTEIN:
        raise ValueError("config selects a different scheme")
    return _step_single(problem, config, x, dw)


def _resolve_increments(problem, config, grid, dw):
    if dw is not None:
        dw_seq = np.asarray(dw, dtype=float)
        if dw_seq.ndim != 2 or dw_seq.shape[1] != problem.m:
            raise ValueError(f"dw must have shape (steps, {problem.m})")
        return dw_seq, (grid.path_index if grid is not None else 0)
    if grid is None:
        raise ValueError("either a NoiseGrid or explicit dw is required")
    if grid.m != problem.m:
        raise ValueError("grid noise dimension does not match the problem")
    if not np.isclose(grid.dt, config.dt, rtol=1e-12, atol=0.0):
        raise ValueError("grid dt does not match the method dt")
    return increments(grid), grid.path_index


def integrate_path(problem, config, x0, grid=None, dw=None):
    """Integrate a single path.

    Args:
      x0: initial state, shape (n,).
      grid: NoiseGrid to sample increments from, or None when ``dw`` is
        given explicitly (e.g. a degenerate all-zero test grid).
      dw: optional explicit increments of shape (steps, m).

    Returns:
      Trajectory with ``states[0] == x0``.
    """
    dw_seq, path_index = _resolve_increments(problem, config, grid, dw)
    steps = dw_seq.shape[0]
    x0 = np.asarray(x0, dtype=float)
    states = np.empty((steps + 1, problem.n))
    states[0] = x0
    cur = x0[None, :]
    for k in range(steps):
        try:
            cur = step_batch(problem, config, cur, dw_seq[k][None, :])
        except SolverError as exc:
            raise SolverError(
                f"step {k}, path {path_index}: {exc}",
                residual=exc.residual) from exc
        states[k + 1] = cur[0]
    times = np.arange(steps + 1) * config.dt
    return Trajectory(times=times, states=states, config=config,
                      path_index=path_index)


def integrate_pair(problem, config, x0, y0, grid=None, dw=None):
    """Integrate two solutions driven by one shared Wiener path.

    Both trajectories see identical increments, so their difference
    isolates the contractive behaviour of the scheme.
    """
    dw_seq, path_index = _resolve_increments(problem, config, grid, dw)
    steps = dw_seq.shape[0]
    x0 = np.asarray(x0, dtype=float)
    y0 = np.asarray(y0, dtype=float)
    states = np.empty((2, steps + 1, problem.n))
    states[0, 0] = x0
    states[1, 0] = y0
    cur = np.stack([x0, y0])
    for k in range(steps):
        dw_k = np.broadcast_to(dw_seq[k], (2, problem.m))
        try:
            cur = step_batch(problem, config, cur, dw_k)
        except SolverError as exc:
            raise SolverError(
                f"step {k}, path {path_index}: {exc}",
                residual=exc.residual) from exc
        states[:, k + 1] = cur
    times = np.arange(steps + 1) * config.dt
    return (Trajectory(times=times, states=states[0], config=config,
                       path_index=path_index),
            Trajectory(times=times, states=states[1], config=config,
                       path_index=path_index))


def integrate_paths_batch(problem, config, x0, steps, master_seed,
                          path_indices):
    """States of several independent paths, shape (P, steps + 1, n)."""
    path_indices = list(path_indices)
    count = len(path_indices)
    dw_all = increments_matrix(config.dt, steps, problem.m, master_seed,
                               path_indices)
    out = np.empty((count, steps + 1, problem.n))
    cur = np.broadcast_to(np.asarray(x0, dtype=float),
                          (count, problem.n)).copy()
    out[:, 0] = cur
    for k in range(steps):
        try:
            cur = step_batch(problem, config, cur, dw_all[:, k, :])
        except SolverError as exc:
            paths = [path_indices[r] for r in exc.rows] if exc.rows is not None else "?"
            raise SolverError(f"step {k}, paths {paths}: {exc}",
                              residual=exc.residual) from exc
        out[:, k + 1] = cur
    return out


def integrate_pairs_batch(problem, config, x0, y0, steps, master_seed,
                          path_indices):
    """Coupled solution arrays (X, Y), each of shape (P, steps + 1, n).

    Pair p shares the increments of path ``path_indices[p]``.
    """
    path_indices = list(path_indices)
    count = len(path_indices)
    dw_all = increments_matrix(config.dt, steps, problem.m, master_seed,
                               path_indices)
    X = np.empty((count, steps + 1, problem.n))
    Y = np.empty_like(X)
    cx = np.broadcast_to(np.asarray(x0, dtype=float),
                         (count, problem.n)).copy()
    cy = np.broadcast_to(np.asarray(y0, dtype=float),
                         (count, problem.n)).copy()
    X[:, 0] = cx
    Y[:, 0] = cy
    for k in range(steps):
        dw = dw_all[:, k, :]
        try:
            cx = step_batch(problem, config, cx, dw)
            cy = step_batch(problem, config, cy, dw)
        except SolverError as exc:
            paths = [path_indices[r] for r in exc.rows] if exc.rows is not None else "?"
            raise SolverError(f"step {k}, paths {paths}: {exc}",
                              residual=exc.residual) from exc
        X[:, k + 1] = cx
        Y[:, k + 1] = cy
    return X, Y
