"""Reproducible Wiener increments on uniform time grids.

Each path owns an independent substream derived from
``SeedSequence([master_seed, path_index])``, so regenerating any single
path is bit-identical no matter how many paths are drawn or in which
order.  Sampling uses the generator's exact Gaussian method.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class NoiseGrid:
    """A uniform grid of Wiener increments for one path.

    dt: step size, positive.
    steps: number of increments.
    m: number of independent driving components.
    master_seed: nonnegative ensemble seed.
    path_index: nonnegative index of this path within the ensemble.
    """

    dt: float
    steps: int
    m: int
    master_seed: int
    path_index: int = 0

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.steps < 1:
            raise ValueError("steps must be at least 1")
        if self.m < 1:
            raise ValueError("m must be at least 1")
        if self.master_seed < 0 or self.path_index < 0:
            raise ValueError("master_seed and path_index must be nonnegative")


def _path_generator(master_seed, path_index):
    return np.random.default_rng(
        np.random.SeedSequence([int(master_seed), int(path_index)]))


def increments(grid: NoiseGrid) -> np.ndarray:
    """Gaussian increments of shape (steps, m) with variance dt."""
    rng = _path_generator(grid.master_seed, grid.path_index)
    return rng.standard_normal((grid.steps, grid.m)) * np.sqrt(grid.dt)


def increments_matrix(dt, steps, m, master_seed, path_indices) -> np.ndarray:
    """Increments for several paths, shape (len(path_indices), steps, m).

    Row p is bit-identical to ``increments(NoiseGrid(dt, steps, m,
    master_seed, path_indices[p]))``.
    """
    path_indices = list(path_indices)
    out = np.empty((len(path_indices), steps, m))
    root = np.sqrt(dt)
    for row, index in enumerate(path_indices):
        rng = _path_generator(master_seed, index)
        out[row] = rng.standard_normal((steps, m)) * root
    return out


def milstein_products(dw, dt) -> np.ndarray:
    """Quadratic increment products used by the Milstein correction.

    For ``dw`` of shape (..., m) returns (..., m, m) with diagonal
    ``dW_j^2 - dt`` and off-diagonal ``dW_{j1} dW_{j2}``.
    """
    dw = np.asarray(dw, dtype=float)
    out = dw[..., :, None] * dw[..., None, :]
    idx = np.arange(dw.shape[-1])
    out[..., idx, idx] -= dt
    return out
