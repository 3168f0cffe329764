import numpy as np
import pytest

from thetasde.wiener import (NoiseGrid, increments, increments_matrix,
                             milstein_products)


def test_grid_validation():
    with pytest.raises(ValueError):
        NoiseGrid(dt=0.0, steps=10, m=1, master_seed=1)
    with pytest.raises(ValueError):
        NoiseGrid(dt=0.1, steps=0, m=1, master_seed=1)
    with pytest.raises(ValueError):
        NoiseGrid(dt=0.1, steps=10, m=0, master_seed=1)


def test_increment_moments():
    # 10 steps x 2 components x 50000 paths gives a million samples
    dw = increments_matrix(0.25, 10, 2, master_seed=123,
                           path_indices=range(50000))
    assert dw.shape == (50000, 10, 2)
    flat = dw.reshape(-1)
    n = flat.size
    assert abs(flat.mean()) < 4.0 * np.sqrt(0.25 / n)
    assert flat.var() == pytest.approx(0.25, rel=0.01)
    # scaling: quadrupling dt doubles the spread
    dw2 = increments_matrix(1.0, 10, 2, master_seed=123,
                            path_indices=range(2000))
    assert dw2.reshape(-1).var() == pytest.approx(1.0, rel=0.05)


def test_same_seed_reproduces():
    g = NoiseGrid(dt=0.1, steps=32, m=3, master_seed=7, path_index=5)
    a = increments(g)
    b = increments(g)
    np.testing.assert_array_equal(a, b)


def test_paths_are_distinct_substreams():
    g0 = NoiseGrid(dt=0.1, steps=64, m=1, master_seed=7, path_index=0)
    g1 = NoiseGrid(dt=0.1, steps=64, m=1, master_seed=7, path_index=1)
    a, b = increments(g0), increments(g1)
    assert not np.array_equal(a, b)
    # substreams look independent: tiny empirical correlation
    r = np.corrcoef(a.ravel(), b.ravel())[0, 1]
    assert abs(r) < 0.3


def test_matrix_rows_match_single_grids():
    rows = increments_matrix(0.2, 16, 2, master_seed=99,
                             path_indices=[0, 3, 11])
    for row, idx in zip(rows, [0, 3, 11]):
        g = NoiseGrid(dt=0.2, steps=16, m=2, master_seed=99,
                      path_index=idx)
        np.testing.assert_array_equal(row, increments(g))


def test_different_master_seeds_differ():
    a = increments(NoiseGrid(dt=0.1, steps=16, m=1, master_seed=1))
    b = increments(NoiseGrid(dt=0.1, steps=16, m=1, master_seed=2))
    assert not np.array_equal(a, b)


def test_milstein_products_hand_value():
    prods = milstein_products(np.array([1.0, 2.0]), 0.25)
    np.testing.assert_allclose(prods, [[0.75, 2.0], [2.0, 3.75]])


def test_milstein_products_structure():
    rng = np.random.default_rng(5)
    dw = rng.normal(size=(7, 3)) * 0.3
    prods = milstein_products(dw, 0.09)
    assert prods.shape == (7, 3, 3)
    np.testing.assert_allclose(prods, np.swapaxes(prods, -1, -2))
    for p in range(7):
        expected = np.outer(dw[p], dw[p]) - 0.09 * np.eye(3)
        np.testing.assert_allclose(prods[p], expected)


def test_product_diagonal_mean_vanishes():
    # E(dW^2 - dt) = 0
    dw = increments_matrix(0.5, 1, 1, master_seed=17,
                           path_indices=range(200000))
    prods = milstein_products(dw[:, 0, :], 0.5)
    assert abs(prods[:, 0, 0].mean()) < 0.01
