# -*- coding: utf-8 -*-
# This software is under the MIT License

import numpy as np
import pytest
import scipy.linalg
from scipy.sparse.linalg import aslinearoperator

from pylib.bicg import KrylovConfig, bicg_solve


def test_matches_dense_elimination_on_random_systems():
    rng = np.random.default_rng(7)
    cfg = KrylovConfig(rel_tol=1e-12)
    for _ in range(50):
        M = 6.0 * np.eye(20) + rng.standard_normal((20, 20))
        b = rng.standard_normal(20)
        res = bicg_solve(M, b, cfg)
        expected = scipy.linalg.solve(M, b)
        assert res.converged
        assert not res.dense_fallback
        assert np.linalg.norm(res.x - expected) <= 1e-8 * max(1.0, np.linalg.norm(expected))
        assert res.residual_norm == pytest.approx(np.linalg.norm(b - M @ res.x), rel=1e-12)


def test_accepts_linear_operators():
    rng = np.random.default_rng(1)
    M = 4.0 * np.eye(8) + rng.standard_normal((8, 8))
    b = rng.standard_normal(8)
    res = bicg_solve(aslinearoperator(M), b, KrylovConfig(rel_tol=1e-12))
    np.testing.assert_allclose(res.x, np.linalg.solve(M, b), atol=1e-9)


def test_zero_rhs_takes_no_iterations():
    res = bicg_solve(np.eye(3), np.zeros(3))
    assert res.converged
    assert res.iters == 0
    np.testing.assert_array_equal(res.x, np.zeros(3))


def test_breakdown_restarts_or_falls_back():
    # b^T M b == 0 for skew-symmetric M, so the first sweep breaks down
    M = np.array([[0.0, 1.0], [-1.0, 0.0]])
    b = np.array([1.0, 2.0])
    res = bicg_solve(M, b, KrylovConfig(rel_tol=1e-12), dense=M)
    assert res.converged
    np.testing.assert_allclose(res.x, np.linalg.solve(M, b), atol=1e-10)


def test_iteration_cap_reports_best_iterate():
    rng = np.random.default_rng(3)
    M = np.eye(30) + 3.0 * rng.standard_normal((30, 30))
    b = rng.standard_normal(30)
    res = bicg_solve(M, b, KrylovConfig(max_iters=2, rel_tol=1e-14))
    assert not res.converged
    assert res.iters <= 2
    assert res.residual_norm == pytest.approx(np.linalg.norm(b - M @ res.x), rel=1e-10)


def test_shape_mismatch():
    with pytest.raises(ValueError):
        bicg_solve(np.eye(3), np.ones(4))


@pytest.mark.parametrize(
    'kwargs', [{'max_iters': -1}, {'rel_tol': 0.0}, {'abs_tol': -1.0}, {'breakdown_tol': 0.0}]
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        KrylovConfig(**kwargs)
