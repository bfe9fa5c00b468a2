# -*- coding: utf-8 -*-
# This software is under the MIT License

import numpy as np
import pytest

from pylib.diagnostics import (
    SecondOrderCase,
    classify,
    compute_iota,
    compute_nu,
    compute_z,
)
from pylib.jacobian import JacobianMode, build_blocks, reduced_matrix
from pylib.smoothing import Iterate
from pylib.svc_model import eval_g


def dense_z(fp, it):
    blocks = build_blocks(fp, it, 1.0, JacobianMode.EXPLICIT)
    P_inv = np.linalg.inv(blocks.P_matrix())
    g = blocks.g_w
    return float(g @ P_inv @ (blocks.alpha_matrix() @ P_inv @ g - 2.0 * blocks.dg_mu))


def dense_iota(fp, mu):
    X = np.zeros((fp.dim, fp.T * fp.m2))
    A = np.zeros((fp.T * fp.m1, fp.dim))
    for j in range(fp.T):
        X[j * fp.n : (j + 1) * fp.n, j * fp.m2 : (j + 1) * fp.m2] = fp.X[j]
        A[j * fp.m1 : (j + 1) * fp.m1, j * fp.n : (j + 1) * fp.n] = fp.A[j]
    x_yhat = X @ fp.yhat_flat
    return 0.25 * mu @ X @ X.T @ x_yhat + (A @ x_yhat) @ (A @ x_yhat) / (16 * fp.T * fp.m1)


@pytest.mark.parametrize('mode', list(JacobianMode))
def test_z_matches_dense_inverse(small_problem, rng, iterate_factory, mode):
    for _ in range(10):
        it = iterate_factory(small_problem, rng, eps=0.2, C=float(rng.uniform(0.1, 3.0)))
        expected = dense_z(small_problem, it)
        got = compute_z(small_problem, it, mode)
        assert got == pytest.approx(expected, rel=1e-10, abs=1e-10)


def test_z_is_non_negative_without_multipliers(small_problem, rng):
    w = rng.standard_normal(small_problem.dim)
    it = Iterate(eps=0.0, C=1.0, mu=np.zeros(small_problem.dim), w=w)
    assert compute_z(small_problem, it) >= 0.0


def test_iota_matches_dense_evaluation(small_problem, rng):
    for _ in range(10):
        mu = rng.standard_normal(small_problem.dim)
        got = compute_iota(small_problem, mu)
        assert got == pytest.approx(dense_iota(small_problem, mu), rel=1e-12, abs=1e-12)
    assert compute_iota(small_problem, np.zeros(small_problem.dim)) >= 0.0


def test_nu_is_the_schur_pivot(small_problem, rng, iterate_factory):
    # det(reduced) = nu * det(P)^2
    fp = small_problem
    for _ in range(10):
        it = iterate_factory(fp, rng, eps=0.4, C=float(rng.uniform(0.1, 2.0)))
        blocks = build_blocks(fp, it, 1.0, JacobianMode.EXPLICIT)
        sign_m, log_m = np.linalg.slogdet(reduced_matrix(blocks))
        _, log_p = np.linalg.slogdet(blocks.P_matrix())
        expected = sign_m * np.exp(log_m - 2.0 * log_p)
        assert compute_nu(fp, it, 1.0) == pytest.approx(expected, rel=1e-8, abs=1e-10)


def test_nu_is_positive_when_z_exceeds_minus_kappa_eps(small_problem, rng, iterate_factory):
    for _ in range(200):
        eps = float(rng.uniform(0.05, 1.0))
        it = iterate_factory(small_problem, rng, eps=eps, C=float(rng.uniform(0.0, 3.0)))
        z = compute_z(small_problem, it)
        if z > -eps:
            assert compute_nu(small_problem, it, 1.0, z=z) > 0.0


def test_classify_positive_C(small_problem, rng):
    w = rng.standard_normal(small_problem.dim)
    it = Iterate(eps=0.0, C=1.0, mu=np.zeros(small_problem.dim), w=w)
    report = classify(small_problem, it)
    assert report.case is SecondOrderCase.C_POSITIVE
    assert report.z_star > 0.0
    assert report.strict_local_min
    assert report.verdict == 'strict local minimizer (case i)'


def test_classify_zero_C_positive_lambda(small_problem, rng):
    w = rng.standard_normal(small_problem.dim)
    g = eval_g(small_problem, w)
    it = Iterate(eps=0.0, C=0.0, mu=-g, w=w)
    report = classify(small_problem, it)
    assert report.lambda_star > 0.0
    assert report.case is SecondOrderCase.C_ZERO_LAMBDA_POSITIVE
    assert report.strict_local_min


def test_classify_zero_C_zero_lambda(small_problem):
    dim = small_problem.dim
    it = Iterate(eps=0.0, C=0.0, mu=np.zeros(dim), w=np.zeros(dim))
    report = classify(small_problem, it)
    assert report.case is SecondOrderCase.C_ZERO_LAMBDA_ZERO
    assert report.iota_star > 0.0
    assert report.strict_local_min
    assert report.to_dict()['case'] == 'C_zero_lambda_zero'


def test_classify_reports_unverified_when_iota_is_negative(small_problem):
    fp = small_problem
    w = np.zeros(fp.dim)
    g = eval_g(fp, w)
    v = fp.apply_X(fp.apply_XT(fp.apply_X(fp.yhat)))
    v_perp = v - (v @ g) / (g @ g) * g
    second = compute_iota(fp, np.zeros(fp.dim))
    mu = -8.0 * (second + 1.0) / (v_perp @ v_perp) * v_perp
    it = Iterate(eps=0.0, C=0.0, mu=mu, w=w)

    report = classify(fp, it)
    assert report.case is SecondOrderCase.C_ZERO_LAMBDA_ZERO
    assert report.iota_star < 0.0
    assert not report.strict_local_min
    assert report.verdict == 'unverified'


def test_classify_never_certifies_a_negative_C(small_problem, rng):
    w = rng.standard_normal(small_problem.dim)
    g = eval_g(small_problem, w)
    it = Iterate(eps=0.0, C=-0.119, mu=-g, w=w)
    report = classify(small_problem, it)
    assert report.case is SecondOrderCase.C_NEGATIVE
    assert not report.strict_local_min
    assert report.verdict == 'unverified'


def test_classify_never_certifies_an_unconverged_point(small_problem, rng):
    w = rng.standard_normal(small_problem.dim)
    it = Iterate(eps=0.0, C=1.0, mu=np.zeros(small_problem.dim), w=w)
    assert classify(small_problem, it).strict_local_min
    report = classify(small_problem, it, converged=False)
    assert report.case is SecondOrderCase.C_POSITIVE
    assert not report.strict_local_min
    assert report.verdict == 'unverified'
