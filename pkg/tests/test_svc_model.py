# -*- coding: utf-8 -*-
# This software is under the MIT License

import math

import numpy as np
import pytest
from scipy.special import expit

from pylib.svc_model import (
    assemble_training,
    eval_f,
    eval_g,
    eval_pq,
    evaluate,
    grad_f,
    grad_g_apply,
    grad_g_matrix,
    h_logistic,
    logistic_curvature,
    logistic_curvature_slope,
    lower_gradient,
    lower_hessian,
    lower_objective,
    nlp_residual,
    upper_objective,
)

STEP = 1e-6


def central(fn, x, d, h=STEP):
    return (fn(x + h * d) - fn(x - h * d)) / (2.0 * h)


def rel_err(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.linalg.norm(a - b) / max(1.0, np.linalg.norm(b)))


def test_h_logistic_is_tanh_half_and_odd():
    t = np.linspace(-40.0, 40.0, 801)
    np.testing.assert_allclose(h_logistic(t), np.tanh(t / 2.0), atol=1e-15)
    np.testing.assert_array_equal(h_logistic(-t), -h_logistic(t))
    assert h_logistic(800.0) == 1.0
    assert h_logistic(-800.0) == -1.0
    assert isinstance(h_logistic(0.5), float)


def test_curvature_matches_expit():
    t = np.linspace(-30.0, 30.0, 601)
    np.testing.assert_allclose(logistic_curvature(t), expit(t) * expit(-t), atol=1e-16)
    assert logistic_curvature(0.0) == 0.25
    assert np.all(logistic_curvature(np.array([-1e3, 1e3])) >= 0.0)


def test_curvature_slope_is_its_derivative():
    t = np.linspace(-12.0, 12.0, 97)
    fd = central(logistic_curvature, t, np.ones_like(t), h=1e-5)
    np.testing.assert_allclose(logistic_curvature_slope(t), fd, atol=1e-9)
    assert logistic_curvature_slope(0.0) == 0.0


def test_grad_f_matches_finite_differences(small_problem, rng):
    fp = small_problem
    for _ in range(100):
        w = rng.standard_normal(fp.dim)
        d = rng.standard_normal(fp.dim)
        fd = central(lambda v: eval_f(fp, v), w, d)
        assert abs(grad_f(fp, w) @ d - fd) <= 1e-6 * max(1.0, abs(fd))


def test_grad_g_apply_matches_matrix_and_differences(small_problem, rng):
    fp = small_problem
    for _ in range(100):
        w = rng.standard_normal(fp.dim)
        d = rng.standard_normal(fp.dim)
        applied = grad_g_apply(fp, w, d)
        np.testing.assert_allclose(applied, grad_g_matrix(fp, w) @ d, atol=1e-12)
        fd = central(lambda v: eval_g(fp, v), w, d)
        assert rel_err(applied, fd) <= 1e-6


def test_grad_g_matrix_is_symmetric_psd(small_problem, rng):
    M = grad_g_matrix(small_problem, rng.standard_normal(small_problem.dim))
    np.testing.assert_allclose(M, M.T, atol=1e-14)
    assert np.linalg.eigvalsh(M).min() >= -1e-12


def test_p_and_q_are_derivatives(small_problem, rng):
    fp = small_problem
    for _ in range(100):
        w = rng.standard_normal(fp.dim)
        d = rng.standard_normal(fp.dim)
        p, q = eval_pq(fp, w)
        # s = expit(-A w), so ds = -p * (A d)
        ds = central(lambda v: evaluate(fp, v).s, w, d)
        assert rel_err(-p * fp.apply_A(d).reshape(-1), ds.reshape(-1)) <= 1e-6
        du = central(lambda v: evaluate(fp, v).u, w, d)
        assert rel_err(q * fp.apply_XT(d).reshape(-1), du.reshape(-1)) <= 1e-6


def test_folds_are_independent(small_problem, rng):
    fp = small_problem
    w = rng.standard_normal(fp.dim)
    moved = w.copy()
    moved[fp.n :] += 1.0
    np.testing.assert_allclose(eval_g(fp, w)[: fp.n], eval_g(fp, moved)[: fp.n], atol=1e-14)
    np.testing.assert_allclose(grad_f(fp, w)[: fp.n], grad_f(fp, moved)[: fp.n], atol=1e-14)


def test_lower_gradient_is_gradient_of_objective(small_problem, rng):
    fp = small_problem
    C = 1.7
    for j in range(fp.T):
        for _ in range(50):
            w = rng.standard_normal(fp.n)
            d = rng.standard_normal(fp.n)
            fd = central(lambda v: lower_objective(fp, j, v, C), w, d)
            got = lower_gradient(fp, j, w, C) @ d
            assert abs(got - fd) <= 1e-6 * max(1.0, abs(fd))
            H = lower_hessian(fp, j, w, C)
            fd_grad = central(lambda v: lower_gradient(fp, j, v, C), w, d)
            assert rel_err(H @ d, fd_grad) <= 1e-6


def test_lower_gradient_is_a_block_of_the_nlp_residual(small_problem, rng):
    fp = small_problem
    w = rng.standard_normal(fp.dim)
    residual = fp.folds_of(nlp_residual(fp, 0.8, w))
    for j, w_j in enumerate(fp.folds_of(w)):
        np.testing.assert_allclose(lower_gradient(fp, j, w_j, 0.8), residual[j], atol=1e-13)


def test_upper_objective_at_zero_is_log_two(small_problem):
    value = upper_objective(small_problem, np.zeros(small_problem.dim))
    assert value == pytest.approx(math.log(2.0), rel=1e-12)


def test_training_problem_has_no_validation(dataset_factory):
    ds = dataset_factory(20, 3)
    fp = assemble_training(ds, np.arange(12))
    assert (fp.T, fp.m1, fp.m2, fp.n) == (1, 0, 12, 3)
    with pytest.raises(ValueError):
        upper_objective(fp, np.zeros(3))


def test_problem_arrays_are_read_only(small_problem):
    with pytest.raises(ValueError):
        small_problem.A[0, 0, 0] = 1.0
