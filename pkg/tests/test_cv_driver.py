# -*- coding: utf-8 -*-
# This software is under the MIT License

import csv

import numpy as np
import pytest

from pylib import cv_driver
from pylib.baselines import GridSpec
from pylib.dataio import make_split
from pylib.newton_solver import SolverConfig
from pylib.svc_model import assemble_training, lower_gradient


@pytest.fixture
def dataset(dataset_factory):
    return dataset_factory(60, 3, seed=8)


def test_post_process_scales_C_and_retrains(dataset):
    fp = assemble_training(dataset, np.arange(45))
    C_hat, w_hat = cv_driver.post_process(fp, 0.468, 3, tol=1e-11)
    assert C_hat == pytest.approx(0.702)
    assert np.linalg.norm(lower_gradient(fp, 0, w_hat, C_hat)) <= 1e-10


def test_post_process_retrain_is_stationary_for_large_C(dataset):
    fp = assemble_training(dataset, np.arange(45))
    C_hat, w_hat = cv_driver.post_process(fp, 1e4, 3)
    assert C_hat == pytest.approx(1.5e4)
    assert np.linalg.norm(lower_gradient(fp, 0, w_hat, C_hat)) <= 1e-8


def test_post_process_edge_cases(dataset):
    fp = assemble_training(dataset, np.arange(45))
    C_hat, w_hat = cv_driver.post_process(fp, 0.0, 5)
    assert C_hat == 0.0
    np.testing.assert_array_equal(w_hat, np.zeros(dataset.n_features))
    with pytest.raises(ValueError):
        cv_driver.post_process(fp, -0.1, 3)
    with pytest.raises(ValueError):
        cv_driver.post_process(fp, 1.0, 1)


def test_error_percentage(dataset):
    idx = np.arange(20)
    X, y = dataset.X[idx], dataset.labels(idx)
    # A zero classifier predicts +1 everywhere
    zero = cv_driver.test_error(np.zeros(dataset.n_features), X, y)
    assert zero == pytest.approx(100.0 * float(np.mean(y < 0)))

    perfect = np.array([[1.0, 0.0], [-2.0, 0.0], [0.0, 3.0]])
    assert cv_driver.test_error(np.array([1.0, 0.0]), perfect, np.array([1.0, -1.0, 1.0])) == 0.0
    with pytest.raises(ValueError):
        cv_driver.test_error(np.ones(2), np.zeros((0, 2)), np.zeros(0))


def test_run_sncv_is_deterministic(dataset):
    cfg = SolverConfig(tol=1e-6)
    a = cv_driver.run_sncv(dataset, 3, 45, seed=5, cfg=cfg)
    b = cv_driver.run_sncv(dataset, 3, 45, seed=5, cfg=cfg)
    assert a.converged
    assert a.method == 'imSN'
    assert a.C_star == b.C_star
    np.testing.assert_array_equal(a.w_hat, b.w_hat)
    assert a.C_star >= 0.0
    assert a.C_hat == pytest.approx(a.C_star * 3 / 2)
    assert 0.0 <= a.E_t <= 100.0
    assert len(a.E_t_folds) == 3
    assert a.E_CV > 0.0
    assert a.to_dict()['solve']['converged']


def test_explicit_mode_is_labelled(dataset):
    result = cv_driver.run_sncv(
        dataset, 3, 45, seed=5, cfg=SolverConfig(jacobian_mode='explicit')
    )
    assert result.method == 'exSN'


def test_run_grid(dataset):
    grid = GridSpec((0.01, 0.1, 1.0, 10.0))
    result = cv_driver.run_grid(dataset, 3, 45, seed=5, grid=grid)
    assert result.method == 'GS-UNC'
    assert result.C_star in grid.values
    assert result.E_CV == min(result.grid.E_CV)
    assert len(result.to_dict()['grid']) == 4


def test_compare_shares_one_split(dataset):
    results = cv_driver.run_compare(
        dataset, 3, 45, seed=5, cfg=SolverConfig(tol=1e-8), grid=GridSpec((0.1, 1.0))
    )
    assert [r.method for r in results] == ['imSN', 'exSN', 'GS-UNC']
    assert results[0].C_star == pytest.approx(results[1].C_star, abs=1e-3)


def test_classifier_file_round_trip(dataset, tmp_path):
    plan = make_split(dataset, 3, 45, 5)
    result = cv_driver.run_grid(dataset, 3, 45, grid=GridSpec((0.5,)), plan=plan)
    path = str(tmp_path / 'classifier.json')
    cv_driver.write_classifier(path, result, {'dataset': 'synthetic'})
    C_hat, w_hat, meta = cv_driver.load_classifier(path)
    assert C_hat == result.C_hat
    np.testing.assert_array_equal(w_hat, result.w_hat)
    assert meta == {'dataset': 'synthetic', 'method': 'GS-UNC', 'C_star': 0.5}


def test_load_classifier_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        cv_driver.load_classifier(str(tmp_path / 'missing.json'))
    bad = tmp_path / 'bad.json'
    bad.write_text('{"C_hat": 1.0, "w_hat": [1.0, 2.0], "n": 3}')
    with pytest.raises(ValueError, match='n=3'):
        cv_driver.load_classifier(str(bad))


def test_summary_file(dataset, tmp_path):
    result = cv_driver.run_grid(dataset, 3, 45, grid=GridSpec((0.5, 5.0)))
    path = tmp_path / 'summary.csv'
    cv_driver.write_summary(str(path), [result])
    with open(path, newline='') as fp:
        rows = list(csv.reader(fp))
    assert tuple(rows[0]) == cv_driver.SUMMARY_HEADER
    assert rows[1][:2] == ['synthetic', 'GS-UNC']
    assert len(rows) == 2
