# -*- coding: utf-8 -*-
# This software is under the MIT License

import os
import sys
from typing import Callable

import numpy as np
import pytest
import scipy.sparse as sp

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.realpath(__file__))))

from pylib.dataio import Dataset, make_split  # noqa: E402
from pylib.smoothing import Iterate  # noqa: E402
from pylib.svc_model import FoldedProblem, assemble  # noqa: E402


def make_dataset(
    n_samples: int,
    n_features: int,
    seed: int = 0,
    shift: float = 0.6,
    name: str = 'synthetic',
) -> Dataset:
    """Two overlapping Gaussian classes, so no fold is separable."""
    rng = np.random.default_rng(seed)
    y = np.where(rng.random(n_samples) < 0.5, -1.0, 1.0)
    direction = np.linspace(1.0, 0.5, n_features)
    X = rng.standard_normal((n_samples, n_features)) + shift * y[:, None] * direction
    return Dataset(X=sp.csr_matrix(X), y=y, n_features=n_features, name=name)


def make_problem(T: int, n: int, m1: int, seed: int = 0) -> FoldedProblem:
    ds = make_dataset(T * m1 + 10, n, seed)
    return assemble(ds, make_split(ds, T, T * m1, seed))


def make_iterate(
    fp: FoldedProblem, rng: np.random.Generator, eps: float, C: float, scale: float = 0.3
) -> Iterate:
    return Iterate(
        eps=eps,
        C=C,
        mu=scale * rng.standard_normal(fp.dim),
        w=scale * rng.standard_normal(fp.dim),
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def dataset_factory() -> Callable[..., Dataset]:
    return make_dataset


@pytest.fixture
def problem_factory() -> Callable[..., FoldedProblem]:
    return make_problem


@pytest.fixture
def iterate_factory() -> Callable[..., Iterate]:
    return make_iterate


@pytest.fixture
def small_problem() -> FoldedProblem:
    return make_problem(T=2, n=3, m1=8, seed=3)
