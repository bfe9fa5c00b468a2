# -*- coding: utf-8 -*-
# This software is under the MIT License

"""Fold-structured logistic SVC model: objectives, residuals and derivatives.

Vectors that live in the stacked weight space have length T*n and are laid
out fold after fold, i.e. `w.reshape(T, n)[j]` is `w^(j)`. Every quantity of
fold j reads only fold j's blocks.

Notation used below:
    A^(j)  (m1, n)   validation rows  y_i * x_i^T
    X^(j)  (n, m2)   training columns x_i
    yhat^(j)         training labels
    f(w)   = sum log(1 + exp(-A w))
    g(w)   = 1/2 X (h_X(w) - yhat)
    s(w)   = 1 / (1 + exp(A w))
    u(w)   = derivative of h_X / 2, so that grad g = X Diag(u) X^T
"""

from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np
import scipy.linalg
from scipy.special import expit

from .dataio import Dataset, SplitPlan

ArrayOrFloat = Union[float, np.ndarray]


def _as_output(value: np.ndarray, like: ArrayOrFloat) -> ArrayOrFloat:
    return float(value) if np.ndim(like) == 0 else value


def h_logistic(t: ArrayOrFloat) -> ArrayOrFloat:
    """(1 - e^-t) / (1 + e^-t), i.e. tanh(t/2), evaluated without overflow.

    Exactly odd: h(-t) == -h(t) bit for bit.
    """
    x = np.asarray(t, dtype=float)
    e = np.exp(-np.abs(x))
    h = np.copysign(-np.expm1(-np.abs(x)) / (1.0 + e), x)
    return _as_output(h, t)


def logistic_curvature(t: ArrayOrFloat) -> ArrayOrFloat:
    """e^t / (1 + e^t)^2, an even function with maximum 1/4 at t = 0."""
    x = np.asarray(t, dtype=float)
    e = np.exp(-np.abs(x))
    return _as_output(e / (1.0 + e) ** 2, t)


def logistic_curvature_slope(t: ArrayOrFloat) -> ArrayOrFloat:
    """e^-t (e^-t - 1) / (1 + e^-t)^3, the derivative of `logistic_curvature`."""
    x = np.asarray(t, dtype=float)
    e = np.exp(-np.abs(x))
    q = np.copysign(e * (1.0 - e) / (1.0 + e) ** 3, -x)
    return _as_output(np.where(x == 0.0, 0.0, q), t)


@dataclass(frozen=True)
class FoldedProblem:
    """Block operators of the T-fold cross-validation problem."""

    T: int
    n: int
    m1: int
    m2: int
    A: np.ndarray  # (T, m1, n)
    X: np.ndarray  # (T, n, m2)
    yhat: np.ndarray  # (T, m2)

    def __post_init__(self) -> None:
        if self.A.shape != (self.T, self.m1, self.n):
            raise ValueError(f'A blocks have shape {self.A.shape}')
        if self.X.shape != (self.T, self.n, self.m2):
            raise ValueError(f'X blocks have shape {self.X.shape}')
        if self.yhat.shape != (self.T, self.m2):
            raise ValueError(f'yhat has shape {self.yhat.shape}')
        if not np.all(np.abs(self.yhat) == 1.0):
            raise ValueError('training labels must be -1 or +1')
        for a in (self.A, self.X, self.yhat):
            a.setflags(write=False)

    @property
    def dim(self) -> int:
        """Length T*n of the stacked weight vector."""
        return self.T * self.n

    @property
    def yhat_flat(self) -> np.ndarray:
        return self.yhat.reshape(-1)

    def folds_of(self, v: np.ndarray) -> np.ndarray:
        """View a stacked (T*n,) vector as (T, n)."""
        v = np.asarray(v, dtype=float)
        if v.shape != (self.dim,):
            raise ValueError(f'expected a vector of length {self.dim}, got {v.shape}')
        return v.reshape(self.T, self.n)

    def validation_margins(self, w: np.ndarray) -> np.ndarray:
        """A^(j) w^(j) for every fold, shape (T, m1)."""
        return np.einsum('tmn,tn->tm', self.A, self.folds_of(w))

    def training_margins(self, w: np.ndarray) -> np.ndarray:
        """X^(j)^T w^(j) for every fold, shape (T, m2)."""
        return np.einsum('tnm,tn->tm', self.X, self.folds_of(w))

    def apply_X(self, v: np.ndarray) -> np.ndarray:
        """Blockwise X v for v of shape (T, m2); returns (T*n,)."""
        return np.einsum('tnm,tm->tn', self.X, v).reshape(-1)

    def apply_XT(self, d: np.ndarray) -> np.ndarray:
        """Blockwise X^T d; returns (T, m2)."""
        return np.einsum('tnm,tn->tm', self.X, self.folds_of(d))

    def apply_A(self, d: np.ndarray) -> np.ndarray:
        return np.einsum('tmn,tn->tm', self.A, self.folds_of(d))

    def apply_AT(self, v: np.ndarray) -> np.ndarray:
        return np.einsum('tmn,tm->tn', self.A, v).reshape(-1)


@dataclass(frozen=True)
class ModelEval:
    """Cached per-sample quantities at one stacked weight vector."""

    w: np.ndarray
    s: np.ndarray  # (T, m1), in (0, 1)
    u: np.ndarray  # (T, m2), in (0, 1/4]
    h: np.ndarray  # (T, m2), in (-1, 1)
    p: Optional[np.ndarray] = None  # (T, m1)
    q: Optional[np.ndarray] = None  # (T, m2)


def evaluate(fp: FoldedProblem, w: np.ndarray, second_order: bool = False) -> ModelEval:
    """Evaluate s(w), u(w), h_X(w) and optionally p(w), q(w)."""
    w = np.asarray(w, dtype=float)
    ta = fp.validation_margins(w)
    tx = fp.training_margins(w)
    return ModelEval(
        w=w,
        s=expit(-ta),
        u=logistic_curvature(tx),
        h=h_logistic(tx),
        p=logistic_curvature(ta) if second_order else None,
        q=logistic_curvature_slope(tx) if second_order else None,
    )


def assemble(ds: Dataset, plan: SplitPlan) -> FoldedProblem:
    """Fold j validates on fold j and trains on the other T-1 folds."""
    T, n = plan.T, ds.n_features
    A = np.empty((T, plan.m1, n))
    X = np.empty((T, n, plan.m2))
    yhat = np.empty((T, plan.m2))
    for j in range(T):
        rows = ds.dense_rows(plan.folds[j])
        A[j] = ds.labels(plan.folds[j])[:, None] * rows
        train = plan.training_indices(j)
        X[j] = ds.dense_rows(train).T
        yhat[j] = ds.labels(train)
    return FoldedProblem(T=T, n=n, m1=plan.m1, m2=plan.m2, A=A, X=X, yhat=yhat)


def assemble_training(ds: Dataset, indices: np.ndarray) -> FoldedProblem:
    """One-block problem training on `indices` with an empty validation block."""
    indices = np.asarray(indices, dtype=np.intp)
    n, m = ds.n_features, int(indices.shape[0])
    return FoldedProblem(
        T=1,
        n=n,
        m1=0,
        m2=m,
        A=np.zeros((1, 0, n)),
        X=ds.dense_rows(indices).T[None, :, :].copy(),
        yhat=ds.labels(indices)[None, :].copy(),
    )


def eval_f(fp: FoldedProblem, w: np.ndarray) -> float:
    """f(w) = sum of validation logistic losses."""
    return float(np.logaddexp(0.0, -fp.validation_margins(w)).sum())


def grad_f(fp: FoldedProblem, w: np.ndarray, ev: Optional[ModelEval] = None) -> np.ndarray:
    s = ev.s if ev is not None else expit(-fp.validation_margins(w))
    return -fp.apply_AT(s)


def eval_g(fp: FoldedProblem, w: np.ndarray, ev: Optional[ModelEval] = None) -> np.ndarray:
    h = ev.h if ev is not None else h_logistic(fp.training_margins(w))
    return 0.5 * fp.apply_X(h - fp.yhat)


def grad_g_apply(
    fp: FoldedProblem,
    w: np.ndarray,
    d: np.ndarray,
    ev: Optional[ModelEval] = None,
) -> np.ndarray:
    """grad g(w) d = X Diag(u(w)) X^T d, never forming the matrix."""
    u = ev.u if ev is not None else logistic_curvature(fp.training_margins(w))
    return fp.apply_X(u * fp.apply_XT(d))


def grad_g_blocks(
    fp: FoldedProblem, w: np.ndarray, ev: Optional[ModelEval] = None
) -> np.ndarray:
    """Diagonal blocks X^(j) Diag(u^(j)) X^(j)^T, shape (T, n, n)."""
    u = ev.u if ev is not None else logistic_curvature(fp.training_margins(w))
    return np.einsum('tnm,tm,tkm->tnk', fp.X, u, fp.X)


def grad_g_matrix(
    fp: FoldedProblem, w: np.ndarray, ev: Optional[ModelEval] = None
) -> np.ndarray:
    """Assembled (T*n, T*n) symmetric PSD matrix grad g(w)."""
    return scipy.linalg.block_diag(*grad_g_blocks(fp, w, ev))


def eval_pq(fp: FoldedProblem, w: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """p(w) (length T*m1) and q(w) (length T*m2)."""
    p = logistic_curvature(fp.validation_margins(w))
    q = logistic_curvature_slope(fp.training_margins(w))
    return p.reshape(-1), q.reshape(-1)


def lower_objective(fp: FoldedProblem, j: int, w_j: np.ndarray, C: float) -> float:
    """1/2 |w_j|^2 + C sum log(1 + exp(-yhat x^T w_j)) over fold j's training set."""
    w_j = np.asarray(w_j, dtype=float)
    margins = fp.yhat[j] * (fp.X[j].T @ w_j)
    return float(0.5 * w_j @ w_j + C * np.logaddexp(0.0, -margins).sum())


def lower_gradient(fp: FoldedProblem, j: int, w_j: np.ndarray, C: float) -> np.ndarray:
    """w_j + C/2 sum x (h(x^T w_j) - yhat), the fold-j block of `nlp_residual`."""
    w_j = np.asarray(w_j, dtype=float)
    h = h_logistic(fp.X[j].T @ w_j)
    return w_j + 0.5 * C * (fp.X[j] @ (h - fp.yhat[j]))


def lower_hessian(fp: FoldedProblem, j: int, w_j: np.ndarray, C: float) -> np.ndarray:
    """I + C X^(j) Diag(u) X^(j)^T."""
    w_j = np.asarray(w_j, dtype=float)
    u = logistic_curvature(fp.X[j].T @ w_j)
    return np.eye(fp.n) + C * ((fp.X[j] * u) @ fp.X[j].T)


def nlp_residual(fp: FoldedProblem, C: float, w: np.ndarray) -> np.ndarray:
    """w + C g(w); zero iff every w^(j) minimizes its lower-level problem."""
    w = np.asarray(w, dtype=float)
    return w + C * eval_g(fp, w)


def upper_objective(fp: FoldedProblem, w: np.ndarray) -> float:
    """Mean validation logistic loss f(w) / (T m1)."""
    if fp.m1 == 0:
        raise ValueError('the problem has no validation samples')
    return eval_f(fp, w) / (fp.T * fp.m1)
