# -*- coding: utf-8 -*-
# This software is under the MIT License

"""Jacobian of the smoothed KKT system, assembled or as a matrix-free operator.

Block layout (columns eps, C, mu, w):

    [ 1          0              0          0            ]
    [ kC - h1    1 + k|e| - h2  h2 g^T     h2 (grad g mu)^T ]
    [ 0          grad g mu      P          alpha        ]
    [ 0          g              0          P            ]

with P = I + C grad g(w) and
alpha = 1/(T m1) A^T Diag(p) A + C X Diag(X^T mu) Diag(q) X^T.
"""

import enum
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.linalg
from scipy.sparse.linalg import LinearOperator, aslinearoperator

from .smoothing import Iterate, SystemEval, evaluate_system
from .svc_model import FoldedProblem


class JacobianMode(str, enum.Enum):
    IMPLICIT = 'implicit'
    EXPLICIT = 'explicit'


@dataclass(frozen=True)
class JacobianBlocks:
    """Jacobian blocks at one iterate; explicit mode also holds dense P and alpha."""

    fp: FoldedProblem
    sys: SystemEval
    mode: JacobianMode
    h1: float
    h2: float
    xt_mu: np.ndarray  # X^T mu, (T, m2)
    P: Optional[np.ndarray] = None
    alpha: Optional[np.ndarray] = None

    @property
    def it(self) -> Iterate:
        return self.sys.it

    @property
    def kappa(self) -> float:
        return self.sys.kappa

    @property
    def g_w(self) -> np.ndarray:
        return self.sys.g

    @property
    def dg_mu(self) -> np.ndarray:
        return self.sys.dg_mu

    @property
    def d_eps_coeff(self) -> float:
        """dE2/d eps = kappa sign(eps) C - h1 (right derivative at eps = 0)."""
        sign = -1.0 if self.it.eps < 0.0 else 1.0
        return self.kappa * sign * self.it.C - self.h1

    @property
    def d_C_coeff(self) -> float:
        return 1.0 + self.kappa * abs(self.it.eps) - self.h2

    def apply_P(self, d: np.ndarray) -> np.ndarray:
        if self.P is not None:
            return self.P @ d
        fp, ev = self.fp, self.sys.ev
        return d + self.it.C * fp.apply_X(ev.u * fp.apply_XT(d))

    def apply_alpha(self, d: np.ndarray) -> np.ndarray:
        if self.alpha is not None:
            return self.alpha @ d
        fp, ev = self.fp, self.sys.ev
        validation = fp.apply_AT(ev.p * fp.apply_A(d)) / (fp.T * fp.m1)
        training = fp.apply_X(self.xt_mu * ev.q * fp.apply_XT(d))
        return validation + self.it.C * training

    def P_matrix(self) -> np.ndarray:
        if self.P is not None:
            return self.P
        return _assemble_P(self.fp, self.sys)

    def alpha_matrix(self) -> np.ndarray:
        if self.alpha is not None:
            return self.alpha
        return _assemble_alpha(self.fp, self.sys, self.xt_mu)


def _assemble_P(fp: FoldedProblem, sys: SystemEval) -> np.ndarray:
    blocks = np.einsum('tnm,tm,tkm->tnk', fp.X, sys.ev.u, fp.X)
    return np.eye(fp.dim) + sys.it.C * scipy.linalg.block_diag(*blocks)


def _assemble_alpha(fp: FoldedProblem, sys: SystemEval, xt_mu: np.ndarray) -> np.ndarray:
    ev = sys.ev
    validation = np.einsum('tmn,tm,tmk->tnk', fp.A, ev.p, fp.A) / (fp.T * fp.m1)
    training = np.einsum('tnm,tm,tkm->tnk', fp.X, xt_mu * ev.q, fp.X)
    return scipy.linalg.block_diag(*(validation + sys.it.C * training))


def build_blocks(
    fp: FoldedProblem,
    it: Iterate,
    kappa: float,
    mode: JacobianMode = JacobianMode.IMPLICIT,
    sys: Optional[SystemEval] = None,
) -> JacobianBlocks:
    """Evaluate every Jacobian block at `it`."""
    mode = JacobianMode(mode)
    if sys is None or sys.ev.p is None or sys.it is not it:
        sys = evaluate_system(fp, it, kappa, second_order=True)
    xt_mu = fp.apply_XT(it.mu)
    P = alpha = None
    if mode is JacobianMode.EXPLICIT:
        P = _assemble_P(fp, sys)
        alpha = _assemble_alpha(fp, sys, xt_mu)
    return JacobianBlocks(
        fp=fp,
        sys=sys,
        mode=mode,
        h1=sys.hub.d_eps,
        h2=sys.hub.d_t,
        xt_mu=xt_mu,
        P=P,
        alpha=alpha,
    )


def apply_full_jacobian(blocks: JacobianBlocks, d: np.ndarray) -> np.ndarray:
    """J d for d = (d_eps, d_C, d_mu, d_w) of length 2*T*n + 2."""
    n = blocks.fp.dim
    d = np.asarray(d, dtype=float)
    if d.shape != (2 * n + 2,):
        raise ValueError(f'expected a vector of length {2 * n + 2}, got {d.shape}')
    d_eps, d_C, d_mu, d_w = d[0], d[1], d[2 : 2 + n], d[2 + n :]
    h2 = blocks.h2
    row2 = (
        blocks.d_eps_coeff * d_eps
        + blocks.d_C_coeff * d_C
        + h2 * (blocks.g_w @ d_mu)
        + h2 * (blocks.dg_mu @ d_w)
    )
    row3 = blocks.dg_mu * d_C + blocks.apply_P(d_mu) + blocks.apply_alpha(d_w)
    row4 = blocks.g_w * d_C + blocks.apply_P(d_w)
    return np.concatenate([[d_eps, row2], row3, row4])


def full_jacobian_matrix(blocks: JacobianBlocks) -> np.ndarray:
    """Dense (2Tn+2) x (2Tn+2) Jacobian."""
    n = blocks.fp.dim
    P = blocks.P_matrix()
    J = np.zeros((2 * n + 2, 2 * n + 2))
    J[0, 0] = 1.0
    J[1, 0] = blocks.d_eps_coeff
    J[1:, 1:] = reduced_matrix(blocks, P=P)
    return J


def reduced_matrix(blocks: JacobianBlocks, P: Optional[np.ndarray] = None) -> np.ndarray:
    """Dense (2Tn+1) x (2Tn+1) matrix acting on (d_C, d_mu, d_w)."""
    n = blocks.fp.dim
    P = blocks.P_matrix() if P is None else P
    M = np.zeros((2 * n + 1, 2 * n + 1))
    M[0, 0] = blocks.d_C_coeff
    M[0, 1 : 1 + n] = blocks.h2 * blocks.g_w
    M[0, 1 + n :] = blocks.h2 * blocks.dg_mu
    M[1 : 1 + n, 0] = blocks.dg_mu
    M[1 : 1 + n, 1 : 1 + n] = P
    M[1 : 1 + n, 1 + n :] = blocks.alpha_matrix()
    M[1 + n :, 0] = blocks.g_w
    M[1 + n :, 1 + n :] = P
    return M


def reduced_operator(blocks: JacobianBlocks) -> LinearOperator:
    """The reduced matrix as an operator with both M x and M^T y."""
    if blocks.mode is JacobianMode.EXPLICIT:
        return aslinearoperator(reduced_matrix(blocks))

    n = blocks.fp.dim
    a, h2 = blocks.d_C_coeff, blocks.h2
    g, dg_mu = blocks.g_w, blocks.dg_mu

    def matvec(x: np.ndarray) -> np.ndarray:
        x = np.ravel(x)
        c, mu, w = x[0], x[1 : 1 + n], x[1 + n :]
        return np.concatenate(
            [
                [a * c + h2 * (g @ mu) + h2 * (dg_mu @ w)],
                dg_mu * c + blocks.apply_P(mu) + blocks.apply_alpha(w),
                g * c + blocks.apply_P(w),
            ]
        )

    # P and alpha are symmetric, so M^T only moves the border terms
    def rmatvec(y: np.ndarray) -> np.ndarray:
        y = np.ravel(y)
        c, mu, w = y[0], y[1 : 1 + n], y[1 + n :]
        return np.concatenate(
            [
                [a * c + dg_mu @ mu + g @ w],
                h2 * g * c + blocks.apply_P(mu),
                h2 * dg_mu * c + blocks.apply_alpha(mu) + blocks.apply_P(w),
            ]
        )

    return LinearOperator(
        shape=(2 * n + 1, 2 * n + 1), matvec=matvec, rmatvec=rmatvec, dtype=float
    )


def reduced_system(
    blocks: JacobianBlocks,
    it: Iterate,
    zeta_k: float,
    eps_hat: float,
    kappa: float,
) -> Tuple[LinearOperator, np.ndarray]:
    """Eliminate d_eps = -eps + zeta_k eps_hat from the Newton equation.

    Returns the operator on (d_C, d_mu, d_w) and the right-hand side
    -[E2 + (kC - h1) d_eps; E3; E4].
    """
    if kappa != blocks.kappa or it is not blocks.it:
        raise ValueError('Jacobian blocks were built at a different iterate')
    d_eps = -it.eps + zeta_k * eps_hat
    rhs = -blocks.sys.E.copy()
    rhs[0] -= blocks.d_eps_coeff * d_eps
    return reduced_operator(blocks), rhs
