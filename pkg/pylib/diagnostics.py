# -*- coding: utf-8 -*-
# This software is under the MIT License

"""Second-order optimality diagnostics at a solution of the KKT system."""

import enum
import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, Optional

import numpy as np
import scipy.linalg
from scipy.sparse.linalg import LinearOperator, cg

from .jacobian import JacobianBlocks, JacobianMode, build_blocks
from .newton_solver import SolverError
from .smoothing import Iterate, huber
from .svc_model import FoldedProblem, eval_g

logger = logging.getLogger(__name__)

DEFAULT_TOL_ZERO: float = 1e-8


class SecondOrderCase(str, enum.Enum):
    C_POSITIVE = 'C_positive'
    C_ZERO_LAMBDA_ZERO = 'C_zero_lambda_zero'
    C_ZERO_LAMBDA_POSITIVE = 'C_zero_lambda_positive'
    C_NEGATIVE = 'C_negative'


@dataclass(frozen=True)
class SecondOrderReport:
    z_star: float
    iota_star: float
    lambda_star: float
    case: SecondOrderCase
    strict_local_min: bool
    nu_star: float

    @property
    def verdict(self) -> str:
        if not self.strict_local_min:
            return 'unverified'
        label = {
            SecondOrderCase.C_POSITIVE: 'i',
            SecondOrderCase.C_ZERO_LAMBDA_ZERO: 'ii',
            SecondOrderCase.C_ZERO_LAMBDA_POSITIVE: 'iii',
        }.get(self.case)
        if label is None:
            return 'unverified'
        return f'strict local minimizer (case {label})'

    def to_dict(self) -> Dict[str, Any]:
        return {
            'z_star': self.z_star,
            'iota_star': self.iota_star,
            'lambda_star': self.lambda_star,
            'case': self.case.value,
            'strict_local_min': self.strict_local_min,
            'nu_star': self.nu_star,
            'verdict': self.verdict,
        }


def _p_solver(blocks: JacobianBlocks) -> Callable[[np.ndarray], np.ndarray]:
    """Solver for P x = b; Cholesky when assembled, conjugate gradients otherwise."""
    if blocks.mode is JacobianMode.EXPLICIT:
        P = blocks.P_matrix()
        try:
            factor = scipy.linalg.cho_factor(P)
        except scipy.linalg.LinAlgError:
            # P is only guaranteed positive definite for C >= 0
            try:
                lu = scipy.linalg.lu_factor(P)
            except (scipy.linalg.LinAlgError, ValueError) as e:
                raise SolverError('P(v) is singular') from e
            return lambda b: scipy.linalg.lu_solve(lu, b)
        return lambda b: scipy.linalg.cho_solve(factor, b)

    dim = blocks.fp.dim
    op = LinearOperator(
        shape=(dim, dim), matvec=blocks.apply_P, rmatvec=blocks.apply_P, dtype=float
    )

    def solve(b: np.ndarray) -> np.ndarray:
        x, info = cg(op, b, rtol=1e-13, atol=0.0, maxiter=10 * dim)
        if info != 0:
            logger.debug(f'CG on P stopped with info={info}, solving densely')
            return scipy.linalg.solve(blocks.P_matrix(), b, assume_a='sym')
        return x

    return solve


def compute_z(
    fp: FoldedProblem, it: Iterate, mode: JacobianMode = JacobianMode.IMPLICIT
) -> float:
    """z = g^T P^-1 (alpha P^-1 g - 2 grad g mu).

    P is symmetric, so z = y^T (alpha y - 2 grad g mu) with y = P^-1 g and
    a single solve suffices.
    """
    blocks = build_blocks(fp, it, 1.0, mode)
    y = _p_solver(blocks)(blocks.g_w)
    if not np.all(np.isfinite(y)):
        raise SolverError('P(v) solve is not finite')
    return float(y @ (blocks.apply_alpha(y) - 2.0 * blocks.dg_mu))


def compute_iota(fp: FoldedProblem, mu: np.ndarray) -> float:
    """iota = 1/4 mu^T X X^T X yhat + 1/(16 T m1) |A X yhat|^2, in factored form."""
    if fp.m1 == 0:
        raise ValueError('the problem has no validation samples')
    mu = np.asarray(mu, dtype=float)
    x_yhat = fp.apply_X(fp.yhat)
    first = 0.25 * float(mu @ fp.apply_X(fp.apply_XT(x_yhat)))
    a_x_yhat = fp.apply_A(x_yhat)
    second = float(np.sum(a_x_yhat * a_x_yhat)) / (16.0 * fp.T * fp.m1)
    return first + second


def compute_nu(
    fp: FoldedProblem,
    it: Iterate,
    kappa: float = 1.0,
    mode: JacobianMode = JacobianMode.IMPLICIT,
    z: Optional[float] = None,
) -> float:
    """nu = 1 + kappa eps + h2 (z - 1), the scalar pivot of the reduced system."""
    g = eval_g(fp, it.w)
    h2 = huber(it.eps, it.C - float(it.mu @ g)).d_t
    if z is None:
        z = compute_z(fp, it, mode)
    return 1.0 + kappa * it.eps + h2 * (z - 1.0)


def _is_zero(value: float, tol_zero: float) -> bool:
    return abs(value) <= tol_zero * max(1.0, abs(value))


def classify(
    fp: FoldedProblem,
    it: Iterate,
    tol_zero: float = DEFAULT_TOL_ZERO,
    kappa: float = 1.0,
    mode: JacobianMode = JacobianMode.IMPLICIT,
    converged: bool = True,
) -> SecondOrderReport:
    """Pick the critical-cone case at `it` and check second-order sufficiency.

    A point that did not converge, or has a clearly negative C, is never
    certified.
    """
    g = eval_g(fp, it.w)
    lam = float(-it.mu @ g)
    z = compute_z(fp, it, mode)
    iota = compute_iota(fp, it.mu) if fp.m1 else 0.0
    nu = compute_nu(fp, it, kappa, mode, z=z)

    if not _is_zero(it.C, tol_zero) and it.C > 0.0:
        case = SecondOrderCase.C_POSITIVE
        strict = z > 0.0
    elif not _is_zero(it.C, tol_zero):
        logger.warning(f'C = {it.C:.3g} is negative at the solution')
        case = SecondOrderCase.C_NEGATIVE
        strict = False
    else:
        if lam > 0.0 and not _is_zero(lam, tol_zero):
            case = SecondOrderCase.C_ZERO_LAMBDA_POSITIVE
            strict = True
        else:
            if lam < 0.0 and not _is_zero(lam, tol_zero):
                logger.warning(f'lambda = {lam:.3g} is negative, taken as zero')
            case = SecondOrderCase.C_ZERO_LAMBDA_ZERO
            strict = iota > 0.0
    if not converged:
        strict = False

    report = SecondOrderReport(
        z_star=z,
        iota_star=iota,
        lambda_star=lam,
        case=case,
        strict_local_min=strict,
        nu_star=nu,
    )
    if not strict:
        logger.warning(f'Second-order sufficiency not verified ({case.value})')
    return report
