# -*- coding: utf-8 -*-
# This software is under the MIT License

"""Bi-conjugate gradient solver for square nonsymmetric systems."""

import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional, Union

import numpy as np
import scipy.linalg
from scipy.sparse.linalg import LinearOperator, aslinearoperator

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class KrylovConfig:
    """Bi-CG stopping and breakdown thresholds.

    The iteration stops once |rhs - M x| <= max(rel_tol |rhs|, abs_tol).
    `max_iters = 0` means 10 times the system size.
    """

    max_iters: int = 0
    rel_tol: float = 1e-8
    abs_tol: float = 1e-14
    breakdown_tol: float = 1e-30
    seed: int = 0

    def __post_init__(self) -> None:
        if self.max_iters < 0:
            raise ValueError(f'max_iters must be >= 0, got {self.max_iters}')
        for name in ('rel_tol', 'abs_tol', 'breakdown_tol'):
            if not getattr(self, name) > 0.0:
                raise ValueError(f'{name} must be positive')


class BiCGResult(NamedTuple):
    x: np.ndarray
    residual_norm: float  # true residual |rhs - M x|
    iters: int
    converged: bool
    breakdown: bool = False
    dense_fallback: bool = False


class _Breakdown(Exception):
    pass


def _run(
    op: LinearOperator,
    b: np.ndarray,
    x: np.ndarray,
    shadow: np.ndarray,
    target: float,
    max_iters: int,
    breakdown_tol: float,
    start_iter: int,
):
    """One Bi-CG sweep from `x`; returns (x, best_x, best_res, iters, converged)."""
    r = b - op.matvec(x)
    rt = shadow.copy()
    p, pt = r.copy(), rt.copy()
    rho = float(rt @ r)
    best_x, best_res = x.copy(), float(np.linalg.norm(r))
    k = start_iter
    if best_res <= target:
        return x, x, best_res, k, True
    while k < max_iters:
        if abs(rho) <= breakdown_tol * max(np.linalg.norm(rt) * np.linalg.norm(r), 1e-300):
            raise _Breakdown(k, x, best_x, best_res)
        q = op.matvec(p)
        qt = op.rmatvec(pt)
        pq = float(pt @ q)
        if abs(pq) <= breakdown_tol * max(np.linalg.norm(pt) * np.linalg.norm(q), 1e-300):
            raise _Breakdown(k, x, best_x, best_res)
        a = rho / pq
        x = x + a * p
        r = r - a * q
        rt = rt - a * qt
        k += 1

        res = float(np.linalg.norm(r))
        if res <= target:
            # The recursive residual drifts; only the true one counts
            r = b - op.matvec(x)
            res = float(np.linalg.norm(r))
            if res <= target:
                return x, x, res, k, True
        if res < best_res:
            best_x, best_res = x.copy(), res

        rho_new = float(rt @ r)
        beta = rho_new / rho
        rho = rho_new
        p = r + beta * p
        pt = rt + beta * pt
    return x, best_x, best_res, k, False


def bicg_solve(
    op: Union[LinearOperator, np.ndarray],
    rhs: np.ndarray,
    cfg: Optional[KrylovConfig] = None,
    *,
    dense: Optional[np.ndarray] = None,
) -> BiCGResult:
    """Solve M x = rhs from x0 = 0 with the shadow residual set to rhs.

    On breakdown the sweep restarts once from the current iterate with a
    seeded random shadow vector. A second breakdown falls back to a dense
    solve when `dense` (the assembled M) is given; otherwise the result is
    reported as not converged.
    """
    cfg = cfg or KrylovConfig()
    op = aslinearoperator(op)
    b = np.asarray(rhs, dtype=float).ravel()
    size = b.shape[0]
    if op.shape != (size, size):
        raise ValueError(f'operator shape {op.shape} does not match rhs length {size}')
    max_iters = cfg.max_iters or 10 * size

    b_norm = float(np.linalg.norm(b))
    if b_norm == 0.0:
        return BiCGResult(np.zeros(size), 0.0, 0, True)
    target = max(cfg.rel_tol * b_norm, cfg.abs_tol)

    x = np.zeros(size)
    shadow = b.copy()
    iters = 0
    for attempt in range(2):
        try:
            x, best_x, _, iters, converged = _run(
                op, b, x, shadow, target, max_iters, cfg.breakdown_tol, iters
            )
        except _Breakdown as e:
            iters, x, best_x, _ = e.args
            if attempt == 0:
                logger.warning(f'Bi-CG breakdown at iteration {iters}, restarting')
                rng = np.random.default_rng(cfg.seed)
                r = b - op.matvec(x)
                shadow = r + rng.standard_normal(size) * (
                    np.linalg.norm(r) / np.sqrt(size)
                )
                continue
            if dense is not None:
                logger.warning('Bi-CG broke down twice, solving densely')
                sol = scipy.linalg.solve(dense, b)
                res = float(np.linalg.norm(b - dense @ sol))
                return BiCGResult(sol, res, iters, res <= target, True, True)
            res = float(np.linalg.norm(b - op.matvec(best_x)))
            return BiCGResult(best_x, res, iters, False, True)

        if converged:
            return BiCGResult(x, float(np.linalg.norm(b - op.matvec(x))), iters, True)
        res = float(np.linalg.norm(b - op.matvec(best_x)))
        return BiCGResult(best_x, res, iters, res <= target)

    raise AssertionError('unreachable')
