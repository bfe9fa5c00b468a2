# -*- coding: utf-8 -*-
# This software is under the MIT License

"""Lower-level Newton solver and the grid-search baseline."""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator, List, Optional, Tuple

import numpy as np
import scipy.linalg

from .newton_solver import SolverError
from .svc_model import (
    FoldedProblem,
    lower_gradient,
    lower_hessian,
    lower_objective,
    upper_objective,
)
from .sys_utils import DEFAULT_C_GRID

logger = logging.getLogger(__name__)

LOWER_TOL: float = 1e-10
LOWER_MAX_ITERS: int = 100
ARMIJO_C1: float = 1e-4
GRID_TIE_TOL: float = 1e-12
# Newton steps shorter than this relative to |w| are rounding noise
STALL_RTOL: float = 4.0 * float(np.finfo(float).eps)


@dataclass(frozen=True)
class GridSpec:
    """Strictly increasing positive C values."""

    values: Tuple[float, ...] = DEFAULT_C_GRID

    def __post_init__(self) -> None:
        values = tuple(float(v) for v in self.values)
        if not values:
            raise ValueError('the C grid is empty')
        if any(not v > 0.0 for v in values):
            raise ValueError('grid values must be positive')
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError('grid values must be strictly increasing')
        object.__setattr__(self, 'values', values)

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self) -> Iterator[float]:
        return iter(self.values)

    @classmethod
    def parse(cls, text: str) -> 'GridSpec':
        """Parse `v1,v2,...`."""
        try:
            values = [float(x) for x in text.split(',') if x.strip()]
        except ValueError:
            raise ValueError(f'Bad grid list "{text}"') from None
        return cls(tuple(values))


@dataclass
class GridResult:
    """Upper-level errors over a grid and the winning point."""

    grid: GridSpec
    E_CV: Tuple[float, ...]
    best_index: int
    w_best: np.ndarray
    wall_time: float = 0.0

    @property
    def C_best(self) -> float:
        return self.grid.values[self.best_index]

    @property
    def E_CV_best(self) -> float:
        return self.E_CV[self.best_index]

    def table(self) -> List[Tuple[float, float, bool]]:
        """Rows (C, E_CV, is_best) in grid order."""
        return [
            (c, e, i == self.best_index)
            for i, (c, e) in enumerate(zip(self.grid.values, self.E_CV))
        ]


def _armijo(
    fp: FoldedProblem, j: int, w: np.ndarray, d: np.ndarray, grad: np.ndarray, C: float
) -> float:
    f0 = lower_objective(fp, j, w, C)
    slope = float(grad @ d)
    # Objective differences below this are rounding noise
    slack = 16.0 * np.finfo(float).eps * max(1.0, abs(f0))
    step = 1.0
    for _ in range(60):
        if lower_objective(fp, j, w + step * d, C) <= f0 + ARMIJO_C1 * step * slope + slack:
            return step
        step *= 0.5
    return step


def solve_lower(
    fp: FoldedProblem,
    j: int,
    C: float,
    tol: float = LOWER_TOL,
    max_iters: int = LOWER_MAX_ITERS,
    w0: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Minimize fold j's strongly convex training problem by damped Newton.

    Stops at |w + C g_j(w)| <= tol, or once the Newton step no longer moves
    w in floating point.
    """
    if C < 0.0:
        raise ValueError(f'C must be non-negative, got {C}')
    if not 0 <= j < fp.T:
        raise ValueError(f'fold {j} is out of range 0..{fp.T - 1}')
    w = np.zeros(fp.n) if w0 is None else np.array(w0, dtype=float)
    for _ in range(max_iters + 1):
        grad = lower_gradient(fp, j, w, C)
        if float(np.linalg.norm(grad)) <= tol:
            return w
        H = lower_hessian(fp, j, w, C)
        d = -scipy.linalg.cho_solve(scipy.linalg.cho_factor(H), grad)
        if float(np.linalg.norm(d)) <= STALL_RTOL * max(1.0, float(np.linalg.norm(w))):
            logger.debug(
                f'fold {j} C={C:g}: Newton step stalled at |grad| = {np.linalg.norm(grad):.2e}'
            )
            return w
        w = w + _armijo(fp, j, w, d, grad, C) * d
    raise SolverError(
        f'lower-level Newton did not reach {tol:.1e} in {max_iters} steps '
        f'(fold {j}, C={C:g})'
    )


def solve_all_lower(fp: FoldedProblem, C: float, tol: float = LOWER_TOL) -> np.ndarray:
    """Stacked (T*n,) solutions of every fold's training problem."""
    return np.concatenate([solve_lower(fp, j, C, tol) for j in range(fp.T)])


def grid_search(
    fp: FoldedProblem,
    grid: Optional[GridSpec] = None,
    tol: float = LOWER_TOL,
    workers: int = 1,
) -> GridResult:
    """E_CV over the grid; ties within 1e-12 go to the smallest C."""
    grid = grid or GridSpec()
    start = time.perf_counter()

    def work(C: float) -> Tuple[float, np.ndarray]:
        w = solve_all_lower(fp, C, tol)
        return upper_objective(fp, w), w

    if workers > 1 and len(grid) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(work, grid.values))
    else:
        results = [work(C) for C in grid.values]

    best = 0
    for i, (e, _) in enumerate(results):
        if e < results[best][0] - GRID_TIE_TOL:
            best = i
        logger.debug(f'C={grid.values[i]:g} E_CV={e:.6g}')

    result = GridResult(
        grid=grid,
        E_CV=tuple(e for e, _ in results),
        best_index=best,
        w_best=results[best][1],
        wall_time=time.perf_counter() - start,
    )
    logger.info(f'Grid search picked C={result.C_best:g} E_CV={result.E_CV_best:.6g}')
    return result
