# -*- coding: utf-8 -*-
# This software is under the MIT License

"""Cross-validation pipelines: split, select C, retrain, score."""

import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .baselines import LOWER_TOL, GridResult, GridSpec, grid_search, solve_lower
from .dataio import Dataset, SplitPlan, make_split
from .jacobian import JacobianMode
from .newton_solver import TRACE_HEADER, SolveReport, SolverConfig, solve
from .svc_model import FoldedProblem, assemble, assemble_training, upper_objective
from .sys_utils import DEFAULT_SEED, read_json, write_csv, write_json

logger = logging.getLogger(__name__)

# Jacobian mode -> method label
METHOD_LABELS: Dict[str, str] = {
    JacobianMode.IMPLICIT.value: 'imSN',
    JacobianMode.EXPLICIT.value: 'exSN',
}
GRID_METHOD: str = 'GS-UNC'

SUMMARY_HEADER: Tuple[str, ...] = ('dataset', 'method', 'C', 't', 'E_t', 'E_CV')


@dataclass
class TuneResult:
    """Selected C, the retrained classifier and its errors."""

    dataset: str
    method: str
    T: int
    C_star: float
    C_hat: float
    w_hat: np.ndarray
    E_t: float
    E_CV: float
    E_t_folds: List[float] = field(default_factory=list)
    wall_time: float = 0.0
    converged: bool = True
    solve_report: Optional[SolveReport] = None
    grid: Optional[GridResult] = None

    def summary_row(self) -> Tuple[Any, ...]:
        return (self.dataset, self.method, self.C_star, self.wall_time, self.E_t, self.E_CV)

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            'dataset': self.dataset,
            'method': self.method,
            'T': self.T,
            'C_star': self.C_star,
            'C_hat': self.C_hat,
            'w_hat': self.w_hat,
            'E_t': self.E_t,
            'E_t_folds': self.E_t_folds,
            'E_CV': self.E_CV,
            'converged': self.converged,
        }
        if self.solve_report is not None:
            data['solve'] = self.solve_report.to_dict()
        if self.grid is not None:
            data['grid'] = [
                {'C': c, 'E_CV': e, 'best': best} for c, e, best in self.grid.table()
            ]
        return data


def post_process(
    fp_full: FoldedProblem, C_star: float, T: int, tol: float = LOWER_TOL
) -> Tuple[float, np.ndarray]:
    """C_hat = C* T/(T-1) and the classifier retrained on the whole CV pool."""
    if C_star < 0.0:
        raise ValueError(f'C* must be non-negative, got {C_star}')
    if T < 2:
        raise ValueError(f'need at least 2 folds, got T={T}')
    C_hat = C_star * T / (T - 1)
    return C_hat, solve_lower(fp_full, 0, C_hat, tol)


def test_error(w_hat: np.ndarray, X: Any, y: np.ndarray) -> float:
    """Misclassified percentage; a zero decision value predicts +1."""
    y = np.asarray(y, dtype=float)
    if y.shape[0] == 0:
        raise ValueError('the test set is empty')
    decision = np.asarray(X @ np.asarray(w_hat, dtype=float)).ravel()
    predicted = np.where(decision >= 0.0, 1.0, -1.0)
    return 100.0 * float(np.mean(predicted != y))


def _score(
    ds: Dataset,
    plan: SplitPlan,
    fp: FoldedProblem,
    C_star: float,
    w_folds: np.ndarray,
) -> Tuple[float, np.ndarray, float, List[float]]:
    test_X, test_y = ds.X[plan.test_indices], ds.labels(plan.test_indices)
    if C_star < 0.0:
        logger.warning(f'C* = {C_star:.3g} is negative, retraining with C = 0')
        C_star = 0.0
    C_hat, w_hat = post_process(assemble_training(ds, plan.cv_indices), C_star, plan.T)
    E_t = test_error(w_hat, test_X, test_y)
    E_t_folds = [test_error(w_j, test_X, test_y) for w_j in fp.folds_of(w_folds)]
    return C_hat, w_hat, E_t, E_t_folds


def run_sncv(
    ds: Dataset,
    T: int,
    l1: int,
    seed: int = DEFAULT_SEED,
    cfg: Optional[SolverConfig] = None,
    plan: Optional[SplitPlan] = None,
) -> TuneResult:
    """Smoothing Newton cross-validation on one split."""
    cfg = cfg or SolverConfig()
    plan = plan or make_split(ds, T, l1, seed)
    fp = assemble(ds, plan)
    logger.info(
        f'Tuning {ds.name or "dataset"}: T={T} m1={plan.m1} n={fp.n} '
        f'jacobian={cfg.jacobian_mode}'
    )
    report = solve(fp, cfg)
    w_star = report.final.w
    C_hat, w_hat, E_t, E_t_folds = _score(ds, plan, fp, report.final.C, w_star)
    return TuneResult(
        dataset=ds.name,
        method=METHOD_LABELS[cfg.jacobian_mode],
        T=T,
        C_star=report.final.C,
        C_hat=C_hat,
        w_hat=w_hat,
        E_t=E_t,
        E_CV=upper_objective(fp, w_star),
        E_t_folds=E_t_folds,
        wall_time=report.wall_time,
        converged=report.converged,
        solve_report=report,
    )


def run_grid(
    ds: Dataset,
    T: int,
    l1: int,
    seed: int = DEFAULT_SEED,
    grid: Optional[GridSpec] = None,
    tol: float = LOWER_TOL,
    workers: int = 1,
    plan: Optional[SplitPlan] = None,
) -> TuneResult:
    """Grid-search cross-validation with the same post-process."""
    plan = plan or make_split(ds, T, l1, seed)
    fp = assemble(ds, plan)
    result = grid_search(fp, grid, tol, workers)
    C_hat, w_hat, E_t, E_t_folds = _score(ds, plan, fp, result.C_best, result.w_best)
    return TuneResult(
        dataset=ds.name,
        method=GRID_METHOD,
        T=T,
        C_star=result.C_best,
        C_hat=C_hat,
        w_hat=w_hat,
        E_t=E_t,
        E_CV=result.E_CV_best,
        E_t_folds=E_t_folds,
        wall_time=result.wall_time,
        grid=result,
    )


def run_compare(
    ds: Dataset,
    T: int,
    l1: int,
    seed: int = DEFAULT_SEED,
    cfg: Optional[SolverConfig] = None,
    grid: Optional[GridSpec] = None,
    workers: int = 1,
) -> List[TuneResult]:
    """imSN, exSN and the grid baseline on one shared split."""
    cfg = cfg or SolverConfig()
    plan = make_split(ds, T, l1, seed)
    results = [
        run_sncv(ds, T, l1, seed, cfg.replace(jacobian_mode=mode.value), plan=plan)
        for mode in (JacobianMode.IMPLICIT, JacobianMode.EXPLICIT)
    ]
    results.append(run_grid(ds, T, l1, seed, grid, workers=workers, plan=plan))
    return results


def write_summary(path: str, results: Sequence[TuneResult]) -> None:
    write_csv(path, SUMMARY_HEADER, [r.summary_row() for r in results])


def write_report(path: str, results: Sequence[TuneResult]) -> None:
    data = [r.to_dict() for r in results]
    write_json(path, data[0] if len(data) == 1 else data)


def write_trace(path: str, report: SolveReport) -> None:
    write_csv(path, TRACE_HEADER, report.trace_rows())


def write_classifier(
    path: str, result: TuneResult, metadata: Optional[Dict[str, Any]] = None
) -> None:
    write_json(
        path,
        {
            'C_hat': result.C_hat,
            'w_hat': result.w_hat,
            'n': int(result.w_hat.shape[0]),
            'metadata': dict(metadata or {}, method=result.method, C_star=result.C_star),
        },
    )


def load_classifier(path: str) -> Tuple[float, np.ndarray, Dict[str, Any]]:
    """Read (C_hat, w_hat, metadata) saved by `write_classifier`."""
    if not os.path.isfile(path):
        raise FileNotFoundError(f'Can not find classifier file "{path}"')
    data = read_json(path)
    try:
        w_hat = np.asarray(data['w_hat'], dtype=float)
        C_hat = float(data['C_hat'])
        n = int(data.get('n', w_hat.shape[0]))
    except (KeyError, TypeError, ValueError) as e:
        raise ValueError(f'Bad classifier file "{path}": {e}') from e
    if w_hat.ndim != 1 or w_hat.shape[0] != n:
        raise ValueError(f'Bad classifier file "{path}": w_hat length is not n={n}')
    return C_hat, w_hat, dict(data.get('metadata', {}))

