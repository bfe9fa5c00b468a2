# -*- coding: utf-8 -*-
# This software is under the MIT License

"""Squared smoothing Newton method on the smoothed KKT system."""

import dataclasses
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, NamedTuple, Optional, Tuple

import numpy as np
import scipy.linalg

from .bicg import KrylovConfig, bicg_solve
from .jacobian import JacobianMode, build_blocks, reduced_matrix, reduced_system
from .smoothing import (
    Direction,
    Iterate,
    SystemEval,
    evaluate_system,
    split_blocks,
)
from .svc_model import FoldedProblem

logger = logging.getLogger(__name__)

TRACE_HEADER: Tuple[str, ...] = (
    'k',
    'eps',
    'C',
    'psi',
    'E_hat_norm',
    'ell',
    'bicg_iters',
    'R_norm',
    'alt_ref_norm',
    'psi_next',
    'dense_fallback',
)


class SolverError(RuntimeError):
    """The outer iteration cannot continue."""

    def __init__(self, message: str, *, block: str = '') -> None:
        self.block: str = block
        super().__init__(message if not block else f'{message} (block "{block}")')


class LineSearchError(SolverError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of the smoothing Newton iteration."""

    eps_hat: float = 0.5
    r: float = 0.6
    r_hat: float = 0.6
    eta_hat: float = 0.2
    rho: float = 0.5
    sigma: float = 1e-8
    tau: float = 0.2
    kappa: float = 1.0
    eps0: float = 1.0
    C0: float = 1.0
    tol: float = 0.1
    max_outer: int = 200
    jacobian_mode: str = JacobianMode.IMPLICIT.value
    max_bicg_iters: int = 0
    eta_floor: float = 1e-14
    max_line_search: int = 60

    def __post_init__(self) -> None:
        checks = (
            (self.eps_hat > 0.0, 'eps_hat must be positive'),
            (0.0 < self.r < 1.0, 'r must lie in (0, 1)'),
            (self.r_hat > 0.0, 'r_hat must be positive'),
            (self.eta_hat > 0.0, 'eta_hat must be positive'),
            (0.0 < self.rho < 1.0, 'rho must lie in (0, 1)'),
            (0.0 < self.sigma < 0.5, 'sigma must lie in (0, 1/2)'),
            (0.0 < self.tau <= 1.0, 'tau must lie in (0, 1]'),
            (self.kappa > 0.0, 'kappa must be positive'),
            (self.eps0 > 0.0, 'eps0 must be positive'),
            (self.tol >= 0.0, 'tol must be non-negative'),
            (self.max_outer >= 1, 'max_outer must be at least 1'),
            (self.max_bicg_iters >= 0, 'max_bicg_iters must be non-negative'),
            (self.eta_floor > 0.0, 'eta_floor must be positive'),
            (self.max_line_search >= 0, 'max_line_search must be non-negative'),
        )
        for ok, message in checks:
            if not ok:
                raise ValueError(message)
        JacobianMode(self.jacobian_mode)
        if not self.delta < 1.0:
            raise ValueError(
                f'sqrt(2) * max(r * eps_hat, eta_hat) = {self.delta:.4g} must be < 1'
            )

    @property
    def delta(self) -> float:
        return math.sqrt(2.0) * max(self.r * self.eps_hat, self.eta_hat)

    @property
    def mode(self) -> JacobianMode:
        return JacobianMode(self.jacobian_mode)

    def replace(self, **overrides: Any) -> 'SolverConfig':
        overrides = {k: v for k, v in overrides.items() if v is not None}
        if isinstance(overrides.get('jacobian_mode'), JacobianMode):
            overrides['jacobian_mode'] = overrides['jacobian_mode'].value
        return dataclasses.replace(self, **overrides)

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'SolverConfig':
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ValueError(f'Unknown solver options: {", ".join(unknown)}')
        return cls(**data)

    @classmethod
    def from_toml(cls, path: str) -> 'SolverConfig':
        """Read the `[solver]` table of a TOML file."""
        import toml

        data = toml.load(path)
        return cls.from_dict(dict(data.get('solver', {})))


class TraceRow(NamedTuple):
    k: int
    eps: float
    C: float
    psi: float
    E_hat_norm: float
    ell: int
    bicg_iters: int
    R_norm: float
    alt_ref_norm: float
    psi_next: float
    dense_fallback: bool


class StepInfo(NamedTuple):
    direction: Direction
    bicg_iters: int
    R_norm: float
    alt_ref_norm: float
    eta: float
    zeta: float
    dense_fallback: bool


class LineSearchResult(NamedTuple):
    ell: int
    iterate: Iterate
    psi: float
    sys: SystemEval


@dataclass
class SolveReport:
    """Outcome and trajectory of one smoothing Newton run."""

    final: Iterate
    converged: bool
    outer_iters: int
    total_bicg_iters: int
    final_norm: float
    eps_norm: float
    E_norm: float
    lambda_star: float
    trace: List[TraceRow] = field(default_factory=list)
    diagnostics: Optional[Any] = None
    wall_time: float = 0.0
    mode: str = JacobianMode.IMPLICIT.value

    @property
    def C_star(self) -> float:
        return self.final.C

    @property
    def z_star(self) -> Optional[float]:
        return None if self.diagnostics is None else self.diagnostics.z_star

    def trace_rows(self) -> List[TraceRow]:
        return list(self.trace)

    def to_dict(self, include_timing: bool = False) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            'converged': self.converged,
            'mode': self.mode,
            'k': self.outer_iters,
            'iter': self.total_bicg_iters,
            'C_star': self.final.C,
            'eps': self.final.eps,
            'lambda_star': self.lambda_star,
            'E_hat_norm': self.final_norm,
            'eps_norm': self.eps_norm,
            'E_norm': self.E_norm,
            'mu': self.final.mu,
            'w': self.final.w,
            'diagnostics': None
            if self.diagnostics is None
            else self.diagnostics.to_dict(),
            'trace': [row._asdict() for row in self.trace],
        }
        if include_timing:
            data['wall_time'] = self.wall_time
        return data


def forcing_terms(E_hat_norm: float, cfg: SolverConfig) -> Tuple[float, float]:
    """eta_k = min(1, r_hat |Ê|^tau), zeta_k = r min(1, |Ê|^(1+tau))."""
    if E_hat_norm < 0.0:
        raise ValueError('a norm cannot be negative')
    eta = min(1.0, cfg.r_hat * E_hat_norm**cfg.tau)
    zeta = cfg.r * min(1.0, E_hat_norm ** (1.0 + cfg.tau))
    return eta, zeta


def _dense_step(blocks: Any, rhs: np.ndarray) -> Tuple[np.ndarray, float]:
    M = reduced_matrix(blocks)
    try:
        sol = scipy.linalg.solve(M, rhs)
    except (scipy.linalg.LinAlgError, ValueError) as e:
        raise SolverError(
            'Newton system is singular; z(mu, v) may be <= -kappa*eps here'
        ) from e
    if not np.all(np.isfinite(sol)):
        raise SolverError('Newton system is singular; the dense solve is not finite')
    return sol, float(np.linalg.norm(rhs - M @ sol))


def newton_step(
    fp: FoldedProblem,
    it: Iterate,
    cfg: SolverConfig,
    sys: Optional[SystemEval] = None,
) -> StepInfo:
    """Inexact Newton direction: fixed d_eps, Bi-CG on the reduced system."""
    if not it.eps > 0.0:
        raise SolverError(f'eps must stay positive, got {it.eps}')
    blocks = build_blocks(fp, it, cfg.kappa, cfg.mode, sys)
    norm = blocks.sys.norm
    eta, zeta = forcing_terms(norm, cfg)
    d_eps = -it.eps + zeta * cfg.eps_hat
    op, rhs = reduced_system(blocks, it, zeta, cfg.eps_hat, cfg.kappa)

    alt = blocks.sys.E.copy()
    alt[0] += blocks.d_eps_coeff
    alt_ref_norm = float(np.linalg.norm(alt))

    rhs_norm = float(np.linalg.norm(rhs))
    if rhs_norm == 0.0:
        return StepInfo(
            Direction(d_eps, 0.0, np.zeros(fp.dim), np.zeros(fp.dim)),
            0,
            0.0,
            alt_ref_norm,
            eta,
            zeta,
            False,
        )

    # Both inner tests: |R| <= eta_k |Ê| and |R| <= eta_hat |Ê|
    target = max(min(eta, cfg.eta_hat) * norm, cfg.eta_floor)
    kcfg = KrylovConfig(
        max_iters=cfg.max_bicg_iters,
        rel_tol=target / rhs_norm,
        abs_tol=cfg.eta_floor,
    )
    dense = getattr(op, 'A', None) if blocks.mode is JacobianMode.EXPLICIT else None
    res = bicg_solve(op, rhs, kcfg, dense=dense)
    sol, R_norm, fallback = res.x, res.residual_norm, res.dense_fallback
    if not res.converged or not np.all(np.isfinite(sol)):
        logger.warning(
            f'Bi-CG stopped at |R| = {res.residual_norm:.3e} > {target:.3e} '
            f'after {res.iters} iterations, solving densely'
        )
        sol, R_norm = _dense_step(blocks, rhs)
        fallback = True

    n = fp.dim
    direction = Direction(d_eps, float(sol[0]), sol[1 : 1 + n], sol[1 + n :])
    return StepInfo(direction, res.iters, R_norm, alt_ref_norm, eta, zeta, fallback)


def line_search(
    fp: FoldedProblem,
    it: Iterate,
    delta: Direction,
    cfg: SolverConfig,
    psi0: Optional[float] = None,
) -> LineSearchResult:
    """Smallest l >= 0 with psi(x + rho^l d) <= [1 - 2 sigma (1 - delta) rho^l] psi(x)."""
    if psi0 is None:
        psi0 = evaluate_system(fp, it, cfg.kappa).norm ** 2
    if not psi0 > 0.0:
        raise ValueError('line search needs a positive merit value')
    decrease = 2.0 * cfg.sigma * (1.0 - cfg.delta)
    step = 1.0
    for ell in range(cfg.max_line_search + 1):
        trial = it.moved(delta, step)
        sys = evaluate_system(fp, trial, cfg.kappa)
        psi = float(sys.e_hat @ sys.e_hat)
        if math.isfinite(psi) and psi <= (1.0 - decrease * step) * psi0:
            return LineSearchResult(ell, trial, psi, sys)
        step *= cfg.rho
    raise LineSearchError(
        f'no acceptable step within {cfg.max_line_search} backtracks '
        f'(psi = {psi0:.6g}); the direction is not a descent direction'
    )


def _check_finite(fp: FoldedProblem, sys: SystemEval) -> None:
    if np.all(np.isfinite(sys.e_hat)):
        return
    for name, block in split_blocks(fp, sys.e_hat).items():
        if not np.all(np.isfinite(block)):
            raise SolverError('smoothed system is not finite', block=name)


def solve(
    fp: FoldedProblem,
    cfg: Optional[SolverConfig] = None,
    it0: Optional[Iterate] = None,
) -> SolveReport:
    """Run the smoothing Newton method until |Ê| <= tol or max_outer steps."""
    from .diagnostics import classify

    cfg = cfg or SolverConfig()
    start = time.perf_counter()
    it = it0 if it0 is not None else Iterate.initial(fp, cfg.eps0, cfg.C0)
    sys = evaluate_system(fp, it, cfg.kappa, second_order=True)
    trace: List[TraceRow] = []
    total_bicg = 0
    converged = False

    for k in range(cfg.max_outer + 1):
        _check_finite(fp, sys)
        norm = sys.norm
        if norm <= cfg.tol:
            converged = True
            break
        if k == cfg.max_outer:
            break
        step = newton_step(fp, it, cfg, sys)
        ls = line_search(fp, it, step.direction, cfg, psi0=norm * norm)
        total_bicg += step.bicg_iters
        trace.append(
            TraceRow(
                k=k,
                eps=it.eps,
                C=it.C,
                psi=norm * norm,
                E_hat_norm=norm,
                ell=ls.ell,
                bicg_iters=step.bicg_iters,
                R_norm=step.R_norm,
                alt_ref_norm=step.alt_ref_norm,
                psi_next=ls.psi,
                dense_fallback=step.dense_fallback,
            )
        )
        logger.debug(
            f'k={k} |Ê|={norm:.4e} eps={it.eps:.3e} C={it.C:.6g} '
            f'ell={ls.ell} bicg={step.bicg_iters}'
        )
        it, sys = ls.iterate, ls.sys

    final_norm = sys.norm
    report = SolveReport(
        final=it,
        converged=converged,
        outer_iters=len(trace),
        total_bicg_iters=total_bicg,
        final_norm=final_norm,
        eps_norm=abs(it.eps),
        E_norm=float(np.linalg.norm(sys.E)),
        lambda_star=float(-it.mu @ sys.g),
        trace=trace,
        mode=cfg.jacobian_mode,
    )
    try:
        report.diagnostics = classify(
            fp, it, kappa=cfg.kappa, mode=cfg.mode, converged=converged
        )
    except SolverError as e:
        logger.warning(f'Second-order diagnostics failed: {e}')
    report.wall_time = time.perf_counter() - start

    if converged:
        logger.info(
            f'Converged: k={report.outer_iters} iter={total_bicg} '
            f'C={it.C:.6g} |Ê|={final_norm:.3g}'
        )
    else:
        logger.warning(
            f'No convergence after {report.outer_iters} iterations, |Ê|={final_norm:.3g}'
        )
    return report
