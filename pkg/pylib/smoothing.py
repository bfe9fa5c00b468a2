# -*- coding: utf-8 -*-
# This software is under the MIT License

"""Huber smoothing of the plus function and the smoothed KKT system."""

import math
from dataclasses import dataclass
from typing import Dict, NamedTuple

import numpy as np

from .svc_model import FoldedProblem, ModelEval, evaluate, eval_g, grad_f, grad_g_apply

# Block names of the smoothed system, in stacking order
E_HAT_BLOCKS = ('eps', 'complementarity', 'stationarity', 'lower_level')


@dataclass(frozen=True)
class Iterate:
    """Smoothing Newton state (eps, C, mu, w); mu and w have length T*n."""

    eps: float
    C: float
    mu: np.ndarray
    w: np.ndarray

    @classmethod
    def initial(cls, fp: FoldedProblem, eps0: float = 1.0, C0: float = 1.0) -> 'Iterate':
        return cls(eps=eps0, C=C0, mu=np.zeros(fp.dim), w=np.zeros(fp.dim))

    def moved(self, delta: 'Direction', step: float = 1.0) -> 'Iterate':
        """The iterate plus `step` times a direction."""
        return Iterate(
            eps=self.eps + step * delta.d_eps,
            C=self.C + step * delta.d_C,
            mu=self.mu + step * delta.d_mu,
            w=self.w + step * delta.d_w,
        )

    def lambda_value(self, fp: FoldedProblem) -> float:
        """The eliminated multiplier lambda = -mu^T g(w)."""
        return float(-self.mu @ eval_g(fp, self.w))


class Direction(NamedTuple):
    d_eps: float
    d_C: float
    d_mu: np.ndarray
    d_w: np.ndarray

    def as_vector(self) -> np.ndarray:
        return np.concatenate([[self.d_eps, self.d_C], self.d_mu, self.d_w])

    @classmethod
    def from_vector(cls, v: np.ndarray, dim: int) -> 'Direction':
        v = np.asarray(v, dtype=float)
        return cls(float(v[0]), float(v[1]), v[2 : 2 + dim].copy(), v[2 + dim :].copy())

    @classmethod
    def zero(cls, dim: int) -> 'Direction':
        return cls(0.0, 0.0, np.zeros(dim), np.zeros(dim))


class HuberEval(NamedTuple):
    """h(eps, t) with its partial derivatives h1 (eps) and h2 (t)."""

    value: float
    d_eps: float
    d_t: float


def huber(eps: float, t: float) -> HuberEval:
    """Huber smoothing of max(0, t).

    At eps == 0 the generalized derivatives are taken as h2 = 1 for t > 0
    and 0 otherwise, h1 = -1/2 for t > 0 and 0 otherwise.
    """
    eps, t = float(eps), float(t)
    a = abs(eps)
    if a == 0.0:
        if t > 0.0:
            return HuberEval(t, -0.5, 1.0)
        return HuberEval(0.0, 0.0, 0.0)
    sign = math.copysign(1.0, eps)
    if t > a:
        return HuberEval(t - 0.5 * a, -0.5 * sign, 1.0)
    if t >= 0.0:
        return HuberEval(t * t / (2.0 * a), -sign * t * t / (2.0 * a * a), t / a)
    return HuberEval(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class SystemEval:
    """Everything the smoothed system and its Jacobian share at one iterate."""

    it: Iterate
    kappa: float
    ev: ModelEval
    g: np.ndarray
    grad_f: np.ndarray
    dg_mu: np.ndarray  # grad g(w) mu
    t: float  # C - mu^T g(w)
    hub: HuberEval
    e_hat: np.ndarray

    @property
    def E(self) -> np.ndarray:
        """Ê without its leading eps component."""
        return self.e_hat[1:]

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.e_hat))


def evaluate_system(
    fp: FoldedProblem, it: Iterate, kappa: float, second_order: bool = False
) -> SystemEval:
    ev = evaluate(fp, it.w, second_order=second_order)
    g = eval_g(fp, it.w, ev)
    gf = grad_f(fp, it.w, ev)
    dg_mu = grad_g_apply(fp, it.w, it.mu, ev)
    t = it.C - float(it.mu @ g)
    hub = huber(it.eps, t)
    e_hat = np.concatenate(
        [
            [it.eps, (1.0 + kappa * abs(it.eps)) * it.C - hub.value],
            gf / (fp.T * fp.m1) + it.mu + it.C * dg_mu,
            it.w + it.C * g,
        ]
    )
    return SystemEval(
        it=it, kappa=kappa, ev=ev, g=g, grad_f=gf, dg_mu=dg_mu, t=t, hub=hub, e_hat=e_hat
    )


def residual_K(fp: FoldedProblem, C: float, mu: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Nonsmooth KKT residual, length 2*T*n + 1."""
    ev = evaluate(fp, w)
    g = eval_g(fp, w, ev)
    return np.concatenate(
        [
            [C - max(C - float(mu @ g), 0.0)],
            grad_f(fp, w, ev) / (fp.T * fp.m1) + mu + C * grad_g_apply(fp, w, mu, ev),
            w + C * g,
        ]
    )


def E_hat(fp: FoldedProblem, it: Iterate, kappa: float) -> np.ndarray:
    """Smoothed system [eps; E(eps, C, mu, w)], length 2*T*n + 2."""
    if kappa <= 0.0:
        raise ValueError(f'kappa must be positive, got {kappa}')
    return evaluate_system(fp, it, kappa).e_hat


def merit_psi(fp: FoldedProblem, it: Iterate, kappa: float) -> float:
    """psi = |Ê|^2."""
    e = E_hat(fp, it, kappa)
    return float(e @ e)


def split_blocks(fp: FoldedProblem, e_hat: np.ndarray) -> Dict[str, np.ndarray]:
    """Name the four blocks of a stacked Ê vector."""
    d = fp.dim
    return {
        'eps': e_hat[0:1],
        'complementarity': e_hat[1:2],
        'stationarity': e_hat[2 : 2 + d],
        'lower_level': e_hat[2 + d :],
    }
