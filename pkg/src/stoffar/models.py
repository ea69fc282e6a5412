"""Regularized truncated-Taylor model and the two step-acceptance predicates.

The model value is only ever needed relative to the origin, so the constant
term cancels and is never represented: for degree p with gradient g,
curvature H (p=2 only) and regularization weight sigma,

    delta(s) = g's + (p=2: s'Hs/2) + sigma/(p+1)! * ||s||^(p+1).

A step is acceptable when delta(s) <= 0 (simple decrease) and the gradient
of the unregularized Taylor polynomial at s is below theta1*sigma/p!*||s||^p.
Both predicates get a 1e-10 relative slack for floating-point noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import HessianOperator, norm

TOL_CHECK = 1e-10


@dataclass
class RegularizedModel:
    p: int
    g: np.ndarray
    H: HessianOperator | None
    sigma: float

    def __post_init__(self):
        if self.p not in (1, 2):
            raise ValueError(f"model degree must be 1 or 2, got {self.p}")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if (self.H is not None) != (self.p == 2):
            raise ValueError("Hessian must be present exactly when p=2")


@dataclass
class StepCheckReport:
    model_delta: float
    taylor_grad_norm: float
    threshold: float
    decrease_ok: bool
    grad_ok: bool

    @property
    def ok(self) -> bool:
        return self.decrease_ok and self.grad_ok


def model_delta(M: RegularizedModel, s: np.ndarray, Hs: np.ndarray | None = None) -> float:
    """m(s) - m(0). Pass a precomputed Hs to avoid a redundant HVP."""
    sn = norm(s)
    val = float(M.g @ s) + M.sigma / math.factorial(M.p + 1) * sn ** (M.p + 1)
    if M.p == 2:
        if Hs is None:
            Hs = M.H(s)
        val += 0.5 * float(s @ Hs)
    return val


def taylor_gradient(M: RegularizedModel, s: np.ndarray, Hs: np.ndarray | None = None) -> np.ndarray:
    """Gradient of the unregularized degree-p Taylor polynomial at s."""
    if M.p == 1:
        return M.g.copy()
    if Hs is None:
        Hs = M.H(s)
    return M.g + Hs


def check_step(M: RegularizedModel, s: np.ndarray, theta1: float,
               Hs: np.ndarray | None = None) -> StepCheckReport:
    if theta1 <= 1:
        raise ValueError("theta1 must exceed 1")
    if M.p == 2 and Hs is None:
        Hs = M.H(s)
    delta = model_delta(M, s, Hs=Hs)
    tg = norm(taylor_gradient(M, s, Hs=Hs))
    sn = norm(s)
    threshold = theta1 * M.sigma / math.factorial(M.p) * sn ** M.p
    # relative slack: scale by the magnitudes entering delta
    scale = 1.0 + abs(float(M.g @ s)) + M.sigma / math.factorial(M.p + 1) * sn ** (M.p + 1)
    if M.p == 2:
        scale += 0.5 * abs(float(s @ Hs))
    decrease_ok = delta <= TOL_CHECK * scale
    grad_ok = tg <= threshold * (1.0 + TOL_CHECK) + TOL_CHECK * norm(M.g)
    return StepCheckReport(model_delta=delta, taylor_grad_norm=tg,
                           threshold=threshold, decrease_ok=decrease_ok, grad_ok=grad_ok)
