"""Worst-case constant chain, Lambert-W machinery, and complexity bounds.

Everything here is diagnostic: given problem/algorithm constants it produces
the chain chi -> kappa_a..kappa_g -> sigma_max and the iteration bound on the
best gradient norm. The optimizer never consults this module.

The chain is supported for any degree p >= 1 even though the optimizer
restricts itself to p in {1, 2}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

_INV_E = math.exp(-1.0)


class LambertDomainError(ValueError):
    pass


def lambert_w(branch: int, x: float, tol: float = 1e-12, max_iter: int = 50) -> float:
    """Real Lambert W: w with w*exp(w) = x on branch 0 or -1.

    Branch 0 uses Halley iteration from series/asymptotic starting points;
    branch -1 solves the equivalent log-form equation, which stays accurate
    down to arguments that underflow exp. Residual |w e^w - x| is within
    tol*max(1, |x|) on return (and far tighter in relative terms).
    """
    if branch not in (0, -1):
        raise LambertDomainError(f"branch must be 0 or -1, got {branch}")
    if x < -_INV_E - 1e-15:
        raise LambertDomainError(f"x = {x} below the branch point -1/e")
    x = max(x, -_INV_E)
    if x == -_INV_E:
        return -1.0
    if branch == -1:
        if x >= 0.0:
            raise LambertDomainError("branch -1 requires -1/e <= x < 0")
        return lambert_w_m1_neg_exp(-math.log(-x))
    if x == 0.0:
        return 0.0
    if abs(x) < 1e-4:
        # series around 0; relative error O(x^4) then one Halley polish
        w = x * (1.0 - x + 1.5 * x * x - (8.0 / 3.0) * x ** 3)
    elif x < 0.5:
        w = math.sqrt(2.0 * (math.e * x + 1.0)) - 1.0  # branch-point expansion
    else:
        lx = math.log(x)
        w = lx - (math.log(lx) if lx > 1.0 else 0.0)
    for _ in range(max_iter):
        ew = math.exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        step = f / denom
        w_new = max(w - step, -1.0)
        converged = abs(w_new - w) <= 1e-15 * max(1.0, abs(w))
        w = w_new
        if converged or abs(f) == 0.0:
            return w
    if abs(w * math.exp(w) - x) <= tol * max(1.0, abs(x)):
        return w
    raise LambertDomainError(f"Halley iteration failed to converge for x={x}, branch 0")


def lambert_w_m1_neg_exp(y: float) -> float:
    """W_{-1}(-e^{-y}) for y >= 1, stable for arguments that underflow exp.

    Solves log(-w) + w + y = 0 on w <= -1; the left side is strictly
    increasing there, so safeguarded Newton converges from the asymptotic
    start w ~ -(y + log y).
    """
    if y < 1.0:
        raise LambertDomainError("requires y >= 1 so that -e^{-y} >= -1/e")
    if y == 1.0:
        return -1.0
    lo = -(y + math.log(y) + 2.0)  # F(lo) < 0
    hi = -1.0                      # F(hi) = y - 1 > 0
    w = -y - math.log(y) if y > 2.0 else -1.0 - math.sqrt(2.0 * (y - 1.0))
    w = min(max(w, lo), -1.0)
    for _ in range(200):
        f = math.log(-w) + w + y
        if f > 0.0:
            hi = w
        else:
            lo = w
        fp = 1.0 / w + 1.0
        w_new = w - f / fp if fp != 0.0 else 0.5 * (lo + hi)
        if not (lo < w_new < hi):
            w_new = 0.5 * (lo + hi)
        if abs(w_new - w) <= 1e-15 * abs(w):
            return w_new
        w = w_new
    return w


def solve_log_linear(gamma1: float, gamma2: float, gamma3: float):
    """Both roots 0 < u1 < u2 of gamma1*log(u) + gamma2*u + gamma3 = 0.

    Requires gamma1 > 0, gamma2 < 0, gamma3 >= 0 and gamma2/gamma1 >= -1/3.
    """
    if gamma1 <= 0 or gamma2 >= 0 or gamma3 < 0:
        raise ValueError("need gamma1 > 0, gamma2 < 0, gamma3 >= 0")
    ratio = gamma2 / gamma1
    if ratio < -1.0 / 3.0 - 1e-15:
        raise ValueError(f"hypothesis gamma2/gamma1 >= -1/3 violated ({ratio})")
    a = ratio * math.exp(-gamma3 / gamma1)
    u1 = gamma1 / gamma2 * lambert_w(0, a)
    u2 = gamma1 / gamma2 * lambert_w(-1, a)
    return u1, u2


@dataclass
class TheoryParams:
    p: int = 2
    L_p: float = 3.0
    kappaD: float = 0.0
    sigma0: float = 1.0
    theta1: float = 2.0
    m: int = 1
    kappa_high: float = 0.0
    Gamma0: float = 1.0  # f(x0) - f_low (realized for deterministic starts)
    E_g0: float = 1.0    # ||g(x0)||^((p+1)/p)

    def __post_init__(self):
        if self.p < 1 or self.m < 1:
            raise ValueError("need p >= 1 and m >= 1")
        if self.L_p < 3:
            raise ValueError("L_p >= 3 required; floor the computed constant")
        if self.sigma0 <= 0 or self.theta1 <= 1:
            raise ValueError("need sigma0 > 0 and theta1 > 1")
        if min(self.kappaD, self.kappa_high, self.Gamma0, self.E_g0) < 0:
            raise ValueError("kappaD, kappa_high, Gamma0, E_g0 must be nonnegative")


@dataclass
class ConstantChain:
    chi1: float
    chi2: float
    chi3: float
    chi4: float
    kappa_p: float
    kappa_a: float
    kappa_b: float
    kappa_c: float
    kappa_d: float
    kappa_e: float
    kappa_f: float
    kappa_g: float
    eta: float
    sigma_max: float
    sigma_max_explicit: float  # closed-form upper bound on sigma_max


def chi_constants(p: int):
    """(chi1, chi2, chi3, chi4, kappa_p); empty sums vanish for p = 1."""
    if p < 1:
        raise ValueError("p >= 1 required")
    q = (p + 1) / p
    chi1 = sum(i / (math.factorial(i) * (p + 1)) for i in range(1, p + 1))
    chi2 = sum((p + i - 1) / (math.factorial(i) * (p + 1)) for i in range(1, p + 1))
    chi3 = sum(((i - 1) / (math.factorial(i - 1) * p)) ** q for i in range(2, p + 1))
    chi4 = 1.0 + sum(((p - i + 1) / (math.factorial(i - 1) * p)) ** q for i in range(2, p + 1))
    kappa_p = (2.0 * p) ** (1.0 / p)
    return chi1, chi2, chi3, chi4, kappa_p


def _eta(p: int, kappa_high: float, sigma0: float) -> float:
    if p == 1 or kappa_high == 0.0:
        return 0.0
    return max(
        (kappa_high * math.factorial(p + 1) / (math.factorial(i) * sigma0))
        ** (1.0 / (p - i + 1))
        for i in range(2, p + 1)
    )


def kappa_chain(tp: TheoryParams) -> ConstantChain:
    p, L, kD, s0, th, m = tp.p, tp.L_p, tp.kappaD, tp.sigma0, tp.theta1, tp.m
    q = (p + 1) / p
    fac_p = math.factorial(p)
    fac_p1 = math.factorial(p + 1)
    chi1, chi2, chi3, chi4, kappa_p = chi_constants(p)
    ka = L / fac_p1 + chi1
    kb = kappa_p * (L / fac_p) ** q + chi3
    kc = 2.0 ** (1.0 / p) / s0 ** q * (kb + th ** q / fac_p ** q * s0 ** q)
    kd = 2.0 ** ((m * p + 1.0) / p) * kappa_p * kD * chi4 / s0 ** q
    eta = _eta(p, tp.kappa_high, s0)
    ls0 = math.log(s0)
    two_p1 = 2.0 ** (p + 1)
    lead = two_p1 * fac_p1 ** q
    ke = lead * (
        2.0 ** (1.0 / p) * (kD / s0 ** q + tp.E_g0 / s0 ** q)
        + 2.0 ** (1.0 / p) * kd * (math.log(2.0) * (m + 1) / 2.0 - ls0)
        - 2.0 ** (1.0 / p) * kc * ls0
        + kD * 2.0 ** ((m * p + 2.0) / p) * m / s0 ** q
        * (math.log(2.0) * (m - 1) / 2.0 - ls0)
    ) - (1.0 + two_p1 * eta ** (p + 1)) * ls0
    kf = (1.0 + two_p1 * eta ** (p + 1)
          + lead / s0 ** q * (kD * 2.0 ** ((m * p + 2.0) / p) * m
                              + 2.0 ** ((m * p + 2.0) / p) * chi4 * kD * kappa_p * m
                              + 2.0 ** (2.0 / p) * kc))
    gamma1 = ka * kf + kD * chi2 * kf
    gamma3 = tp.Gamma0 + s0 / fac_p1 + ka * ke + kD * chi2 * (1.0 + ke)
    if gamma3 < 0:
        raise ValueError(
            f"gamma3 = {gamma3} < 0 (kappa_e too negative for these parameters); "
            "the log-linear root hypothesis fails")
    kg = gamma3 / gamma1
    y = kg + math.log(fac_p1 * gamma1)
    if y < 1.0:
        raise ValueError(f"W_-1 argument out of range: kg + log((p+1)! gamma1) = {y} < 1")
    smax = -fac_p1 * gamma1 * lambert_w_m1_neg_exp(y)
    explicit = fac_p1 * gamma1 * (y + math.sqrt(2.0 * (y - 1.0)))
    return ConstantChain(chi1=chi1, chi2=chi2, chi3=chi3, chi4=chi4, kappa_p=kappa_p,
                         kappa_a=ka, kappa_b=kb, kappa_c=kc, kappa_d=kd, kappa_e=ke,
                         kappa_f=kf, kappa_g=kg, eta=eta, sigma_max=smax,
                         sigma_max_explicit=explicit)


def sigma_max(tp: TheoryParams):
    """(sigma_max, explicit upper bound) for the regularization-weight sequence."""
    chain = kappa_chain(tp)
    return chain.sigma_max, chain.sigma_max_explicit


def complexity_bound(tp: TheoryParams, k: int) -> float:
    """Bound on min over j <= k of E||g_{j+1}|| after k+1 iterations."""
    if k < 0:
        raise ValueError("k >= 0 required")
    chain = kappa_chain(tp)
    expo = tp.p / (tp.p + 1.0)
    return (chain.kappa_c + chain.kappa_d * tp.m) ** expo * chain.sigma_max \
        / (k + 1.0) ** expo


def corollary_constant(tp: TheoryParams) -> float:
    """Closed-form constant of the degree-specific bound (p in {1,2} only).

    The bound reads constant * sigma_max / (sigma0 * (k+1)^(p/(p+1))).
    """
    L, th, s0, m, kD = tp.L_p, tp.theta1, tp.sigma0, tp.m, tp.kappaD
    if tp.p == 1:
        return math.sqrt(4.0 * L ** 2 + 2.0 * th ** 2 * s0 ** 2 + 2.0 ** (m + 2) * kD * m)
    if tp.p == 2:
        bracket = (L ** 1.5 / math.sqrt(2.0) + math.sqrt(2.0) / 2.0
                   + th ** 1.5 / 2.0 ** 1.5 + 2.0 ** (m - 1) * (4.0 + math.sqrt(2.0)) * kD * m)
        return (2.0 * bracket ** 2) ** (1.0 / 3.0)
    raise ValueError("closed-form constants are stated for p in {1, 2} only")
