"""Step computation for the regularized model, plus the polynomial-root step bound.

Three solvers share one contract (both acceptance predicates hold on return):

* ``solve_p1``           closed form -g/sigma for degree 1;
* ``solve_exact_secular``  dense eigendecomposition + scalar secular equation
                         (H + lam I)s = -g with lam = sigma*||s||/2, H + lam I psd,
                         including the hard case via a boundary eigenvector;
* ``solve_matrix_free``  Lanczos expansion starting from the Cauchy subspace,
                         re-testing the acceptance predicates per expansion,
                         HVP access only.

``lagrange_step_bound`` is the verification oracle bounding ||s|| from the
Lagrange bound on positive polynomial roots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .core import HessianOperator, norm
from .models import RegularizedModel, StepCheckReport, check_step

N_DENSE_MAX = 500


class SubproblemError(RuntimeError):
    """Raised when no acceptable step is found within budget.

    Carries the best iterate and its check report; signals sigma too small
    relative to curvature or a solver defect.
    """

    def __init__(self, msg, s=None, report=None):
        super().__init__(msg)
        self.s = s
        self.report = report


@dataclass
class SolverConfig:
    method: str = "matrix_free"  # closed_form_p1 | exact_secular | matrix_free
    theta1: float = 2.0
    max_inner_iters: int = 0  # 0: full space
    krylov_tol: float = 1e-9  # model-gradient residual target, relative to max(1, ||g||)
    secular_tol: float = 1e-10

    def __post_init__(self):
        if self.theta1 <= 1:
            raise ValueError("theta1 must exceed 1")
        if self.krylov_tol < 0 or self.secular_tol <= 0:
            raise ValueError("tolerances must be positive")


@dataclass
class StepResult:
    s: np.ndarray
    hvp_count: int
    inner_iters: int
    report: StepCheckReport
    Hs: np.ndarray | None = None  # curvature action at the returned step
    lam: float = 0.0


def solve_p1(g: np.ndarray, sigma: float, theta1: float = 2.0) -> StepResult:
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    s = -g / sigma
    M = RegularizedModel(p=1, g=g, H=None, sigma=sigma)
    report = check_step(M, s, theta1)
    return StepResult(s=s, hvp_count=0, inner_iters=0, report=report)


def _secular_root(lam: np.ndarray, ghat: np.ndarray, sigma: float):
    """Multiplier lam* >= max(0, -lam_min) with ||s(lam*)|| = 2 lam*/sigma.

    Returns (lamstar, shat, boundary_t) where shat_i = -ghat_i/(lam_i+lamstar)
    and boundary_t is the extra leading-eigenvector weight in the hard case.
    Gradient mass below 1e-13 (relative) on the critical eigenspace is zeroed
    out, resolving the near-hard case within the solver's residual tolerance.
    """
    lam_min = lam[0]
    lo = max(0.0, -lam_min)
    gh = ghat
    crit = (lam + lo) == 0.0
    gnorm = float(np.linalg.norm(ghat))
    if crit.any():
        crit_mass = float(np.linalg.norm(ghat[crit]))
        if crit_mass <= 1e-13 * max(1.0, gnorm):
            gh = ghat.copy()
            gh[crit] = 0.0

    def snorm(lmb):
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = (gh / (lam + lmb)) ** 2
        terms = np.where((gh == 0.0) & ~np.isfinite(terms), 0.0, terms)
        return math.sqrt(float(np.sum(terms)))

    def phi(lmb):
        return 0.5 * sigma * snorm(lmb) - lmb

    def shat_at(lmb):
        with np.errstate(divide="ignore", invalid="ignore"):
            s = -gh / (lam + lmb)
        return np.where((gh == 0.0) & ~np.isfinite(s), 0.0, s)

    if float(np.linalg.norm(gh)) == 0.0:
        if lam_min >= 0.0:
            return 0.0, np.zeros_like(gh), 0.0
        return lo, np.zeros_like(gh), 2.0 * lo / sigma

    # boundary / hard case: bounded phi at lo already nonpositive
    phi_lo = phi(lo)
    if np.isfinite(phi_lo) and phi_lo <= 0.0:
        sn2 = snorm(lo) ** 2
        t = math.sqrt(max(0.0, (2.0 * lo / sigma) ** 2 - sn2))
        return lo, shat_at(lo), t

    # interior root: bracket then solve; phi is strictly decreasing
    a = lo
    if not np.isfinite(phi_lo):
        delta = max(1e-8, 1e-8 * max(1.0, lo))
        while not (np.isfinite(phi(lo + delta)) and phi(lo + delta) > 0.0):
            delta *= 0.5
            if delta < 1e-300:  # unreachable after critical-mass cleaning
                raise SubproblemError("secular bracketing failed at the boundary")
        a = lo + delta
    b = max(1.0, 2.0 * a, 0.5 * sigma * gnorm)
    while phi(b) > 0.0:
        b *= 2.0
    lamstar = brentq(phi, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    return float(lamstar), shat_at(float(lamstar)), 0.0


def _dense_cubic_min(H: np.ndarray, g: np.ndarray, sigma: float):
    """Global minimizer of g's + s'Hs/2 + sigma/6*||s||^3 for dense symmetric H."""
    try:
        lam, V = np.linalg.eigh(H)
    except np.linalg.LinAlgError as exc:
        raise SubproblemError(f"eigendecomposition failed: {exc}") from exc
    ghat = V.T @ g
    lamstar, shat, t = _secular_root(lam, ghat, sigma)
    s = V @ shat
    if t != 0.0:
        s = s + t * V[:, 0]
    return s, lamstar


def solve_exact_secular(g: np.ndarray, H: HessianOperator, sigma: float,
                        cfg: SolverConfig) -> StepResult:
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if H.n > N_DENSE_MAX:
        raise SubproblemError(f"dense secular solver limited to n <= {N_DENSE_MAX}, got {H.n}")
    Hd = H.to_dense()
    s, lamstar = _dense_cubic_min(Hd, g, sigma)
    Hs = Hd @ s
    M = RegularizedModel(p=2, g=g, H=H, sigma=sigma)
    report = check_step(M, s, cfg.theta1, Hs=Hs)
    grad_model = norm(g + Hs + 0.5 * sigma * norm(s) * s)
    if grad_model > cfg.secular_tol * max(1.0, norm(g)):
        raise SubproblemError(
            f"secular solve stalled: ||grad m|| = {grad_model:.3e}", s=s, report=report)
    if not report.ok:
        raise SubproblemError("exact secular step failed the acceptance checks",
                              s=s, report=report)
    # dense factorization priced as n HVP-equivalents
    return StepResult(s=s, hvp_count=H.n, inner_iters=1, report=report, Hs=Hs, lam=lamstar)


def solve_matrix_free(g: np.ndarray, H: HessianOperator, sigma: float,
                      cfg: SolverConfig) -> StepResult:
    """Lanczos-subspace solves until the model gradient residual is below
    krylov_tol * max(1, ||g||); the residual needs no extra HVPs because
    ||grad m(s)|| = hypot(in-subspace part, beta_k * u_k) in exact arithmetic.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    n = H.n
    M = RegularizedModel(p=2, g=g, H=H, sigma=sigma)
    gnorm = norm(g)
    if gnorm == 0.0:
        report = check_step(M, np.zeros(n), cfg.theta1, Hs=np.zeros(n))
        return StepResult(s=np.zeros(n), hvp_count=0, inner_iters=0, report=report,
                          Hs=np.zeros(n))

    budget = cfg.max_inner_iters if cfg.max_inner_iters > 0 else n
    budget = min(budget, n)
    target = cfg.krylov_tol * max(1.0, gnorm)

    Q: list[np.ndarray] = [g / gnorm]
    alphas: list[float] = []
    betas: list[float] = []
    hvps = 0
    best_s, best_report = None, None

    for k in range(budget):
        w = H(Q[k])
        hvps += 1
        alpha = float(Q[k] @ w)
        alphas.append(alpha)
        w = w - alpha * Q[k]
        if k > 0:
            w = w - betas[k - 1] * Q[k - 1]
        for q in Q:  # full reorthogonalization; subspaces stay small
            w = w - (q @ w) * q
        beta = norm(w)

        T = np.diag(alphas)
        if k > 0:
            idx = np.arange(k)
            T[idx, idx + 1] = betas
            T[idx + 1, idx] = betas
        gsub = np.zeros(k + 1)
        gsub[0] = gnorm
        u, _lam = _dense_cubic_min(T, gsub, sigma)
        resid = math.hypot(norm(T @ u + gsub + 0.5 * sigma * norm(u) * u), beta * u[-1])
        breakdown = beta <= 1e-13 * max(1.0, abs(alpha))
        exhausted = (k + 1 == budget)

        if resid <= target or breakdown or exhausted:
            s = np.zeros(n)
            for i, q in enumerate(Q):
                s += u[i] * q
            Hs = H(s)
            hvps += 1
            report = check_step(M, s, cfg.theta1, Hs=Hs)
            if report.ok and (resid <= target or breakdown or exhausted):
                return StepResult(s=s, hvp_count=hvps, inner_iters=k + 1,
                                  report=report, Hs=Hs, lam=_lam)
            best_s, best_report = s, report
            if breakdown or exhausted:
                raise SubproblemError(
                    "matrix-free solver exhausted its subspace budget without an "
                    "acceptable step", s=best_s, report=best_report)
        if beta == 0.0:
            raise SubproblemError("Lanczos breakdown without an acceptable step",
                                  s=best_s, report=best_report)
        betas.append(beta)
        Q.append(w / beta)

    raise SubproblemError("matrix-free budget exhausted", s=best_s, report=best_report)


def lagrange_step_bound(g_norm: float, sigma: float, kappa_high: float,
                        sigma0: float, p: int) -> float:
    """Upper bound on ||s|| from the Lagrange bound on positive polynomial roots."""
    if min(g_norm, kappa_high) < 0 or sigma0 <= 0 or sigma < sigma0:
        raise ValueError("need g_norm, kappa_high >= 0 and sigma >= sigma0 > 0")
    if p == 1 or kappa_high == 0.0:
        eta = 0.0
    else:
        eta = max(
            (kappa_high * math.factorial(p + 1) / (math.factorial(i) * sigma0))
            ** (1.0 / (p - i + 1))
            for i in range(2, p + 1)
        )
    return 2.0 * max(eta, (math.factorial(p + 1) * g_norm / sigma) ** (1.0 / p))
