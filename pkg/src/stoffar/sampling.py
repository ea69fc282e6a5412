"""Batch-size schedules, finite-sum derivative estimators, and moment validators.

Schedules map the step-history budget xi to gradient/Hessian batch sizes:

* 'theorem42'        the noise-level-based lower bounds
                     b_g >= sigma_g^2 / (kD^(4/3) xi^(4/3)),
                     b_H >= 9 sigma_H^2 e log(n) / (2 kD^(2/3) xi^(2/3));
* 'paper_practical'  b_g = max(c_g/xi^(4/3), 0.20 N), b_H = max(c_H/xi^(2/3), 0.05 N)
                     with c_g = b_g0 m^(4/3), c_H = b_H0 m^(2/3)/log(n);
* 'wngrad_practical' degree-1 rule b_g = max(0.05 N, 0.1/||s_prev||^2);
* 'fixed' / 'exact'  constant or full batches.

Estimators are two-phase (gradient first, Hessian only if the run continues)
so a terminal stop never pays for an unused Hessian batch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DerivativeEstimate
from .objectives import eda_perturb


class ExactEvaluationRequired(ValueError):
    """Signalled when xi = 0 or kappaD = 0 makes the theory bound infinite."""


def _ceil_clamp(v: float, N: int) -> int:
    return max(1, min(N, int(math.ceil(v))))


def batch_size_gradient_theory(kappaD: float, sigma_g: float, xi: float, N: int) -> int:
    if kappaD <= 0 or xi <= 0:
        raise ExactEvaluationRequired("kappaD and xi must be positive; use exact evaluation")
    return _ceil_clamp(sigma_g ** 2 / (kappaD ** (4.0 / 3.0) * xi ** (4.0 / 3.0)), N)


def batch_size_hessian_theory(kappaD: float, sigma_H: float, xi: float, n: int, N: int) -> int:
    if n < 2:
        raise ValueError("dimension n >= 2 required by the matrix concentration bound")
    if kappaD <= 0 or xi <= 0:
        raise ExactEvaluationRequired("kappaD and xi must be positive; use exact evaluation")
    bound = 9.0 * sigma_H ** 2 * math.e * math.log(n) / (2.0 * kappaD ** (2.0 / 3.0) * xi ** (2.0 / 3.0))
    return _ceil_clamp(bound, N)


def batch_size_practical(k: int, xi: float, N: int, n: int, m: int,
                         b_g0: int | None = None, b_h0: int | None = None,
                         floor_g_frac: float = 0.20, floor_H_frac: float = 0.05):
    """(b_g, b_H) for iteration k; k = 0 returns the initial fractions."""
    floor_g = math.ceil(floor_g_frac * N)
    floor_h = math.ceil(floor_H_frac * N)
    if k == 0:
        return _ceil_clamp(floor_g, N), _ceil_clamp(floor_h, N)
    b_g0 = floor_g if b_g0 is None else b_g0
    b_h0 = floor_h if b_h0 is None else b_h0
    c_g = b_g0 * m ** (4.0 / 3.0)
    c_h = b_h0 * m ** (2.0 / 3.0) / math.log(n)
    if xi <= 0:
        return N, N
    b_g = max(c_g / xi ** (4.0 / 3.0), floor_g_frac * N)
    b_h = max(c_h / xi ** (2.0 / 3.0), floor_H_frac * N)
    return _ceil_clamp(b_g, N), _ceil_clamp(b_h, N)


def batch_size_wngrad(prev_step_norm: float, N: int, k: int = 1) -> int:
    if k == 0:
        return _ceil_clamp(0.05 * N, N)
    if prev_step_norm == 0.0:
        return N
    return _ceil_clamp(max(0.05 * N, 0.1 / prev_step_norm ** 2), N)


@dataclass
class BatchSchedule:
    kind: str = "paper_practical"
    kappaD: float = 0.0
    sigma_g: float = 0.0
    sigma_H: float = 0.0
    c_g: float = 0.0   # informational; derived from b_g0 and m when 0
    c_H: float = 0.0
    floor_g_frac: float = 0.20
    floor_H_frac: float = 0.05
    replacement: bool = False
    b_g0: int | None = None
    b_h0: int | None = None
    fixed_g: int = 1
    fixed_h: int = 1

    def __post_init__(self):
        kinds = ("theorem42", "paper_practical", "wngrad_practical", "fixed", "exact")
        if self.kind not in kinds:
            raise ValueError(f"schedule kind must be one of {kinds}")
        if not (0 < self.floor_g_frac <= 1 and 0 < self.floor_H_frac <= 1):
            raise ValueError("floor fractions must lie in (0, 1]")


def draw_batch(N: int, size: int, replacement: bool, rng) -> np.ndarray:
    """Sorted index draw; full batch without replacement is exactly arange(N)."""
    if not 1 <= size <= N:
        raise ValueError(f"batch size {size} outside [1, {N}]")
    if replacement:
        idx = rng.integers(0, N, size=size)
    elif size == N:
        idx = np.arange(N)
    else:
        idx = rng.choice(N, size=size, replace=False)
    return np.sort(idx).astype(np.int64)


@dataclass
class SampledEstimate:
    estimate: DerivativeEstimate
    rows_g: np.ndarray
    rows_h: np.ndarray | None


def sample_estimate(problem, x, b_g: int, b_h: int, replacement: bool, rng) -> SampledEstimate:
    """Subsampled derivative estimate; counters charged at draw and per use."""
    rows_g = draw_batch(problem.N, b_g, replacement, rng)
    g = problem.batch_gradient(x, rows_g)
    problem.counters.samples_drawn += b_g
    rows_h = None
    H = None
    if b_h > 0:
        rows_h = draw_batch(problem.N, b_h, replacement, rng)
        H = problem.batch_hessian_operator(x, rows_h)
        problem.counters.samples_drawn += b_h
    exact = (not replacement) and b_g == problem.N and (b_h in (0, problem.N))
    est = DerivativeEstimate(gradient=g, hessian=H, batch_g=b_g, batch_h=b_h, exact=exact)
    return SampledEstimate(estimate=est, rows_g=rows_g, rows_h=rows_h)


# ---------------------------------------------------------------------------
# estimators: the optimizer-facing two-phase protocol
# ---------------------------------------------------------------------------

class ExactEstimator:
    """Full-information derivatives (kappaD = 0 path); works on any problem."""

    def __init__(self, p: int):
        self.p = p

    def gradient(self, problem, x, k, history, rng):
        b = getattr(problem, "N", 1)
        g = problem.exact_gradient(x)
        problem.counters.samples_drawn += b
        return g, b

    def hessian(self, problem, x, k, history, rng):
        b = getattr(problem, "N", 1)
        H = problem.exact_hessian_operator(x)
        problem.counters.samples_drawn += b
        return H, b


class SampledEstimator:
    """Finite-sum subsampling driven by a BatchSchedule."""

    def __init__(self, p: int, schedule: BatchSchedule):
        self.p = p
        self.schedule = schedule

    def _size_g(self, problem, k, history):
        sc = self.schedule
        N = problem.N
        if sc.kind == "exact":
            return N
        if sc.kind == "fixed":
            return min(sc.fixed_g, N)
        if sc.kind == "wngrad_practical":
            return batch_size_wngrad(history.last_norm(), N, k)
        xi = history.xi()
        if sc.kind == "theorem42":
            return batch_size_gradient_theory(sc.kappaD, sc.sigma_g, xi, N)
        return batch_size_practical(k, xi, N, problem.n, history.m,
                                    sc.b_g0, sc.b_h0, sc.floor_g_frac, sc.floor_H_frac)[0]

    def _size_h(self, problem, k, history):
        sc = self.schedule
        N = problem.N
        if sc.kind == "exact":
            return N
        if sc.kind == "fixed":
            return min(sc.fixed_h, N)
        if sc.kind == "wngrad_practical":
            raise ValueError("the degree-1 schedule draws no Hessian batches")
        xi = history.xi()
        if sc.kind == "theorem42":
            return batch_size_hessian_theory(sc.kappaD, sc.sigma_H, xi, problem.n, N)
        return batch_size_practical(k, xi, N, problem.n, history.m,
                                    sc.b_g0, sc.b_h0, sc.floor_g_frac, sc.floor_H_frac)[1]

    def gradient(self, problem, x, k, history, rng):
        b = self._size_g(problem, k, history)
        rows = draw_batch(problem.N, b, self.schedule.replacement, rng)
        g = problem.batch_gradient(x, rows)
        problem.counters.samples_drawn += b
        return g, b

    def hessian(self, problem, x, k, history, rng):
        b = self._size_h(problem, k, history)
        rows = draw_batch(problem.N, b, self.schedule.replacement, rng)
        H = problem.batch_hessian_operator(x, rows)
        problem.counters.samples_drawn += b
        return H, b


class EdaEstimator:
    """Exact derivatives perturbed within the explicit per-iteration budgets."""

    def __init__(self, p: int, kappaD: float, mode: str = "boundary"):
        self.p = p
        self.kappaD = kappaD
        self.mode = mode
        self._exact = ExactEstimator(p)

    def gradient(self, problem, x, k, history, rng):
        g, b = self._exact.gradient(problem, x, k, history, rng)
        est = DerivativeEstimate(gradient=g, batch_g=b, exact=True)
        out = eda_perturb(est, history, self.kappaD, self.mode, rng)
        return out.gradient, b

    def hessian(self, problem, x, k, history, rng):
        H, b = self._exact.hessian(problem, x, k, history, rng)
        est = DerivativeEstimate(gradient=np.zeros(problem.n), hessian=H,
                                 batch_h=b, exact=True)
        out = eda_perturb(est, history, self.kappaD, self.mode, rng)
        return out.hessian, b


# ---------------------------------------------------------------------------
# Monte-Carlo validation of the moment inequalities behind the schedules
# ---------------------------------------------------------------------------

@dataclass
class MomentReport:
    empirical: float
    stderr: float
    bound: float

    @property
    def passed(self) -> bool:
        return self.empirical <= self.bound + 3.0 * self.stderr

    @property
    def margin(self) -> float:
        return self.bound + 3.0 * self.stderr - self.empirical


def validate_vector_moment(draw, N: int, second_moment: float, trials: int, seed=0) -> MomentReport:
    """Check E||mean of N i.i.d. zero-mean vectors||^(3/2) <= (E||z||^2)^(3/4)/N^(3/4).

    ``draw(rng, N)`` must return an (N, n) array of i.i.d. zero-mean rows with
    E||row||^2 = second_moment.
    """
    rng = np.random.default_rng(seed)
    vals = np.empty(trials)
    for t in range(trials):
        z = draw(rng, N)
        vals[t] = np.linalg.norm(z.mean(axis=0)) ** 1.5
    bound = second_moment ** 0.75 / N ** 0.75
    return MomentReport(empirical=float(vals.mean()),
                        stderr=float(vals.std(ddof=1) / math.sqrt(trials)),
                        bound=bound)


def validate_matrix_moment(draw, N: int, n: int, variance_norm: float,
                           third_moment_max: float, trials: int, seed=0) -> MomentReport:
    """Check the cubed spectral-norm bound for sums of i.i.d. symmetric matrices.

    ``draw(rng, N)`` returns (N, n, n) symmetric zero-mean samples Y_i;
    variance_norm = ||(sum E Y_i^2)^(1/2)|| and third_moment_max bounds
    (E max_i ||Y_i||^3)^(1/3). The reference inequality (q = 3,
    r = max(3, 2 log n), n >= 2):
        E[||sum Y_i||^3]^(1/3) <= 2 sqrt(e r) * variance_norm + 4 e r * third_moment_max
    """
    if n < 2:
        raise ValueError("n >= 2 required")
    rng = np.random.default_rng(seed)
    r = max(3.0, 2.0 * math.log(n))
    vals = np.empty(trials)
    for t in range(trials):
        Y = draw(rng, N)
        s = Y.sum(axis=0)
        vals[t] = np.max(np.abs(np.linalg.eigvalsh(s))) ** 3
    bound = (2.0 * math.sqrt(math.e * r) * variance_norm + 4.0 * math.e * r * third_moment_max) ** 3
    return MomentReport(empirical=float(vals.mean()),
                        stderr=float(vals.std(ddof=1) / math.sqrt(trials)),
                        bound=bound)


def kappa_d_gradient_equivalent(sigma_g: float, b_g0: int, m: int) -> float:
    """Diagnostic back-out of the error level implied by an initial batch size."""
    return sigma_g ** 1.5 / (b_g0 ** 0.75 * m)


def kappa_d_hessian_equivalent(sigma_H: float, b_h0: int, n: int, m: int) -> float:
    return (9.0 * math.e) ** 1.5 * (math.log(n) * sigma_H) ** (1.0 / 3.0) \
        / ((2.0 * b_h0) ** 1.5 * m)
