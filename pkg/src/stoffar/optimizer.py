"""The outer loop: history-driven error budget, regularization update, tracing.

Every step is accepted (x_{k+1} = x_k + s_k) and the regularization weight
only grows, sigma_{k+1} = sigma_k * (1 + ||s_k||^(p+1)). The error budget
xi_k is the sum of the last m values ||s_{k-j}||^(p+1), seeded with the
convention ||s_{-1}|| = ... = ||s_{-m}|| = 1. The run stops when the
*approximate* gradient norm falls below epsilon1 or at max_iters.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .core import as_vector, norm
from .subproblem import SolverConfig, SubproblemError, solve_exact_secular, \
    solve_matrix_free, solve_p1

TRACE_COLUMNS = ("k", "gbar_norm", "g_norm", "sigma", "step_norm", "xi",
                 "b_g", "b_h", "ege", "tau_cum", "model_delta", "wall_ms")


class StepHistory:
    """Ring buffer of the last m step norms (seeded to 1), powering xi."""

    def __init__(self, m: int, p: int):
        if m < 1:
            raise ValueError("memory m >= 1 required")
        self.m = m
        self.p = p
        self._norms = [1.0] * m  # newest last

    def push(self, step_norm: float):
        self._norms.pop(0)
        self._norms.append(float(step_norm))

    def xi(self) -> float:
        return float(sum(v ** (self.p + 1) for v in self._norms))

    def budget(self, i: int) -> float:
        """sum_j ||s_{k-j}||^(p+1-i), the order-i error budget."""
        return float(sum(v ** (self.p + 1 - i) for v in self._norms))

    def last_norm(self) -> float:
        return self._norms[-1]

    def values(self):
        return tuple(self._norms)


def xi(history: StepHistory) -> float:
    return history.xi()


def update_sigma(sigma: float, step_norm: float, p: int) -> float:
    if sigma <= 0 or step_norm < 0:
        raise ValueError("need sigma > 0 and step_norm >= 0")
    return sigma * (1.0 + step_norm ** (p + 1))


def negative_index_sigma(j: int, sigma0: float, m: int) -> float:
    """Pre-history regularization weights sigma_j = sigma0 * 2^j for -m <= j <= -1."""
    if not (-m <= j <= -1):
        raise ValueError(f"j must lie in [{-m}, -1], got {j}")
    return sigma0 * 2.0 ** j


@dataclass
class StoffarConfig:
    p: int = 2
    sigma0: float = 0.01
    theta1: float = 2.0
    epsilon1: float = 5e-4
    memory: int = 1
    max_iters: int = 1000
    solver: SolverConfig = field(default_factory=SolverConfig)
    trace_exact_gradient: bool = False
    x0: np.ndarray | None = None

    def __post_init__(self):
        if self.p not in (1, 2):
            raise ValueError("degree p must be 1 or 2")
        if self.sigma0 <= 0 or self.theta1 <= 1:
            raise ValueError("need sigma0 > 0 and theta1 > 1")
        if not (0 < self.epsilon1 <= 1):
            raise ValueError("epsilon1 must lie in (0, 1]")
        if self.memory < 1 or self.max_iters < 1:
            raise ValueError("memory and max_iters must be >= 1")
        self.solver.theta1 = self.theta1


@dataclass
class IterationRow:
    k: int
    gbar_norm: float
    g_norm: float  # nan when not traced
    sigma: float
    step_norm: float
    xi: float
    b_g: int
    b_h: int
    ege: int
    tau_cum: float
    model_delta: float
    wall_ms: float

    def astuple(self):
        return (self.k, self.gbar_norm, self.g_norm, self.sigma, self.step_norm,
                self.xi, self.b_g, self.b_h, self.ege, self.tau_cum,
                self.model_delta, self.wall_ms)


@dataclass
class RunRecord:
    rows: list[IterationRow] = field(default_factory=list)
    status: str = "max_iters"  # converged | max_iters | solver_failure
    x_final: np.ndarray | None = None
    seed: int | None = None
    counters: dict = field(default_factory=dict)
    checks_passed: bool = True

    @property
    def n_iters(self) -> int:
        return len(self.rows)

    def tau(self) -> float:
        return self.rows[-1].tau_cum if self.rows else 0.0

    def column(self, name: str) -> np.ndarray:
        i = TRACE_COLUMNS.index(name)
        return np.array([r.astuple()[i] for r in self.rows])

    def write_csv(self, fh, header: bool = True):
        """Fixed column order; wall_ms last (measurement metadata, not
        covered by the bitwise determinism contract)."""
        if header:
            fh.write(",".join(TRACE_COLUMNS) + "\n")
        for r in self.rows:
            vals = r.astuple()
            fh.write(",".join(_fmt(v) for v in vals) + "\n")


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    f = float(v)
    if math.isnan(f):
        return "nan"
    return repr(f)


class OptimizerError(RuntimeError):
    """Solver failure inside a run; carries the partial record."""

    def __init__(self, msg, record: RunRecord):
        super().__init__(msg)
        self.record = record


def run(problem, estimator, cfg: StoffarConfig, seed: int = 0, callback=None) -> RunRecord:
    """Execute one optimization run; returns a complete per-iteration trace.

    ``estimator`` supplies the gradient (and for p=2, on demand, the Hessian
    operator) via the two-phase protocol; ``callback(k, x, ...)`` is a
    reporting hook (bound checks, loss tracing) with no effect on the run.
    """
    x = as_vector(cfg.x0) if cfg.x0 is not None else as_vector(problem.x0())
    if x.shape[0] != problem.n:
        raise ValueError("x0 dimension does not match the problem")
    ss = np.random.SeedSequence(seed)
    est_rng, solver_rng = [np.random.default_rng(s) for s in ss.spawn(2)]
    del solver_rng  # reserved stream: current solvers are deterministic

    sigma = cfg.sigma0
    history = StepHistory(cfg.memory, cfg.p)
    record = RunRecord(seed=seed)
    tau = 0.0
    t_run0 = time.perf_counter()

    for k in range(cfg.max_iters + 1):
        t0 = time.perf_counter()
        xi_k = history.xi()
        gbar, b_g = estimator.gradient(problem, x, k, history, est_rng)
        gbar_norm = norm(gbar)
        g_norm = math.nan
        if cfg.trace_exact_gradient:
            g_norm = norm(problem.exact_gradient(x, counted=False))

        if gbar_norm <= cfg.epsilon1 or k == cfg.max_iters:
            stopped = gbar_norm <= cfg.epsilon1
            tau += b_g * 1.0
            record.rows.append(IterationRow(
                k=k, gbar_norm=gbar_norm, g_norm=g_norm, sigma=sigma, step_norm=0.0,
                xi=xi_k, b_g=b_g, b_h=0, ege=1, tau_cum=tau, model_delta=0.0,
                wall_ms=(time.perf_counter() - t0) * 1e3))
            if callback is not None:
                callback(k=k, x=x, gbar=gbar, sigma=sigma, result=None, problem=problem)
            record.status = "converged" if stopped else "max_iters"
            break

        try:
            if cfg.p == 1:
                result = solve_p1(gbar, sigma, cfg.theta1)
                b_h = 0
            else:
                H, b_h = estimator.hessian(problem, x, k, history, est_rng)
                if cfg.solver.method == "exact_secular":
                    result = solve_exact_secular(gbar, H, sigma, cfg.solver)
                else:
                    result = solve_matrix_free(gbar, H, sigma, cfg.solver)
        except SubproblemError as exc:
            record.status = "solver_failure"
            record.x_final = x.copy()
            record.counters = problem.counters.snapshot()
            raise OptimizerError(f"subproblem failed at iteration {k}: {exc}", record) from exc

        record.checks_passed &= result.report.ok
        s = result.s
        step_norm = norm(s)
        ege = result.hvp_count + 1
        tau += (b_g + b_h) * ege
        record.rows.append(IterationRow(
            k=k, gbar_norm=gbar_norm, g_norm=g_norm, sigma=sigma, step_norm=step_norm,
            xi=xi_k, b_g=b_g, b_h=b_h, ege=ege, tau_cum=tau,
            model_delta=result.report.model_delta,
            wall_ms=(time.perf_counter() - t0) * 1e3))
        if callback is not None:
            callback(k=k, x=x, gbar=gbar, sigma=sigma, result=result, problem=problem)

        x = x + s
        sigma = update_sigma(sigma, step_norm, cfg.p)
        history.push(step_norm)

    record.x_final = x.copy()
    record.counters = problem.counters.snapshot()
    record.counters["wall_s"] = time.perf_counter() - t_run0
    return record
