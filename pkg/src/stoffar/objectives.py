"""Concrete objectives with analytic derivatives, plus the dynamic-accuracy wrapper.

Two dataset-backed binary-classification finite sums (squared sigmoid loss and
cross-entropy with a nonconvex x^2/(1+x^2) penalty), two synthetic fixtures
(quadratic, Rosenbrock), and an error-injection wrapper whose perturbation
budgets are read from the optimizer's step history.

All batch reductions go through the kernel backend (compiled or fallback);
exact oracles are the full-batch case of the same code path, so a full batch
without replacement reproduces them bitwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import Counters, DerivativeEstimate, HessianOperator, as_vector

N_DENSE_MAX = 500


def sigmoid(t):
    """Numerically stable logistic function, elementwise."""
    t = np.asarray(t, dtype=np.float64)
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    et = np.exp(t[~pos])
    out[~pos] = et / (1.0 + et)
    return out if out.ndim else float(out)


def softplus(t):
    """log(1 + e^t) without overflow."""
    t = np.asarray(t, dtype=np.float64)
    return np.maximum(t, 0.0) + np.log1p(np.exp(-np.abs(t)))


def rational_penalty(x):
    """sum_j x_j^2/(1+x_j^2) and its per-coordinate first/second derivatives."""
    x2 = x * x
    d = 1.0 + x2
    val = float(np.sum(x2 / d))
    grad = 2.0 * x / d ** 2
    hdiag = 2.0 * (1.0 - 3.0 * x2) / d ** 3
    return val, grad, hdiag


class FiniteSumProblem:
    """Dataset-backed finite sum with per-sample gradient/HVP oracles.

    kind 'sigmoid_ls':   f_i = (y_i - phi(a_i'x))^2
    kind 'nc_logistic':  f_i = CE(y_i, phi(a_i'x)) + alpha * sum_j x_j^2/(1+x_j^2)

    Both are bounded below by 0.
    """

    def __init__(self, dataset, kind: str, alpha: float = 0.001):
        if kind not in ("sigmoid_ls", "nc_logistic"):
            raise ValueError(f"unknown objective kind {kind!r}")
        if alpha < 0:
            raise ValueError("alpha must be nonnegative")
        self.dataset = dataset
        self.kind = kind
        self.alpha = alpha
        self.N = dataset.N
        self.n = dataset.n
        self.f_low = 0.0
        self.counters = Counters(dataset_size=dataset.N)
        self._all_rows = np.arange(self.N, dtype=np.int64)

    # -- raw reductions -------------------------------------------------
    def margins(self, x, rows):
        ds = self.dataset
        return kernels.csr_rows_dot(ds.indptr, ds.indices, ds.data, rows, x)

    def _accumulate(self, rows, w):
        ds = self.dataset
        return kernels.csr_rows_weighted_sum(ds.indptr, ds.indices, ds.data, rows, w, self.n)

    def _rows_dense(self, rows):
        ds = self.dataset
        D = np.zeros((rows.shape[0], self.n))
        for j, r in enumerate(rows):
            lo, hi = ds.indptr[r], ds.indptr[r + 1]
            D[j, ds.indices[lo:hi]] = ds.data[lo:hi]
        return D

    # -- oracles ---------------------------------------------------------
    def value(self, x, rows=None):
        """Mean loss over the batch (reporting only; never drives the optimizer)."""
        rows = self._all_rows if rows is None else rows
        t = self.margins(x, rows)
        y = self.dataset.labels[rows]
        if self.kind == "sigmoid_ls":
            return float(np.mean((y - sigmoid(t)) ** 2))
        ce = float(np.mean(y * softplus(-t) + (1.0 - y) * softplus(t)))
        pen, _, _ = rational_penalty(x)
        return ce + self.alpha * pen

    def _grad_scalars(self, t, y):
        phi = sigmoid(t)
        if self.kind == "sigmoid_ls":
            return -2.0 * (y - phi) * phi * (1.0 - phi)
        return phi - y

    def _hess_scalars(self, t, y):
        phi = sigmoid(t)
        d = phi * (1.0 - phi)
        if self.kind == "sigmoid_ls":
            return 2.0 * d * d - 2.0 * (y - phi) * d * (1.0 - 2.0 * phi)
        return d

    def batch_gradient(self, x, rows, counted=True):
        b = rows.shape[0]
        t = self.margins(x, rows)
        u = self._grad_scalars(t, self.dataset.labels[rows])
        g = self._accumulate(rows, u / b)
        if self.kind == "nc_logistic":
            _, pgrad, _ = rational_penalty(x)
            g = g + self.alpha * pgrad
        if counted:
            self.counters.grad_evals += b
        return g

    def batch_hessian_operator(self, x, rows, counted=True):
        b = rows.shape[0]
        t = self.margins(x, rows)
        c = self._hess_scalars(t, self.dataset.labels[rows])
        if self.kind == "nc_logistic":
            _, _, hdiag = rational_penalty(x)
            diag = self.alpha * hdiag
        else:
            diag = None

        def matvec(v):
            tv = self.margins(v, rows)
            out = self._accumulate(rows, c * tv / b)
            if diag is not None:
                out = out + diag * v
            return out

        def dense():
            D = self._rows_dense(rows)
            H = D.T @ (c[:, None] * D) / b
            if diag is not None:
                H[np.diag_indices_from(H)] += diag
            return H

        def on_apply():
            if counted:
                self.counters.hvp_evals += b

        def on_dense():
            if counted:
                self.counters.hvp_evals += self.n * b

        return HessianOperator(matvec, self.n,
                               dense=dense if self.n <= N_DENSE_MAX else None,
                               on_apply=on_apply, on_dense=on_dense)

    def exact_gradient(self, x, counted=True):
        return self.batch_gradient(x, self._all_rows, counted=counted)

    def exact_hessian_operator(self, x, counted=True):
        return self.batch_hessian_operator(x, self._all_rows, counted=counted)

    def x0(self):
        return np.zeros(self.n)


class QuadraticProblem:
    """f = x'Qx/2 + b'x (+ constant shift making f_low exact when Q is psd)."""

    N = 1

    def __init__(self, Q, b, name="quadratic"):
        self.Q = np.asarray(Q, dtype=np.float64)
        if not np.allclose(self.Q, self.Q.T, atol=1e-12):
            raise ValueError("Q must be symmetric")
        self.b = as_vector(b)
        self.n = self.b.shape[0]
        self.name = name
        self.eigs = np.linalg.eigvalsh(self.Q)
        self.lambda_min = float(self.eigs[0])
        self.kappa_high = max(0.0, -self.lambda_min)
        if self.lambda_min > 0:
            xstar = np.linalg.solve(self.Q, -self.b)
            self.f_low = float(0.5 * xstar @ self.Q @ xstar + self.b @ xstar)
        else:
            self.f_low = -math.inf
        self.counters = Counters(dataset_size=1)

    def value(self, x, rows=None):
        return float(0.5 * x @ self.Q @ x + self.b @ x)

    def exact_gradient(self, x, counted=True):
        if counted:
            self.counters.grad_evals += 1
        return self.Q @ x + self.b

    def exact_hessian_operator(self, x, counted=True):
        def on_apply():
            if counted:
                self.counters.hvp_evals += 1

        def on_dense():
            if counted:
                self.counters.hvp_evals += self.n

        return HessianOperator(lambda v: self.Q @ v, self.n, dense=lambda: self.Q,
                               on_apply=on_apply, on_dense=on_dense)

    def x0(self):
        return np.zeros(self.n)


class RosenbrockProblem:
    """Chained Rosenbrock; f_low = 0 at the all-ones point."""

    N = 1

    def __init__(self, n=2, name="rosenbrock"):
        if n < 2:
            raise ValueError("n >= 2 required")
        self.n = n
        self.name = name
        self.f_low = 0.0
        self.counters = Counters(dataset_size=1)

    def value(self, x, rows=None):
        xi, xj = x[:-1], x[1:]
        return float(np.sum(100.0 * (xj - xi ** 2) ** 2 + (1.0 - xi) ** 2))

    def exact_gradient(self, x, counted=True):
        if counted:
            self.counters.grad_evals += 1
        g = np.zeros(self.n)
        xi, xj = x[:-1], x[1:]
        g[:-1] += -400.0 * xi * (xj - xi ** 2) - 2.0 * (1.0 - xi)
        g[1:] += 200.0 * (xj - xi ** 2)
        return g

    def hessian_dense(self, x):
        H = np.zeros((self.n, self.n))
        xi, xj = x[:-1], x[1:]
        d = 1200.0 * xi ** 2 - 400.0 * xj + 2.0
        H[:-1, :-1][np.diag_indices(self.n - 1)] += d
        H[1:, 1:][np.diag_indices(self.n - 1)] += 200.0
        off = -400.0 * xi
        H[np.arange(self.n - 1), np.arange(1, self.n)] = off
        H[np.arange(1, self.n), np.arange(self.n - 1)] = off
        return H

    def exact_hessian_operator(self, x, counted=True):
        H = self.hessian_dense(x)

        def on_apply():
            if counted:
                self.counters.hvp_evals += 1

        def on_dense():
            if counted:
                self.counters.hvp_evals += self.n

        return HessianOperator(lambda v: H @ v, self.n, dense=lambda: H,
                               on_apply=on_apply, on_dense=on_dense)

    def x0(self):
        x = np.empty(self.n)
        x[0::2] = -1.2
        x[1::2] = 1.0
        return x


def eda_perturb(exact: DerivativeEstimate, history, kappaD: float, mode: str,
                rng) -> DerivativeEstimate:
    """Perturb an exact estimate within the step-history error budgets.

    Budget for derivative order i is kappaD * sum_j ||s_{k-j}||^(p+1-i), with
    p taken from the history. 'boundary' saturates the gradient budget
    exactly; 'uniform_within' draws a uniform fraction; 'adversarial_violating'
    exceeds budgets tenfold (for robustness studies only). kappaD = 0 returns
    the input unchanged.
    """
    if mode not in ("boundary", "uniform_within", "adversarial_violating"):
        raise ValueError(f"unknown EDA mode {mode!r}")
    if kappaD == 0.0:
        return exact
    n = exact.gradient.shape[0]
    factors = {"boundary": 1.0, "uniform_within": float(rng.uniform()),
               "adversarial_violating": 10.0}
    scale = factors[mode]

    g_budget = kappaD * history.budget(1)
    u = rng.standard_normal(n)
    u /= np.linalg.norm(u)
    g = exact.gradient + (scale * g_budget) * u

    hess = exact.hessian
    if hess is not None:
        h_budget = kappaD * history.budget(2)
        v1 = rng.standard_normal(n)
        v1 /= np.linalg.norm(v1)
        v2 = rng.standard_normal(n)
        v2 -= (v1 @ v2) * v1
        v2 /= np.linalg.norm(v2)
        rho1 = scale * h_budget
        rho2 = -0.5 * scale * h_budget
        inner = hess

        def matvec(v):
            return inner(v) + rho1 * (v1 @ v) * v1 + rho2 * (v2 @ v) * v2

        def dense():
            return inner.to_dense() + rho1 * np.outer(v1, v1) + rho2 * np.outer(v2, v2)

        hess = HessianOperator(matvec, n, dense=dense if inner.has_dense else None)
    return DerivativeEstimate(gradient=g, hessian=hess, batch_g=exact.batch_g,
                              batch_h=exact.batch_h, exact=False)
