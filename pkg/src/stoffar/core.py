"""Shared vector arithmetic, Hessian-operator plumbing, and evaluation accounting.

Iterates are dense float64 vectors; derivative estimates carry an optional
Hessian exposed as a matrix-free operator (with an optional dense
materialization for the exact subproblem solver). All cost metrics flow
through a single Counters instance owned by the problem.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DimensionMismatchError(ValueError):
    pass


def as_vector(x) -> np.ndarray:
    v = np.ascontiguousarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionMismatchError(f"expected a 1-D vector, got shape {v.shape}")
    return v


def dot(u: np.ndarray, v: np.ndarray) -> float:
    if u.shape != v.shape:
        raise DimensionMismatchError(f"dot: shapes {u.shape} and {v.shape} differ")
    return float(np.dot(u, v))


def norm(u: np.ndarray) -> float:
    return float(np.linalg.norm(u))


@dataclass
class Counters:
    """Monotone evaluation counters, owned by the problem instance.

    grad_evals and hvp_evals count per-sample evaluations; samples_drawn
    counts batch indices drawn; full_passes is samples_drawn in units of
    dataset epochs.
    """

    grad_evals: int = 0
    hvp_evals: int = 0
    samples_drawn: int = 0
    dataset_size: int = 1

    @property
    def full_passes(self) -> float:
        return self.samples_drawn / self.dataset_size

    def snapshot(self) -> dict:
        return {
            "grad_evals": self.grad_evals,
            "hvp_evals": self.hvp_evals,
            "samples_drawn": self.samples_drawn,
            "full_passes": self.full_passes,
        }


class HessianOperator:
    """Symmetric linear operator v -> Hv with optional dense materialization.

    ``matvec`` is the raw action; calling the operator additionally invokes
    ``on_apply`` (the cost hook, charging per-sample HVP evaluations).
    """

    def __init__(self, matvec, n: int, dense=None, on_apply=None, on_dense=None):
        self._matvec = matvec
        self.n = n
        self._dense = dense
        self._on_apply = on_apply
        self._on_dense = on_dense

    def __call__(self, v: np.ndarray) -> np.ndarray:
        if v.shape != (self.n,):
            raise DimensionMismatchError(f"operator of size {self.n} applied to {v.shape}")
        if self._on_apply is not None:
            self._on_apply()
        return self._matvec(v)

    @property
    def has_dense(self) -> bool:
        return self._dense is not None

    def to_dense(self) -> np.ndarray:
        """Materialize the dense matrix (priced separately from matvecs)."""
        if self._dense is None:
            raise ValueError("no dense materialization available for this operator")
        if self._on_dense is not None:
            self._on_dense()
        H = self._dense() if callable(self._dense) else self._dense
        return np.asarray(H, dtype=np.float64)

    @staticmethod
    def from_dense(H, on_apply=None, on_dense=None) -> "HessianOperator":
        H = np.asarray(H, dtype=np.float64)
        return HessianOperator(lambda v: H @ v, H.shape[0], dense=H,
                               on_apply=on_apply, on_dense=on_dense)


@dataclass
class DerivativeEstimate:
    """Approximate gradient (and, for degree 2, Hessian) at an iterate."""

    gradient: np.ndarray
    hessian: HessianOperator | None = None
    batch_g: int = 0
    batch_h: int = 0
    exact: bool = False

    def __post_init__(self):
        self.gradient = as_vector(self.gradient)
        if self.hessian is not None and self.hessian.n != self.gradient.shape[0]:
            raise DimensionMismatchError("gradient and Hessian dimensions differ")


def probe_symmetry(H: HessianOperator, trials: int, seed=0) -> float:
    """Max over random unit pairs of |<u,Hv> - <v,Hu>| / (1 + |<u,Hv>|)."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        u = rng.standard_normal(H.n)
        v = rng.standard_normal(H.n)
        u /= np.linalg.norm(u)
        v /= np.linalg.norm(v)
        uhv = dot(u, H(v))
        vhu = dot(v, H(u))
        worst = max(worst, abs(uhv - vhu) / (1.0 + abs(uhv)))
    return worst


def probe_linearity(H: HessianOperator, trials: int, seed=0) -> float:
    """Max relative deviation of H(au+bv) from a*Hu + b*Hv on random probes."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        u = rng.standard_normal(H.n)
        v = rng.standard_normal(H.n)
        a, b = rng.standard_normal(2)
        lhs = H(a * u + b * v)
        rhs = a * H(u) + b * H(v)
        worst = max(worst, norm(lhs - rhs) / (1.0 + norm(rhs)))
    return worst
