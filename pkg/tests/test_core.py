import numpy as np
import pytest

from stoffar.core import (Counters, DerivativeEstimate, DimensionMismatchError,
                          HessianOperator, dot, norm, probe_linearity, probe_symmetry)


def test_dot_examples():
    assert dot(np.array([1.0, 2.0]), np.array([3.0, 4.0])) == 11.0
    u = np.array([0.3, -1.7, 2.2])
    assert dot(u, u) >= 0.0
    assert dot(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0


def test_dot_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        dot(np.ones(2), np.ones(3))


def test_norm_examples():
    assert norm(np.array([3.0, 4.0])) == 5.0
    assert norm(np.zeros(7)) == 0.0
    assert norm(np.ones(4)) == 2.0


def test_probe_symmetry_identity_and_diag():
    eye = HessianOperator.from_dense(np.eye(3))
    assert probe_symmetry(eye, trials=5, seed=0) == 0.0
    diag = HessianOperator.from_dense(np.diag([1.0, 2.0]))
    assert probe_symmetry(diag, trials=5, seed=0) == 0.0


def test_probe_flags_asymmetric_operator():
    A = np.array([[0.0, 1.0], [0.0, 0.0]])
    op = HessianOperator(lambda v: A @ v, 2)
    assert probe_symmetry(op, trials=10, seed=1) > 1e-3


def test_probe_linearity_linear_operator():
    rng = np.random.default_rng(3)
    H = rng.standard_normal((5, 5))
    H = H + H.T
    op = HessianOperator.from_dense(H)
    assert probe_linearity(op, trials=10, seed=2) < 1e-12


def test_operator_apply_hook_and_dense_pricing():
    calls = []
    op = HessianOperator(lambda v: 2 * v, 2, dense=np.diag([2.0, 2.0]),
                         on_apply=lambda: calls.append("mv"),
                         on_dense=lambda: calls.append("dense"))
    op(np.ones(2))
    op.to_dense()
    assert calls == ["mv", "dense"]


def test_counters_full_passes():
    c = Counters(dataset_size=100)
    c.samples_drawn += 250
    assert c.full_passes == 2.5
    snap = c.snapshot()
    assert snap["samples_drawn"] == 250 and snap["full_passes"] == 2.5


def test_derivative_estimate_validation():
    with pytest.raises(DimensionMismatchError):
        DerivativeEstimate(gradient=np.ones(3),
                           hessian=HessianOperator.from_dense(np.eye(2)))
