import math

import numpy as np
import pytest

from stoffar.core import HessianOperator
from stoffar.models import RegularizedModel, check_step, model_delta, taylor_gradient
from stoffar.subproblem import SolverConfig, solve_exact_secular

# worked secular instance: g=(1,0), H=diag(1,2), sigma=6; ||s|| solves 3t^2+t-1=0
SECULAR_T = (-1.0 + math.sqrt(13.0)) / 6.0
SECULAR_DELTA = -0.2580756164910357  # frozen from the 1-D closed form + grid oracle


def p1_model(g, sigma):
    return RegularizedModel(p=1, g=np.asarray(g, float), H=None, sigma=sigma)


def p2_model(g, H, sigma):
    return RegularizedModel(p=2, g=np.asarray(g, float),
                            H=HessianOperator.from_dense(H), sigma=sigma)


def test_validation():
    with pytest.raises(ValueError):
        RegularizedModel(p=3, g=np.ones(2), H=None, sigma=1.0)
    with pytest.raises(ValueError):
        p1_model([1.0], 0.0)
    with pytest.raises(ValueError):
        RegularizedModel(p=2, g=np.ones(2), H=None, sigma=1.0)


def test_model_delta_p1_closed_form_minimum():
    g = np.array([3.0, 4.0])
    M = p1_model(g, 2.0)
    s = -g / 2.0
    assert model_delta(M, s) == pytest.approx(-25.0 / 4.0, abs=1e-14)  # -||g||^2/(2 sigma)


def test_model_delta_zero_step_is_zero():
    M = p2_model([1.0, -2.0], np.diag([1.0, 5.0]), 3.0)
    assert model_delta(M, np.zeros(2)) == 0.0
    assert model_delta(p1_model([0.5], 0.7), np.zeros(1)) == 0.0


def test_model_delta_secular_example_with_grid_oracle():
    M = p2_model([1.0, 0.0], np.diag([1.0, 2.0]), 6.0)
    s = np.array([-SECULAR_T, 0.0])
    delta = model_delta(M, s)
    assert delta == pytest.approx(SECULAR_DELTA, abs=1e-12)
    # independent check: 1-D grid minimization along e1 to 1e-5
    ts = np.linspace(0.0, 1.0, 200001)
    vals = -ts + 0.5 * ts ** 2 + ts ** 3
    assert delta == pytest.approx(vals.min(), abs=1e-5)


def test_taylor_gradient_cases():
    M1 = p1_model([2.0, -1.0], 1.0)
    np.testing.assert_array_equal(taylor_gradient(M1, np.array([9.9, -3.0])), M1.g)
    M2 = p2_model([1.0, 0.0], np.diag([1.0, 2.0]), 6.0)
    np.testing.assert_array_equal(taylor_gradient(M2, np.zeros(2)), M2.g)
    tg = taylor_gradient(M2, np.array([-SECULAR_T, 0.0]))
    assert tg[0] == pytest.approx(1.0 - SECULAR_T, abs=1e-12)
    assert tg[1] == 0.0
    # at the exact subproblem solution the norm equals sigma/2 * ||s||^2
    assert np.linalg.norm(tg) == pytest.approx(3.0 * SECULAR_T ** 2, rel=1e-10)


def test_check_step_p1_closed_form_passes():
    g = np.array([3.0, 4.0])
    M = p1_model(g, 2.0)
    rep = check_step(M, -g / 2.0, theta1=2.0)
    assert rep.decrease_ok and rep.grad_ok


def test_check_step_zero_step():
    M = p1_model([1.0, 0.0], 1.0)
    rep = check_step(M, np.zeros(2), theta1=2.0)
    assert rep.decrease_ok  # simple decrease: delta = 0 accepted
    assert not rep.grad_ok  # ||g|| > 0 against a zero threshold
    M0 = p1_model([0.0, 0.0], 1.0)
    rep0 = check_step(M0, np.zeros(2), theta1=2.0)
    assert rep0.decrease_ok and rep0.grad_ok


def test_check_step_secular_example_grad_ok():
    M = p2_model([1.0, 0.0], np.diag([1.0, 2.0]), 6.0)
    rep = check_step(M, np.array([-SECULAR_T, 0.0]), theta1=2.0)
    assert rep.grad_ok and rep.decrease_ok
    assert rep.threshold == pytest.approx(2.0 * 3.0 * SECULAR_T ** 2, rel=1e-12)
    assert rep.taylor_grad_norm <= rep.threshold


def test_check_step_requires_theta1_above_one():
    M = p1_model([1.0], 1.0)
    with pytest.raises(ValueError):
        check_step(M, np.array([-1.0]), theta1=1.0)


def test_model_delta_matches_brute_force_on_random_instances():
    rng = np.random.default_rng(7)
    for _ in range(50):
        n = int(rng.integers(1, 8))
        g = rng.standard_normal(n)
        A = rng.standard_normal((n, n))
        H = (A + A.T) / 2
        sigma = float(rng.uniform(0.1, 5.0))
        s = rng.standard_normal(n)
        M = p2_model(g, H, sigma)
        brute = float(g @ s) + 0.5 * float(s @ H @ s) \
            + sigma * np.linalg.norm(s) ** 3 / 6.0
        assert model_delta(M, s) == pytest.approx(brute, rel=1e-12, abs=1e-12)


def test_psd_exact_solution_gradient_identity():
    # for psd H and the exact subproblem solution, ||grad T(s)|| = sigma/2 ||s||^2
    rng = np.random.default_rng(1)
    for seed in range(10):
        n = int(rng.integers(2, 9))
        A = rng.standard_normal((n, n))
        H = A @ A.T / n
        g = rng.standard_normal(n)
        sigma = float(rng.uniform(0.2, 4.0))
        res = solve_exact_secular(g, HessianOperator.from_dense(H), sigma,
                                  SolverConfig(theta1=2.0))
        sn = np.linalg.norm(res.s)
        assert res.report.taylor_grad_norm == pytest.approx(sigma / 2.0 * sn ** 2,
                                                            rel=1e-8)
