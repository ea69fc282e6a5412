import math

import numpy as np
import pytest

from stoffar.theory import (LambertDomainError, TheoryParams, chi_constants,
                            complexity_bound, corollary_constant, kappa_chain,
                            lambert_w, lambert_w_m1_neg_exp, sigma_max,
                            solve_log_linear)


class TestChiConstants:
    def test_p2_values(self):
        chi1, chi2, chi3, chi4, kp = chi_constants(2)
        assert chi1 == pytest.approx(2.0 / 3.0)
        assert chi2 == pytest.approx(7.0 / 6.0)
        assert chi3 == pytest.approx(0.5 ** 1.5)
        assert chi4 == pytest.approx(1.0 + 0.5 ** 1.5)
        assert kp == pytest.approx(2.0)

    def test_p1_empty_sums(self):
        chi1, chi2, chi3, chi4, kp = chi_constants(1)
        assert kp == pytest.approx(2.0)
        assert chi3 == 0.0
        assert chi4 == 1.0

    def test_p3_kappa(self):
        assert chi_constants(3)[4] == pytest.approx(6.0 ** (1.0 / 3.0), abs=1e-5)


class TestLambert:
    def test_trivial_points(self):
        assert lambert_w(0, 0.0) == 0.0
        assert lambert_w(0, math.e) == pytest.approx(1.0, abs=1e-12)
        assert lambert_w(0, -math.exp(-1.0)) == -1.0
        assert lambert_w(-1, -math.exp(-1.0)) == -1.0

    def test_identity_branch0(self):
        rng = np.random.default_rng(0)
        xs = np.concatenate([
            rng.uniform(-math.exp(-1.0), 0.0, 300),
            rng.uniform(0.0, 1.0, 300),
            np.exp(rng.uniform(0.0, 25.0, 400)),
        ])
        for x in xs:
            w = lambert_w(0, float(x))
            assert abs(w * math.exp(w) - x) <= 1e-12 * max(1.0, abs(x))
            assert w >= -1.0

    def test_identity_branch_m1(self):
        rng = np.random.default_rng(1)
        xs = -np.exp(rng.uniform(-700.0, -1.0, 1000))
        for x in xs:
            w = lambert_w(-1, float(x))
            assert abs(w * math.exp(w) - x) <= 1e-12 * max(1.0, abs(x))
            assert w <= -1.0

    def test_domain_errors(self):
        with pytest.raises(LambertDomainError):
            lambert_w(0, -1.0)
        with pytest.raises(LambertDomainError):
            lambert_w(-1, 0.5)
        with pytest.raises(LambertDomainError):
            lambert_w(2, 0.5)

    def test_stable_negative_exponent_form(self):
        for y in (1.0, 5.0, 50.0, 700.0, 1e4, 1e8):
            w = lambert_w_m1_neg_exp(y)
            # residual of log(-w) + w + y = 0
            assert abs(math.log(-w) + w + y) <= 1e-10 * max(1.0, y)
        # consistency with the direct branch where both apply
        assert lambert_w_m1_neg_exp(3.0) == pytest.approx(
            lambert_w(-1, -math.exp(-3.0)), rel=1e-12)


class TestSolveLogLinear:
    def test_worked_root_pair(self):
        u1, u2 = solve_log_linear(1.0, -1.0 / 3.0, 0.0)
        assert u1 == pytest.approx(1.85718, abs=1e-4)
        assert u2 == pytest.approx(4.53640, abs=1e-4)

    def test_residuals_on_random_valid_inputs(self):
        rng = np.random.default_rng(2)
        for _ in range(1000):
            g1 = float(np.exp(rng.uniform(-2, 4)))
            g2 = -g1 * float(rng.uniform(1e-3, 1.0 / 3.0))
            g3 = float(rng.uniform(0.0, 100.0)) * g1 / 100.0
            u1, u2 = solve_log_linear(g1, g2, g3)
            assert 0 < u1 < u2

            def psi(u):
                return g1 * math.log(u) + g2 * u + g3

            assert abs(psi(u1)) <= 1e-8
            assert abs(psi(u2)) <= 1e-8
            # psi positive between the roots, negative outside
            assert psi(math.sqrt(u1 * u2)) > 0
            assert psi(u1 * 0.5) < 0 and psi(u2 * 2.0) < 0

    def test_hypothesis_guard(self):
        with pytest.raises(ValueError):
            solve_log_linear(1.0, -0.5, 0.0)  # ratio below -1/3
        with pytest.raises(ValueError):
            solve_log_linear(1.0, -0.1, -1.0)


class TestKappaChain:
    def test_kappa_a_example(self):
        tp = TheoryParams(p=2, L_p=3.0)
        ch = kappa_chain(tp)
        assert ch.kappa_a == pytest.approx(3.0 / 6.0 + 2.0 / 3.0)

    def test_kappa_d_vanishes_without_noise(self):
        ch = kappa_chain(TheoryParams(p=2, L_p=4.0, kappaD=0.0))
        assert ch.kappa_d == 0.0

    def test_kappa_c_worked_value(self):
        tp = TheoryParams(p=2, L_p=3.0, theta1=2.0, sigma0=1.0, kappaD=0.0)
        ch = kappa_chain(tp)
        kb = 2.0 * 1.5 ** 1.5 + 0.5 ** 1.5
        assert ch.kappa_b == pytest.approx(kb)
        assert ch.kappa_c == pytest.approx(math.sqrt(2.0) * (kb + 1.0))

    def test_deterministic_reduction(self):
        # kappaD = 0 strips every noise term; only kappa_c/eta/E_g0 remain
        tp0 = TheoryParams(p=2, L_p=5.0, kappaD=0.0, sigma0=0.5, m=7, Gamma0=2.0)
        ch0 = kappa_chain(tp0)
        assert ch0.kappa_d == 0.0
        tp_m1 = TheoryParams(p=2, L_p=5.0, kappaD=0.0, sigma0=0.5, m=1, Gamma0=2.0)
        # with kappaD = 0 the memory m no longer matters
        assert ch0.kappa_e == pytest.approx(kappa_chain(tp_m1).kappa_e)
        assert ch0.kappa_f == pytest.approx(kappa_chain(tp_m1).kappa_f)

    def test_sigma_max_properties(self):
        for tp in [TheoryParams(p=2, L_p=3.0, Gamma0=1.0),
                   TheoryParams(p=1, L_p=3.0, sigma0=0.01, Gamma0=5.0, E_g0=2.0),
                   TheoryParams(p=2, L_p=10.0, kappaD=0.5, m=3, sigma0=0.1,
                                kappa_high=1.0, Gamma0=3.0)]:
            smax, explicit = sigma_max(tp)
            ch = kappa_chain(tp)
            assert smax >= tp.sigma0
            assert smax <= explicit
            # defining property: psi(sigma_max) = 0 for the chain's gammas
            g1 = ch.kappa_a * ch.kappa_f + tp.kappaD * ch.chi2 * ch.kappa_f
            g3 = tp.Gamma0 + tp.sigma0 / math.factorial(tp.p + 1) \
                + ch.kappa_a * ch.kappa_e + tp.kappaD * ch.chi2 * (1 + ch.kappa_e)
            psi = g1 * math.log(smax) - smax / math.factorial(tp.p + 1) + g3
            scale = max(abs(g1 * math.log(smax)), smax / math.factorial(tp.p + 1))
            assert abs(psi) <= 1e-6 * scale

    def test_sigma_max_huge_gamma0_stays_finite(self):
        smax, explicit = sigma_max(TheoryParams(p=2, L_p=3.0, Gamma0=1e9))
        assert math.isfinite(smax) and smax <= explicit


class TestComplexityBound:
    def test_p1_corollary_radical(self):
        tp = TheoryParams(p=1, L_p=3.0, kappaD=0.0, theta1=2.0, sigma0=1.0, m=1)
        assert corollary_constant(tp) == pytest.approx(math.sqrt(44.0))
        # theorem form matches the corollary form exactly for p=1
        ch = kappa_chain(tp)
        assert (ch.kappa_c + ch.kappa_d * tp.m) ** 0.5 == pytest.approx(
            corollary_constant(tp) / tp.sigma0)

    def test_p2_corollary_constant(self):
        tp = TheoryParams(p=2, L_p=3.0, kappaD=0.0, theta1=2.0, sigma0=1.0)
        bracket = 3.0 ** 1.5 / math.sqrt(2.0) + math.sqrt(2.0) / 2.0 + 1.0
        assert corollary_constant(tp) == pytest.approx((2.0 * bracket ** 2) ** (1 / 3))

    def test_nonincreasing_in_k(self):
        tp = TheoryParams(p=2, L_p=3.0)
        vals = [complexity_bound(tp, k) for k in range(0, 50, 5)]
        assert all(a >= b for a, b in zip(vals, vals[1:]))

    def test_corollary_rejects_other_degrees(self):
        with pytest.raises(ValueError):
            corollary_constant(TheoryParams(p=3, L_p=3.0))


def test_theory_params_validation():
    with pytest.raises(ValueError):
        TheoryParams(p=2, L_p=2.0)  # below the Lipschitz floor
    with pytest.raises(ValueError):
        TheoryParams(p=0)
    with pytest.raises(ValueError):
        TheoryParams(p=1, sigma0=-1.0)
