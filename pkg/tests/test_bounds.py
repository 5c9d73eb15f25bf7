"""Bound evaluators against hand-computed values and brute-force oracles."""

import math

import numpy as np
import pytest

from mlpicard.bounds import (
    BoundParams,
    error_bound,
    gronwall_discrete,
    gronwall_mlp,
    lyapunov_gradient_constant,
    lyapunov_hessian_form,
    lyapunov_phi,
    perturbation_bound,
    total_cost_bound,
)
from mlpicard.mlp import cost_recursion_bound

from helpers import build_recursive_family


def _bp(b=1.0, c=1.0, beta=1.0, p=2.0, T=1.0, phi_x=1.0):
    return BoundParams(b=b, c=c, beta=beta, p=p, T=T, phi_x=phi_x)


class TestErrorBound:
    def test_depth_zero_hand_value(self):
        # [exp(0 + 1/2) + 1] * 12 * e^9 evaluated by hand
        expected = (math.exp(0.5) + 1.0) * 12.0 * math.exp(9.0)
        assert error_bound(0, 1, _bp()) == pytest.approx(expected, rel=1e-14)

    def test_phi_power_law(self):
        lo = error_bound(2, 3, _bp(phi_x=2.0))
        hi = error_bound(2, 3, _bp(phi_x=4.0))
        assert hi / lo == pytest.approx(2.0 ** (2.0 / 2.0), rel=1e-12)

    def test_decreasing_in_depth_for_large_base(self):
        # once sqrt(M) beats exp(2cT) the depth term makes the bound shrink
        bp = _bp(c=1.0, T=0.25)
        values = [error_bound(n, 9, bp) for n in range(7)]
        assert all(values[i + 1] < values[i] for i in range(6))

    def test_nonincreasing_in_base_below_depth(self):
        # the exp(M/2) factor grows with M, so monotone decay in M holds in
        # the regime M <= n exercised by the depth-equals-base convention
        for n in (10, 12):
            values = [error_bound(n, M, _bp()) for M in range(2, 11)]
            assert all(values[i + 1] <= values[i] for i in range(len(values) - 1))

    def test_diagonal_vanishes_without_underflow(self):
        bp = _bp(c=1.0, T=0.25)
        diag = [error_bound(n, n, bp) for n in range(6, 13)]
        assert all(v > 0.0 for v in diag)
        assert all(diag[i + 1] < diag[i] for i in range(len(diag) - 1))
        assert diag[-1] < diag[0] / 10.0

    def test_invalid_params_rejected(self):
        with pytest.raises(ValueError):
            _bp(b=0.5)
        with pytest.raises(ValueError):
            _bp(p=1.5)
        with pytest.raises(ValueError):
            error_bound(-1, 1, _bp())


class TestTotalCostBound:
    def test_hand_value(self):
        assert total_cost_bound(1, 1.0, 1.0, 1.0) == pytest.approx(12 * 6 * 36, rel=1e-14)

    def test_linear_in_weights(self):
        assert total_cost_bound(3, 0.0, 0.0, 0.0) == 0.0

    def test_dominates_summed_recursion(self):
        # the summed per-depth recursion, with the scalar-draw weight folded
        # into the step and nonlinearity weights, stays below the bound
        for d in (1, 10):
            w_draw, w_step, w_g, w_f = 1.0, 1.0, 1.0, 1.0
            folded_m = w_step + d * w_draw
            folded_f = w_draw + 2.0 * w_f
            for n in (1, 2, 3):
                summed = sum(
                    cost_recursion_bound(k, k, d, k**k, (w_draw, w_step, w_g, w_f))
                    for k in range(1, n + 2)
                )
                assert summed <= total_cost_bound(n, folded_m, w_g, folded_f)


class TestGronwallDiscrete:
    def test_zero_coupling_returns_alphas(self):
        alphas = np.array([0.3, 1.2, 0.0, 2.0])
        assert np.array_equal(gronwall_discrete(alphas, 0.0), alphas)

    def test_unit_coupling_hand_values(self):
        assert np.array_equal(gronwall_discrete([1.0, 1.0, 1.0], 1.0), [1.0, 2.0, 4.0])

    def test_matches_direct_recursion_exactly(self):
        rng = np.random.default_rng(12)
        for _ in range(100):
            size = int(rng.integers(1, 9))
            alphas = rng.uniform(0.0, 3.0, size=size)
            beta = float(rng.uniform(0.0, 2.0))
            got = gronwall_discrete(alphas, beta)
            gammas = []
            for n in range(size):
                acc = 0.0
                for g in gammas:
                    acc += g
                gammas.append(alphas[n] + beta * acc)
            # the closed form regroups the recursion, so allow last-ulp noise
            np.testing.assert_allclose(got, gammas, rtol=1e-12, atol=0.0)

    def test_negative_inputs_rejected(self):
        with pytest.raises(ValueError):
            gronwall_discrete([1.0, -0.1], 0.5)


class TestGronwallMlp:
    def test_degenerate_coupling(self):
        got = gronwall_mlp(a=2.0, b=0.0, T=1.0, tau=0.25, p=2.0, M=3, N=4, sup_f0=9.0)
        assert got == pytest.approx(2.0 * math.exp(3.0 / 2.0) * 3.0**-2.0, rel=1e-14)

    def test_zero_length_interval(self):
        got = gronwall_mlp(a=1.5, b=2.0, T=1.0, tau=1.0, p=1.0, M=2, N=3, sup_f0=4.0)
        assert got == pytest.approx(1.5 * math.exp(2.0**0.5) * 2.0**-1.5, rel=1e-14)

    def test_dominates_grid_constructed_families(self):
        rng = np.random.default_rng(77)
        for _ in range(50):
            a = float(rng.uniform(0.0, 3.0))
            b = float(rng.uniform(0.0, 2.0))
            T = float(rng.uniform(0.5, 2.0))
            tau = float(rng.uniform(0.0, T))
            p = float(rng.choice([1.0, 2.0]))
            M = int(rng.integers(1, 5))
            N = int(rng.integers(1, 5))
            sup_f0 = float(rng.uniform(0.0, 2.0))
            fams = build_recursive_family(a, b, T, tau, p, M, N, sup_f0)
            bound = gronwall_mlp(a, b, T, tau, p, M, N, sup_f0)
            assert fams[N][0] <= bound * (1.0 + 1e-9) + 1e-12

    def test_preconditions(self):
        with pytest.raises(ValueError):
            gronwall_mlp(1, 1, 1.0, 1.5, 2.0, 2, 2, 1.0)
        with pytest.raises(ValueError):
            gronwall_mlp(1, 1, 1.0, 0.5, 0.5, 2, 2, 1.0)


class TestPerturbationBound:
    def test_linear_in_delta(self):
        assert perturbation_bound(1, 1, 2, 2, 1, 1.0, 0.5, 4.0, 2.0, 0.0) == 0.0

    def test_terminal_time_drops_exponential(self):
        got = perturbation_bound(L=2.0, rho=3.0, p=2.0, q=2.0, eta=5.0,
                                 T=4.0, t=4.0, phi_x=9.0, psi_tx=16.0, delta=0.5)
        expected = 4.0 * (1 + 2.0 * 4.0) * 4.0**-0.5 * 3.0 * 4.0 * 0.5
        assert got == pytest.approx(expected, rel=1e-14)

    def test_zero_lipschitz_reduces_exponent(self):
        got = perturbation_bound(L=0.0, rho=2.0, p=2.0, q=2.0, eta=7.0,
                                 T=1.0, t=0.0, phi_x=1.0, psi_tx=1.0, delta=1.0)
        assert got == pytest.approx(4.0 * math.exp(1.0), rel=1e-14)

    def test_preconditions(self):
        with pytest.raises(ValueError):
            perturbation_bound(1, 1, 1.5, 2.0, 1, 1.0, 0.0, 1.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            perturbation_bound(1, 1, 2, 2, 1, 1.0, 2.0, 1.0, 1.0, 1.0)


class TestLyapunovPhi:
    def test_point_values(self):
        assert lyapunov_phi(np.zeros(3), 0.0) == 0.0
        assert lyapunov_phi(np.zeros(3), 1.0) == 2.0

    def test_sqrt_lower_bound(self):
        rng = np.random.default_rng(5)
        for _ in range(1000):
            d = int(rng.integers(1, 6))
            x = rng.normal(size=d) * 3.0
            a = float(rng.uniform(0.0, 4.0))
            assert math.sqrt(a) + np.linalg.norm(x) <= math.sqrt(lyapunov_phi(x, a)) + 1e-12

    def test_gradient_bound_via_finite_differences(self):
        rng = np.random.default_rng(6)
        h = 1e-4
        for _ in range(200):
            d = int(rng.integers(1, 5))
            x, y = rng.normal(size=d), rng.normal(size=d)
            a = float(rng.uniform(0.5, 2.0))
            directional = (lyapunov_phi(x + h * y, a) - lyapunov_phi(x - h * y, a)) / (2 * h)
            cap = lyapunov_gradient_constant() * math.sqrt(lyapunov_phi(x, a)) * np.linalg.norm(y)
            assert abs(directional) <= cap * (1.0 + 1e-4)

    def test_hessian_form_via_second_differences(self):
        rng = np.random.default_rng(7)
        h = 1e-4
        for _ in range(200):
            d = int(rng.integers(1, 5))
            x = rng.normal(size=d)
            y = rng.normal(size=d)
            a = float(rng.uniform(0.5, 2.0))
            # unit direction keeps the h^-2 cancellation noise far below the
            # tight tolerance; raw direction checked at the looser one
            u = y / np.linalg.norm(y)
            second = (lyapunov_phi(x + h * u, a) - 2 * lyapunov_phi(x, a)
                      + lyapunov_phi(x - h * u, a)) / h**2
            assert second == pytest.approx(lyapunov_hessian_form(u), rel=1e-6)
            second_raw = (lyapunov_phi(x + h * y, a) - 2 * lyapunov_phi(x, a)
                          + lyapunov_phi(x - h * y, a)) / h**2
            assert second_raw == pytest.approx(lyapunov_hessian_form(y), rel=1e-4, abs=1e-6)
