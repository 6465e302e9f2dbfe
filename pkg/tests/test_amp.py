import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mxpl.amp import (
    AmpSolution,
    empirical_se_check,
    eta_prime_expectation,
    lambda_of_alpha,
    min_tau_over_lambda,
    soft_threshold,
    solve_fixed_point,
    state_evolution_mse,
    state_evolution_tau,
    tau_at_infinite_lambda,
)
from mxpl.mixture import SignalMixture
from mxpl.model_gen import ModelConfig, generate_setting1

SPARSE4 = SignalMixture(((0.0, 0.9), (4.0, 0.1)))


class TestSoftThreshold:
    def test_branches(self):
        assert soft_threshold(3.0, 1.0) == 2.0
        assert soft_threshold(-0.5, 1.0) == 0.0
        assert soft_threshold(-3.0, 1.0) == -2.0

    @given(st.floats(-50, 50), st.floats(0, 20))
    @settings(max_examples=200, deadline=None)
    def test_odd_and_identity_at_zero(self, x, y):
        assert soft_threshold(-x, y) == pytest.approx(-soft_threshold(x, y), abs=1e-12)
        assert soft_threshold(x, 0.0) == pytest.approx(x)

    @given(st.floats(-20, 20), st.floats(-20, 20), st.floats(0, 10))
    @settings(max_examples=200, deadline=None)
    def test_lipschitz(self, x1, x2, y):
        d = abs(soft_threshold(x1, y) - soft_threshold(x2, y))
        assert d <= abs(x1 - x2) + 1e-12


class TestStateEvolution:
    def test_pure_null_large_alpha(self):
        tau = state_evolution_tau(30.0, 0.7, 2.0, SignalMixture.point(0.0))
        assert tau == pytest.approx(np.sqrt(2.0), abs=1e-9)

    def test_large_alpha_limit_matches_mc_variance(self):
        # lambda -> infinity kills every coordinate: tau^2 -> sigma^2 + kappa E[B0^2]
        tau = state_evolution_tau(40.0, 0.4, 1.0, SPARSE4)
        assert tau == pytest.approx(np.sqrt(1.0 + 0.4 * 1.6), abs=1e-6)
        assert tau_at_infinite_lambda(0.4, 1.0, SPARSE4) == pytest.approx(tau, abs=1e-6)

    def test_kappa_zero(self):
        assert state_evolution_tau(1.0, 0.0, 1.3, SPARSE4) == pytest.approx(
            np.sqrt(1.3), abs=1e-12
        )

    def test_exact_matches_quadrature(self):
        # Gauss-Hermite converges to the closed form as nodes grow (slowly,
        # because the integrand has dead-zone kinks; hence the closed form)
        for tau, alpha in ((1.2, 0.8), (2.5, 0.2)):
            exact = state_evolution_mse(tau, alpha, SPARSE4, "exact")
            errs = [
                abs(state_evolution_mse(tau, alpha, SPARSE4, "gauss-hermite", n) - exact)
                for n in (61, 8001)
            ]
            assert errs[1] < errs[0] / 10
            assert errs[1] < 1e-5 * (1.0 + exact)

    def test_default_path_insensitive_to_node_count(self):
        # the default expectation is closed-form: the node count is inert
        a = state_evolution_tau(1.1, 0.4, 1.0, SPARSE4, nodes=61)
        b = state_evolution_tau(1.1, 0.4, 1.0, SPARSE4, nodes=122)
        assert abs(a - b) < 1e-10

    def test_eta_prime_is_exceedance_probability(self):
        # E[eta'(B + tau W; alpha tau)] = P(|B + tau W| > alpha tau)
        rng = np.random.default_rng(0)
        tau, alpha = 1.4, 0.9
        b = SPARSE4.draw(rng, 400_000)
        w = rng.standard_normal(400_000)
        mc = np.mean(np.abs(b + tau * w) > alpha * tau)
        assert eta_prime_expectation(tau, alpha, SPARSE4) == pytest.approx(mc, abs=0.003)

    def test_invalid_alpha_raises(self):
        with pytest.raises(ValueError):
            state_evolution_tau(0.05, 2.0, 1.0, SPARSE4)


class TestFixedPoint:
    def test_round_trip(self):
        for lam in (0.3, 1.0, 2.5):
            sol = solve_fixed_point(lam, 0.4, 1.0, SPARSE4)
            assert sol.lam == pytest.approx(lam, abs=1e-8)
            eq1, eq2 = sol.residuals()
            assert max(eq1, eq2) < 1e-9 * (1 + lam + sol.tau**2)

    def test_tau_at_least_sigma(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            kappa = float(rng.uniform(0.2, 2.0))
            gamma = float(rng.uniform(0.5, 0.95))
            sigma2 = float(rng.uniform(0.5, 2.0))
            mix = SignalMixture.sparse(gamma, float(rng.uniform(1.0, 5.0)))
            lam = float(rng.uniform(0.5, 2.0))
            sol = solve_fixed_point(lam, kappa, sigma2, mix)
            assert sol.tau >= np.sqrt(sigma2) - 1e-12

    def test_doubled_equals_thinned_mixture_with_two_kappa(self):
        alpha = 1.3
        a = state_evolution_tau(alpha, 0.4, 1.0, SPARSE4, doubled=True)
        b = state_evolution_tau(alpha, 0.8, 1.0, SPARSE4.thinned(0.5), doubled=False)
        assert a == pytest.approx(b, abs=1e-12)
        la = lambda_of_alpha(alpha, 0.4, 1.0, SPARSE4, doubled=True)
        lb = lambda_of_alpha(alpha, 0.8, 1.0, SPARSE4.thinned(0.5), doubled=False)
        assert la == pytest.approx(lb, abs=1e-12)

    def test_small_penalty_approaches_ols_noise(self):
        # lambda -> 0 with kappa < 1: tau -> sigma / sqrt(1 - kappa)
        sol = solve_fixed_point(0.01, 0.4, 1.0, SPARSE4)
        assert sol.tau == pytest.approx(1.0 / np.sqrt(0.6), rel=0.02)


class TestMinTau:
    def test_local_optimality(self):
        best = min_tau_over_lambda(0.4, 1.0, SPARSE4)
        for factor in (0.1, 10.0):
            other = solve_fixed_point(best.lam * factor, 0.4, 1.0, SPARSE4)
            assert best.tau <= other.tau + 1e-9

    def test_crt_beats_knockoff_tau(self):
        best = min_tau_over_lambda(1.0, 1.0, SPARSE4)
        best_kf = min_tau_over_lambda(1.0, 1.0, SPARSE4, doubled=True)
        assert best.tau < best_kf.tau - 1e-6

    def test_null_mixture_attains_sigma(self):
        best = min_tau_over_lambda(0.4, 1.0, SignalMixture.point(0.0))
        assert best.tau == pytest.approx(1.0, abs=1e-9)


class TestEmpiricalStateEvolution:
    def test_training_loss_limits(self):
        # one large instance against the fixed-point predictions (3% band)
        cfg = ModelConfig(n=5000, p=2000, sigma2=1.0, h=0.0, signal=SPARSE4, seed=42)
        ds = generate_setting1(cfg)
        sol = solve_fixed_point(1.0, 2000 / 5000, 1.0, SPARSE4)
        rss_n, cross_n = empirical_se_check(ds, 1.0)
        assert rss_n == pytest.approx(sol.lam**2 / sol.alpha**2, rel=0.03)
        assert cross_n == pytest.approx(sol.lam / (sol.alpha * sol.tau), rel=0.03)

    def test_large_penalty_rss_is_response_norm(self):
        cfg = ModelConfig(n=400, p=100, sigma2=1.0, h=0.0, signal=SPARSE4, seed=3)
        ds = generate_setting1(cfg)
        rss_n, _ = empirical_se_check(ds, 50.0)
        assert rss_n == pytest.approx(float(ds.y @ ds.y) / 400, rel=1e-10)
