import numpy as np
import pytest

from mxpl.lasso import (
    LassoFit,
    distilled_loo_stats,
    fit_lasso,
    kkt_residual,
    lasso_objective,
)
from oracles import brute_force_lasso


def _instance(rng, n, d):
    Z = rng.standard_normal((n, d))
    theta = np.where(rng.random(d) < 0.4, rng.standard_normal(d), 0.0)
    y = Z @ theta + 0.5 * rng.standard_normal(n)
    return Z, y


def test_scalar_closed_form():
    # single column (1,1)', y = (3,1)', lambda = 1: (Z'y - sqrt(2))/Z'Z
    Z = np.array([[1.0], [1.0]])
    y = np.array([3.0, 1.0])
    fit = fit_lasso(Z, y, 1.0)
    assert fit.theta_hat[0] == pytest.approx((4.0 - np.sqrt(2.0)) / 2.0, abs=1e-10)


def test_null_threshold_gives_zero():
    rng = np.random.default_rng(0)
    Z, y = _instance(rng, 30, 8)
    lam_max = np.max(np.abs(Z.T @ y)) / np.sqrt(30)
    fit = fit_lasso(Z, y, lam_max * 1.000001)
    assert np.all(fit.theta_hat == 0.0)


def test_zero_penalty_matches_least_squares():
    rng = np.random.default_rng(1)
    Z, y = _instance(rng, 40, 6)
    fit = fit_lasso(Z, y, 0.0)
    ref = np.linalg.lstsq(Z, y, rcond=None)[0]
    np.testing.assert_allclose(fit.theta_hat, ref, atol=1e-8)


def test_zero_penalty_rank_errors():
    rng = np.random.default_rng(2)
    Z = rng.standard_normal((5, 9))
    with pytest.raises(ValueError):
        fit_lasso(Z, rng.standard_normal(5), 0.0)
    Zr = rng.standard_normal((8, 3))
    Zr[:, 2] = Zr[:, 0]
    with pytest.raises(ValueError):
        fit_lasso(Zr, rng.standard_normal(8), 0.0)


def test_brute_force_agreement():
    rng = np.random.default_rng(3)
    for _ in range(12):
        n = int(rng.integers(6, 13))
        d = int(rng.integers(2, 7))
        Z, y = _instance(rng, n, d)
        lam = float(rng.uniform(0.05, 1.0))
        fit = fit_lasso(Z, y, lam)
        ref = brute_force_lasso(Z, y, lam)
        np.testing.assert_allclose(fit.theta_hat, ref, atol=1e-6)


def test_kkt_residual_contract():
    rng = np.random.default_rng(4)
    Z, y = _instance(rng, 50, 10)
    fit = fit_lasso(Z, y, 0.3)
    tol = 1e-8 * (1.0 + np.max(np.abs(Z.T @ y)))
    assert fit.kkt_violation <= tol
    assert kkt_residual(Z, y, fit) == pytest.approx(fit.kkt_violation, abs=1e-12)

    # perturbing an active coordinate breaks stationarity
    active = np.flatnonzero(fit.theta_hat != 0.0)[0]
    theta_bad = fit.theta_hat.copy()
    theta_bad[active] += 0.1
    bad = LassoFit(theta_hat=theta_bad, lam=0.3, iterations=0, kkt_violation=0.0)
    assert kkt_residual(Z, y, bad) > tol

    # all-zero solution under a huge penalty is exactly stationary
    zero = LassoFit(theta_hat=np.zeros(10), lam=1e6, iterations=0, kkt_violation=0.0)
    assert kkt_residual(Z, y, zero) == 0.0


def test_objective_monotone_in_sweeps():
    # exact coordinate minimization can never increase the objective
    rng = np.random.default_rng(5)
    Z, y = _instance(rng, 60, 25)
    lam = 0.2
    import mxpl.lasso as lasso_mod

    G = Z.T @ Z
    b = Z.T @ y
    lam_eff = np.sqrt(60) * lam
    theta = np.zeros(25)
    c = np.zeros(25)
    objs = []
    for _ in range(30):
        lasso_mod._sweep(G, b, c, theta, lam_eff, -1, False)
        objs.append(lasso_objective(Z, y, theta, lam))
    diffs = np.diff(objs)
    assert np.all(diffs <= 1e-10)


def test_warm_start_path_consistency():
    rng = np.random.default_rng(6)
    Z, y = _instance(rng, 80, 20)
    lams = [1.5, 1.0, 0.6, 0.3, 0.15]
    warm = None
    for lam in lams:
        fit_w = fit_lasso(Z, y, lam, theta0=warm)
        warm = fit_w.theta_hat
        fit_c = fit_lasso(Z, y, lam)
        np.testing.assert_allclose(fit_w.theta_hat, fit_c.theta_hat, atol=1e-6)


def test_loo_distill_matches_direct_refits():
    rng = np.random.default_rng(7)
    X = rng.standard_normal((60, 12))
    y = X[:, 2] * 0.8 + rng.standard_normal(60)
    num, rss = distilled_loo_stats(X, y, 0.4)
    for j in (0, 2, 7):
        Xmj = np.delete(X, j, axis=1)
        fit = fit_lasso(Xmj, y, 0.4)
        resid = y - Xmj @ fit.theta_hat
        assert num[j] == pytest.approx(float(resid @ X[:, j]), abs=1e-6)
        assert rss[j] == pytest.approx(float(resid @ resid), abs=1e-6)
