"""Soft thresholding and the lasso state-evolution fixed point.

The pair (alpha, tau) is characterized by

    lambda = alpha * tau * (1 - kappa * E[eta'(B + tau W; alpha tau)])
    tau^2  = sigma^2 + kappa * E[(eta(B + tau W; alpha tau) - B)^2]

with W ~ N(0,1) independent of the coefficient law B.  The ``doubled``
variant models a design augmented with an independent copy of itself:
kappa doubles and B is replaced by I*B with I ~ Bernoulli(1/2).

Expectations over W are evaluated in closed form from normal CDF calls
(the integrands are piecewise quadratics); a Gauss-Hermite path is kept
for cross-checking.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .mixture import SignalMixture

TAU_ITER_TOL = 1e-10
TAU_MAX_ITERS = 10_000
TAU_DAMPING = 0.5
EQ_RESIDUAL_TOL = 1e-9
ALPHA_BRACKET = (0.01, 20.0)
ALPHA_CAP = 64.0


def soft_threshold(x, y):
    """Shrink x toward zero with dead zone [-y, y]."""
    return np.sign(x) * np.maximum(np.abs(x) - y, 0.0)


def _phi(x):
    return np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def _null_mse_unit(alpha: float) -> float:
    """E[eta(W; alpha)^2] for W ~ N(0,1)."""
    return 2.0 * ((1.0 + alpha * alpha) * ndtr(-alpha) - alpha * _phi(alpha))


def _mse_exact(tau: float, alpha: float, values, weights) -> float:
    """E[(eta(B + tau W; alpha tau) - B)^2], exact per atom.

    Split at the dead-zone edges u0 = (-c - b)/tau, u1 = (c - b)/tau with
    c = alpha * tau; each piece is a Gaussian partial moment.
    """
    c = alpha * tau
    b = np.asarray(values)
    u1 = (c - b) / tau
    u0 = (-c - b) / tau
    phi1, phi0 = _phi(u1), _phi(u0)
    cdf1, cdf0 = ndtr(u1), ndtr(u0)
    upper = tau**2 * (u1 * phi1 + 1.0 - cdf1) - 2.0 * c * tau * phi1 + c**2 * (1.0 - cdf1)
    lower = tau**2 * (cdf0 - u0 * phi0) - 2.0 * c * tau * phi0 + c**2 * cdf0
    middle = b**2 * (cdf1 - cdf0)
    return float(np.sum(np.asarray(weights) * (upper + middle + lower)))


def _mse_gauss_hermite(tau: float, alpha: float, values, weights, nodes: int) -> float:
    from scipy.special import roots_hermite

    x, w = roots_hermite(nodes)
    wn = w / math.sqrt(math.pi)
    c = alpha * tau
    total = 0.0
    for b, wt in zip(values, weights):
        z = b + tau * math.sqrt(2.0) * x
        total += wt * float(np.sum(wn * (soft_threshold(z, c) - b) ** 2))
    return total


def state_evolution_mse(
    tau: float,
    alpha: float,
    signal: SignalMixture,
    method: str = "exact",
    nodes: int = 61,
) -> float:
    """E[(eta(B + tau W; alpha tau) - B)^2] for B from the mixture."""
    if method == "exact":
        return _mse_exact(tau, alpha, signal.values, signal.weights)
    if method == "gauss-hermite":
        return _mse_gauss_hermite(tau, alpha, signal.values, signal.weights, nodes)
    raise ValueError(f"unknown method {method!r}")


def eta_prime_expectation(tau: float, alpha: float, signal: SignalMixture) -> float:
    """E[eta'(B + tau W; alpha tau)] = P(|B + tau W| > alpha tau)."""
    b = signal.values
    u1 = (alpha * tau - b) / tau
    u0 = (-alpha * tau - b) / tau
    return float(np.sum(signal.weights * (1.0 - ndtr(u1) + ndtr(u0))))


def _effective(kappa: float, signal: SignalMixture, doubled: bool):
    if doubled:
        return 2.0 * kappa, signal.thinned(0.5)
    return kappa, signal


def alpha_min(kappa: float, sigma2: float, signal: SignalMixture, doubled: bool = False) -> float:
    """Smallest alpha for which the tau fixed point exists."""
    keff, _ = _effective(kappa, signal, doubled)
    if keff * _null_mse_unit(0.0) < 1.0:
        return 0.0
    lo, hi = 0.0, 1.0
    while keff * _null_mse_unit(hi) >= 1.0:
        hi *= 2.0
        if hi > 1e6:
            raise RuntimeError("no admissible alpha")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if keff * _null_mse_unit(mid) >= 1.0:
            lo = mid
        else:
            hi = mid
    return hi


def state_evolution_tau(
    alpha: float,
    kappa: float,
    sigma2: float,
    signal: SignalMixture,
    doubled: bool = False,
    method: str = "exact",
    nodes: int = 61,
) -> float:
    """Unique tau solving tau^2 = sigma^2 + kappa E[(eta(B+tau W; alpha tau)-B)^2].

    The expectation is exact by default; ``method="gauss-hermite"`` swaps in
    quadrature with the given node count for cross-checking.
    """
    keff, mix = _effective(kappa, signal, doubled)
    slope = keff * _null_mse_unit(alpha)
    if slope >= 1.0:
        raise ValueError(
            f"alpha={alpha:g} below the admissible range (kappa_eff * m(alpha) = {slope:g} >= 1)"
        )

    def mse(tau):
        return state_evolution_mse(tau, alpha, mix, method, nodes)

    t = (sigma2 + keff * mix.second_moment()) / (1.0 - slope) + 1.0
    for _ in range(TAU_MAX_ITERS):
        target = sigma2 + keff * mse(math.sqrt(t))
        if abs(target - t) < TAU_ITER_TOL * (1.0 + t):
            return math.sqrt(target)
        t = (1.0 - TAU_DAMPING) * t + TAU_DAMPING * target

    # near-critical alpha: finish off with a bracketed root solve
    from scipy.optimize import brentq

    def f(tt):
        return sigma2 + keff * mse(math.sqrt(tt)) - tt

    lo = sigma2
    hi = max(t, lo) + 1.0
    while f(hi) > 0.0:
        hi *= 2.0
        if hi > 1e18:
            raise RuntimeError("tau fixed point did not converge")
    return math.sqrt(brentq(f, lo, hi, xtol=1e-14, rtol=1e-15))


def lambda_of_alpha(
    alpha: float,
    kappa: float,
    sigma2: float,
    signal: SignalMixture,
    doubled: bool = False,
) -> float:
    keff, mix = _effective(kappa, signal, doubled)
    tau = state_evolution_tau(alpha, kappa, sigma2, signal, doubled)
    return alpha * tau * (1.0 - keff * eta_prime_expectation(tau, alpha, mix))


@dataclass(frozen=True)
class AmpSolution:
    """State-evolution solution (alpha, tau) at a given lambda."""

    alpha: float
    tau: float
    lam: float
    doubled: bool
    kappa: float
    sigma2: float
    signal: SignalMixture

    def residuals(self) -> tuple[float, float]:
        keff, mix = _effective(self.kappa, self.signal, self.doubled)
        eq1 = abs(
            self.lam
            - self.alpha
            * self.tau
            * (1.0 - keff * eta_prime_expectation(self.tau, self.alpha, mix))
        )
        eq2 = abs(
            self.tau**2
            - self.sigma2
            - keff * _mse_exact(self.tau, self.alpha, mix.values, mix.weights)
        )
        return eq1, eq2


def _package(alpha, kappa, sigma2, signal, doubled) -> AmpSolution:
    tau = state_evolution_tau(alpha, kappa, sigma2, signal, doubled)
    lam = lambda_of_alpha(alpha, kappa, sigma2, signal, doubled)
    sol = AmpSolution(
        alpha=alpha, tau=tau, lam=lam, doubled=doubled,
        kappa=kappa, sigma2=sigma2, signal=signal,
    )
    eq1, eq2 = sol.residuals()
    scale = 1.0 + abs(lam) + tau**2
    if max(eq1, eq2) > EQ_RESIDUAL_TOL * scale:
        raise RuntimeError(f"fixed-point residuals too large: {eq1:g}, {eq2:g}")
    return sol


def solve_fixed_point(
    lam: float,
    kappa: float,
    sigma2: float,
    signal: SignalMixture,
    doubled: bool = False,
) -> AmpSolution:
    """Find alpha such that lambda(alpha) equals the requested lambda."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    amin = alpha_min(kappa, sigma2, signal, doubled)
    lo = max(ALPHA_BRACKET[0], amin * (1.0 + 1e-9) + 1e-12)
    hi = max(ALPHA_BRACKET[1], lo * 2.0)

    def lam_at(a):
        return lambda_of_alpha(a, kappa, sigma2, signal, doubled)

    while lam_at(hi) < lam:
        hi *= 2.0
        if hi > 1e8:
            raise ValueError(f"lambda={lam:g} above the achievable range")
    floor = amin * (1.0 + 1e-9) + 1e-12
    while lam_at(lo) > lam:
        nxt = max(lo / 2.0, 0.5 * (lo + floor))
        if abs(nxt - lo) < 1e-13:
            raise ValueError(f"lambda={lam:g} below the achievable range")
        lo = nxt
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if lam_at(mid) < lam:
            lo = mid
        else:
            hi = mid
    sol = _package(0.5 * (lo + hi), kappa, sigma2, signal, doubled)
    if abs(sol.lam - lam) > 1e-8 * (1.0 + lam):
        raise RuntimeError(f"alpha inversion missed lambda: {sol.lam:g} vs {lam:g}")
    return sol


def min_tau_over_lambda(
    kappa: float,
    sigma2: float,
    signal: SignalMixture,
    doubled: bool = False,
) -> AmpSolution:
    """Solution minimizing tau over lambda (golden-section search on alpha)."""
    amin = alpha_min(kappa, sigma2, signal, doubled)
    lo = amin * (1.0 + 1e-6) + 1e-6

    def tau_at(a):
        return state_evolution_tau(a, kappa, sigma2, signal, doubled)

    hi = max(2.0 * lo, 1.0)
    while hi < ALPHA_CAP and tau_at(hi) <= tau_at(0.5 * hi):
        hi *= 2.0
    hi = min(hi, ALPHA_CAP)

    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = tau_at(c), tau_at(d)
    for _ in range(120):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = tau_at(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = tau_at(d)
        if b - a < 1e-10 * (1.0 + b):
            break
    return _package(0.5 * (a + b), kappa, sigma2, signal, doubled)


def tau_at_infinite_lambda(kappa: float, sigma2: float, signal: SignalMixture,
                           doubled: bool = False) -> float:
    """Large-lambda limit: thresholding kills every coordinate, so
    tau^2 -> sigma^2 + kappa E[B^2]."""
    keff, mix = _effective(kappa, signal, doubled)
    return math.sqrt(sigma2 + keff * mix.second_moment())


def empirical_se_check(dataset, lam: float) -> tuple[float, float]:
    """Empirical counterparts of the two training-loss limits.

    Fits the lasso of y on the nuisance block at lambda and returns
    ``(||resid||^2 / n, resid . noise / n)`` where noise = y - Z theta_true;
    their limits are lambda^2/alpha^2 and lambda sigma^2/(alpha tau).
    """
    from .lasso import fit_lasso

    if not dataset.is_focal:
        raise ValueError("needs a focal-view dataset with stored truth")
    n = dataset.labeled_n
    Z = dataset.Z[:n]
    y = dataset.y
    fit = fit_lasso(Z, y, lam)
    resid = y - Z @ fit.theta_hat
    theta_true = dataset.beta_truth[1:] / math.sqrt(n)
    noise = y - Z[:, : theta_true.shape[0]] @ theta_true
    return float(resid @ resid) / n, float(resid @ noise) / n
