"""Cyclic coordinate descent for the lasso program.

Solves ``min_theta 0.5 * ||Y - Z theta||^2 + sqrt(n) * lambda * ||theta||_1``;
the penalty is always on this sqrt(n)-scaled convention.  The solver works on
the Gram matrix so that repeated fits on the same design (warm starts,
leave-one-column-out refits) cost nothing in the sample dimension.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import config as _numba_config
from numba import njit, prange

# the default tbb probe warns on older TBB runtimes; workqueue is always built
_numba_config.THREADING_LAYER = "workqueue"

MAX_SWEEPS = 100_000
UPDATE_TOL = 1e-10


def _kkt_tol(b: np.ndarray) -> float:
    return 1e-8 * (1.0 + float(np.max(np.abs(b))))


@dataclass
class LassoFit:
    theta_hat: np.ndarray
    lam: float
    iterations: int
    kkt_violation: float


@njit(cache=True)
def _kkt_from_state(b, c, theta, lam, skip):
    """Max stationarity violation given c = G @ theta."""
    worst = 0.0
    for k in range(b.shape[0]):
        if k == skip:
            continue
        g = b[k] - c[k]
        if theta[k] == 0.0:
            v = abs(g) - lam
            if v < 0.0:
                v = 0.0
        elif theta[k] > 0.0:
            v = abs(g - lam)
        else:
            v = abs(g + lam)
        if v > worst:
            worst = v
    return worst


@njit(cache=True)
def _sweep(G, b, c, theta, lam, skip, active_only):
    """One pass of coordinate updates; returns the max coordinate change."""
    p = b.shape[0]
    max_delta = 0.0
    for k in range(p):
        if k == skip:
            continue
        old = theta[k]
        if active_only and old == 0.0:
            continue
        gkk = G[k, k]
        if gkk <= 0.0:
            continue
        rho = b[k] - c[k] + gkk * old
        if rho > lam:
            new = (rho - lam) / gkk
        elif rho < -lam:
            new = (rho + lam) / gkk
        else:
            new = 0.0
        diff = new - old
        if diff != 0.0:
            theta[k] = new
            for l in range(p):
                c[l] += diff * G[l, k]
            if abs(diff) > max_delta:
                max_delta = abs(diff)
    return max_delta


@njit(cache=True)
def _gram_cd(G, b, lam, theta, c, skip, max_sweeps, kkt_tol):
    """Coordinate descent on the Gram system; theta and c updated in place.

    c must equal G @ theta on entry.  Full passes admit new active
    coordinates; cheap active-set passes do the polishing, with the exact
    KKT residual (O(p) given c) checked after every pass.
    Returns (sweeps, kkt_violation).
    """
    sweeps = 0
    kkt = _kkt_from_state(b, c, theta, lam, skip)
    if kkt < kkt_tol:
        return sweeps, kkt
    while sweeps < max_sweeps:
        delta = _sweep(G, b, c, theta, lam, skip, False)
        sweeps += 1
        kkt = _kkt_from_state(b, c, theta, lam, skip)
        if kkt < kkt_tol or delta < UPDATE_TOL:
            return sweeps, kkt
        while sweeps < max_sweeps:
            delta = _sweep(G, b, c, theta, lam, skip, True)
            sweeps += 1
            kkt = _kkt_from_state(b, c, theta, lam, skip)
            if kkt < kkt_tol:
                return sweeps, kkt
            if delta < UPDATE_TOL:
                break
    return sweeps, _kkt_from_state(b, c, theta, lam, skip)


@njit(cache=True, parallel=True)
def _loo_distill(G, b, yty, lam, theta_full, c_full, max_sweeps, kkt_tol):
    """Leave-one-column-out lasso refits for every column.

    For each j, solves the lasso with column j removed (warm-started from the
    full-design solution) and returns the residual correlation with column j
    and the residual sum of squares:

        num[j] = Z_j' (Y - Z_{-j} theta_hat^{(-j)})
        rss[j] = ||Y - Z_{-j} theta_hat^{(-j)}||^2
    """
    p = b.shape[0]
    num = np.empty(p)
    rss = np.empty(p)
    for j in prange(p):
        theta = theta_full.copy()
        c = c_full.copy()
        if theta[j] != 0.0:
            d = theta[j]
            for l in range(p):
                c[l] -= d * G[l, j]
            theta[j] = 0.0
        _gram_cd(G, b, lam, theta, c, j, max_sweeps, kkt_tol)
        num[j] = b[j] - c[j]
        dot_bt = 0.0
        dot_tc = 0.0
        for l in range(p):
            dot_bt += b[l] * theta[l]
            dot_tc += theta[l] * c[l]
        rss[j] = yty - 2.0 * dot_bt + dot_tc
    return num, rss


def fit_lasso_gram(
    G: np.ndarray,
    b: np.ndarray,
    lam_eff: float,
    theta0: np.ndarray | None = None,
) -> tuple[np.ndarray, int, float]:
    """Solve ``min 0.5 theta' G theta - b' theta + lam_eff ||theta||_1``."""
    p = b.shape[0]
    theta = np.zeros(p) if theta0 is None else np.asarray(theta0, dtype=float).copy()
    c = G @ theta if theta0 is not None else np.zeros(p)
    sweeps, kkt = _gram_cd(G, b, lam_eff, theta, c, -1, MAX_SWEEPS, _kkt_tol(b))
    if kkt >= max(_kkt_tol(b), UPDATE_TOL) and sweeps >= MAX_SWEEPS:
        raise RuntimeError(f"lasso did not converge: kkt={kkt:g} after {sweeps} sweeps")
    return theta, sweeps, kkt


def fit_lasso(
    Z: np.ndarray,
    Y: np.ndarray,
    lam: float,
    theta0: np.ndarray | None = None,
) -> LassoFit:
    """Lasso fit of Y on Z at penalty ``sqrt(n) * lam * ||theta||_1``."""
    Z = np.asarray(Z, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if Z.ndim != 2 or Y.ndim != 1 or Z.shape[0] != Y.shape[0]:
        raise ValueError("Z must be n x d and Y length n")
    n, d = Z.shape
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    if lam == 0.0:
        if d > n:
            raise ValueError("lambda = 0 requires d <= n")
        theta, _, rank, _ = np.linalg.lstsq(Z, Y, rcond=None)
        if rank < d:
            raise ValueError("lambda = 0 requires full column rank")
        return LassoFit(theta_hat=theta, lam=0.0, iterations=0, kkt_violation=0.0)
    lam_eff = np.sqrt(n) * lam
    G = Z.T @ Z
    b = Z.T @ Y
    theta, sweeps, kkt = fit_lasso_gram(G, b, lam_eff, theta0)
    return LassoFit(theta_hat=theta, lam=lam, iterations=sweeps, kkt_violation=kkt)


def kkt_residual(Z: np.ndarray, Y: np.ndarray, fit: LassoFit) -> float:
    """Max stationarity violation of a candidate solution.

    Zero-coordinate stationarity allows ``|Z_j'(Y - Z theta)| <= sqrt(n) lam``;
    active coordinates must hit the bound with the matching sign.
    """
    Z = np.asarray(Z, dtype=float)
    Y = np.asarray(Y, dtype=float)
    theta = np.asarray(fit.theta_hat, dtype=float)
    if Z.shape[1] != theta.shape[0] or Z.shape[0] != Y.shape[0]:
        raise ValueError("dimension mismatch")
    lam_eff = np.sqrt(Z.shape[0]) * fit.lam
    g = Z.T @ (Y - Z @ theta)
    viol = np.where(
        theta == 0.0,
        np.maximum(np.abs(g) - lam_eff, 0.0),
        np.abs(g - lam_eff * np.sign(theta)),
    )
    return float(np.max(viol)) if viol.size else 0.0


def lasso_objective(Z: np.ndarray, Y: np.ndarray, theta: np.ndarray, lam: float) -> float:
    r = Y - Z @ theta
    return 0.5 * float(r @ r) + np.sqrt(Z.shape[0]) * lam * float(np.sum(np.abs(theta)))


def distilled_loo_stats(
    X: np.ndarray, y: np.ndarray, lam: float
) -> tuple[np.ndarray, np.ndarray]:
    """Residual correlations and RSS of every leave-one-column-out lasso.

    Returns ``(num, rss)`` where ``num[j] = X_j'(y - X_{-j} theta^{(-j)})`` and
    ``rss[j]`` is the corresponding residual sum of squares.  The refits are
    warm-started from the full-design fit, which makes the all-columns pass
    cheap enough for the multiple-testing engine.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = X.shape[0]
    lam_eff = np.sqrt(n) * lam
    G = X.T @ X
    b = X.T @ y
    yty = float(y @ y)
    theta_full, _, _ = fit_lasso_gram(G, b, lam_eff)
    c_full = G @ theta_full
    return _loo_distill(G, b, yty, lam_eff, theta_full, c_full, MAX_SWEEPS, _kkt_tol(b))
