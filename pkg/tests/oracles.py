"""Independent reference implementations used to cross-check the fast paths.

These deliberately use brute force (sign-pattern enumeration, exhaustive
threshold scans) and stay independent of the code they certify.
"""
from __future__ import annotations

import itertools

import numpy as np


def brute_force_lasso(Z: np.ndarray, y: np.ndarray, lam: float) -> np.ndarray:
    """Global lasso minimizer by enumerating sign patterns (d <= ~8).

    For each pattern s in {-1, 0, +1}^d, the candidate solves the equality
    KKT system on the active set, theta_A = (Z_A'Z_A)^{-1}(Z_A'y - c s_A)
    with c = sqrt(n) lam, and is kept if the active signs match and every
    inactive coordinate satisfies |Z_k'(y - Z_A theta_A)| <= c.  The best
    feasible candidate by objective value wins.
    """
    n, d = Z.shape
    c = np.sqrt(n) * lam
    best = None
    best_obj = np.inf
    for signs in itertools.product((-1, 0, 1), repeat=d):
        s = np.array(signs, dtype=float)
        active = np.flatnonzero(s != 0)
        theta = np.zeros(d)
        if active.size:
            ZA = Z[:, active]
            try:
                theta_a = np.linalg.solve(ZA.T @ ZA, ZA.T @ y - c * s[active])
            except np.linalg.LinAlgError:
                continue
            if np.any(np.sign(theta_a) != s[active]):
                continue
            theta[active] = theta_a
        resid = y - Z @ theta
        grad = Z.T @ resid
        inactive = np.flatnonzero(s == 0)
        if inactive.size and np.any(np.abs(grad[inactive]) > c + 1e-7):
            continue
        obj = 0.5 * float(resid @ resid) + c * float(np.sum(np.abs(theta)))
        if obj < best_obj:
            best_obj = obj
            best = theta
    assert best is not None, "no feasible sign pattern found"
    return best


def bh_enumerate(pvals: np.ndarray, q: float) -> set:
    """Step-up rule by scanning k from p down to 1."""
    p = len(pvals)
    order = np.sort(np.asarray(pvals))
    for k in range(p, 0, -1):
        if order[k - 1] <= q * k / p:
            return set(np.flatnonzero(pvals <= order[k - 1]).tolist())
    return set()


def adapt_enumerate(pvals: np.ndarray, q: float, domain_end: float = 1.0) -> set:
    """Intercept-only AdaPT by scanning every candidate threshold."""
    pvals = np.asarray(pvals)
    if domain_end < 1.0:
        cands = sorted({float(t) for t in pvals if t < domain_end}, reverse=True)
    else:
        cands = sorted({float(t) for t in pvals}, reverse=True)
    for t in cands:
        num = 1 + int(np.sum(pvals >= 1.0 - t))
        den = int(np.sum(pvals <= t))
        if den > 0 and num <= q * den:
            return set(np.flatnonzero(pvals <= t).tolist())
    return set()


def knockoff_enumerate(w: np.ndarray, q: float) -> set:
    """Knockoff selection by scanning every nonzero |W| ascending."""
    w = np.asarray(w)
    for t in sorted({float(a) for a in np.abs(w[w != 0.0])}):
        num = 1 + int(np.sum(w <= -t))
        den = int(np.sum(w >= t))
        if den > 0 and num <= q * den:
            return set(np.flatnonzero(w >= t).tolist())
    return set()
