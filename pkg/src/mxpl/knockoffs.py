"""Knockoff filter with i.i.d.-copy knockoffs.

With independent standard normal covariates a valid knockoff matrix is just
an independent copy of the design.  Variable importances come in
(original, knockoff) pairs and are combined by an antisymmetric function;
selection applies the data-dependent threshold on the resulting W vector.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .lasso import fit_lasso_gram
from .model_gen import replicate_rng

DIFFERENCE = "difference"
ABS_DIFFERENCE = "abs_difference"


@dataclass(frozen=True)
class WVector:
    w: np.ndarray
    stat_kind: str
    antisym: str

    def __post_init__(self):
        if not np.all(np.isfinite(self.w)):
            raise ValueError("W statistics must be finite")


_KNOCKOFF_STREAM = 3  # keeps knockoff draws off the data stream at equal seeds


def sample_knockoffs_iid(X: np.ndarray, seed: int = 0) -> np.ndarray:
    """Independent copy of an i.i.d. standard normal design."""
    rng = replicate_rng(seed, _KNOCKOFF_STREAM)
    return rng.standard_normal(X.shape)


def _combine(T: np.ndarray, T_tilde: np.ndarray, antisym: str) -> np.ndarray:
    if antisym == DIFFERENCE:
        return T - T_tilde
    if antisym == ABS_DIFFERENCE:
        return np.abs(T) - np.abs(T_tilde)
    raise ValueError(f"unknown antisymmetric function {antisym!r}")


def augmented_gram(X: np.ndarray, X_tilde: np.ndarray, y: np.ndarray):
    """Gram matrix and covariance vector of the [X, X_tilde] design."""
    A = np.concatenate([X, X_tilde], axis=1)
    return A.T @ A, A.T @ y


def w_statistics(
    X: np.ndarray,
    X_tilde: np.ndarray,
    y: np.ndarray,
    stat_kind: str,
    antisym: str = ABS_DIFFERENCE,
    lam: Optional[float] = None,
    gram: Optional[tuple] = None,
) -> WVector:
    """W vector for one of the three importance statistics.

    ``stat_kind`` is "mc" (T_j = X_j'y / sqrt(n)), "ols" (sqrt(n) times the
    coefficients of y on [X, X_tilde], needs 2p < n), or "lasso" (sqrt(n)
    times the lasso coefficients on [X, X_tilde] at penalty lam).  ``gram``
    optionally carries a precomputed ``augmented_gram`` result.
    """
    n, p = X.shape
    if X_tilde.shape != X.shape:
        raise ValueError("knockoffs must match the design shape")
    sqrt_n = math.sqrt(n)
    if stat_kind == "mc":
        T = (X.T @ y) / sqrt_n
        T_tilde = (X_tilde.T @ y) / sqrt_n
    elif stat_kind == "ols":
        if 2 * p >= n:
            raise ValueError("OLS importance needs 2p < n")
        G, b = augmented_gram(X, X_tilde, y) if gram is None else gram
        coef = np.linalg.solve(G, b)
        T = sqrt_n * coef[:p]
        T_tilde = sqrt_n * coef[p:]
    elif stat_kind == "lasso":
        if lam is None or lam <= 0:
            raise ValueError("lasso importance needs lambda > 0")
        G, b = augmented_gram(X, X_tilde, y) if gram is None else gram
        theta, _, _ = fit_lasso_gram(G, b, sqrt_n * lam)
        T = sqrt_n * theta[:p]
        T_tilde = sqrt_n * theta[p:]
    else:
        raise ValueError(f"unknown statistic kind {stat_kind!r}")
    return WVector(w=_combine(T, T_tilde, antisym), stat_kind=stat_kind, antisym=antisym)


def knockoff_threshold(w, q: float) -> tuple[float, np.ndarray]:
    """Selection threshold and selected index set.

    ``w_hat`` is the smallest candidate (nonzero |W_j|) whose estimated FDP
    ``(1 + #{W_j <= -w}) / #{W_j >= w}`` is at most q; selection keeps
    ``{j : W_j >= w_hat}``.  Exact zeros never enter the candidate set and are
    never selected.  Returns ``(inf, empty)`` when no candidate qualifies.
    """
    if not 0.0 < q < 1.0:
        raise ValueError("q must be in (0, 1)")
    wv = w.w if isinstance(w, WVector) else np.asarray(w, dtype=float)
    candidates = np.unique(np.abs(wv[wv != 0.0]))
    for t in candidates:
        num = 1 + int(np.sum(wv <= -t))
        den = int(np.sum(wv >= t))
        if den > 0 and num / den <= q:
            return float(t), np.flatnonzero(wv >= t)
    return math.inf, np.array([], dtype=int)
