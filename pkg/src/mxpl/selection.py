"""BH and intercept-only AdaPT selection over p-value vectors."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class SelectionResult:
    selected: np.ndarray
    threshold: float
    fdp: Optional[float] = None
    power: Optional[float] = None


def evaluate(selected: np.ndarray, beta_truth: np.ndarray) -> tuple[float, float]:
    """Realized (FDP, power) of a selection against ground truth.

    Both ratios use the 0/0 := 0 convention via the max(., 1) denominators.
    """
    selected = np.asarray(selected, dtype=int)
    if selected.size and (selected.min() < 0 or selected.max() >= beta_truth.shape[0]):
        raise IndexError("selected index out of range")
    nonnull = beta_truth != 0.0
    n_sel = selected.shape[0]
    n_true = int(np.sum(nonnull[selected]))
    fdp = (n_sel - n_true) / max(n_sel, 1)
    power = n_true / max(int(np.sum(nonnull)), 1)
    return fdp, power


def _package(pvals, selected, threshold, beta_truth) -> SelectionResult:
    if beta_truth is None:
        return SelectionResult(selected=selected, threshold=threshold)
    fdp, power = evaluate(selected, beta_truth)
    return SelectionResult(selected=selected, threshold=threshold, fdp=fdp, power=power)


def bh(pvals: np.ndarray, q: float, beta_truth: Optional[np.ndarray] = None) -> SelectionResult:
    """Step-up procedure: reject the k smallest p-values for the largest k
    with ``p_(k) <= k q / p``."""
    pvals = np.asarray(pvals, dtype=float)
    _check(pvals, q)
    p = pvals.shape[0]
    order = np.sort(pvals)
    ok = np.flatnonzero(order <= q * np.arange(1, p + 1) / p)
    if ok.size == 0:
        return _package(pvals, np.array([], dtype=int), 0.0, beta_truth)
    threshold = order[ok[-1]]
    return _package(pvals, np.flatnonzero(pvals <= threshold), float(threshold), beta_truth)


def adapt(
    pvals: np.ndarray,
    q: float,
    domain_end: float = 1.0,
    beta_truth: Optional[np.ndarray] = None,
) -> SelectionResult:
    """Intercept-only AdaPT: reject all p-values at or below

        t_hat = max{t : (1 + #{p_j >= 1 - t}) / #{p_j <= t} <= q}.

    The max is attained at an observed p-value (or 0), so only those are
    evaluated.  ``domain_end < 1`` restricts candidates to the half-open
    window [0, domain_end), which realizes the knockoff-filter comparison;
    the default searches all of [0, 1].
    """
    pvals = np.asarray(pvals, dtype=float)
    _check(pvals, q)
    if not 0.0 < domain_end <= 1.0:
        raise ValueError("domain_end must be in (0, 1]")
    if domain_end < 1.0:
        candidates = np.unique(pvals[pvals < domain_end])
    else:
        candidates = np.unique(pvals)
    t_hat = None
    for t in candidates[::-1]:
        num = 1 + int(np.sum(pvals >= 1.0 - t))
        den = int(np.sum(pvals <= t))
        if den > 0 and num / den <= q:
            t_hat = float(t)
            break
    if t_hat is None:
        return _package(pvals, np.array([], dtype=int), 0.0, beta_truth)
    return _package(pvals, np.flatnonzero(pvals <= t_hat), t_hat, beta_truth)


def _check(pvals: np.ndarray, q: float) -> None:
    if pvals.ndim != 1:
        raise ValueError("p-values must be a vector")
    if np.any((pvals < 0) | (pvals > 1)):
        raise ValueError("p-values must lie in [0, 1]")
    if not 0.0 < q < 1.0:
        raise ValueError("q must be in (0, 1)")
