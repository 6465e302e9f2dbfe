"""Conditional randomization tests for a Gaussian focal covariate.

The focal column is exchangeable with fresh N(0, I_n) draws given everything
else, so every test here is exact at any sample size: either the statistic's
conditional null law is an explicit Gaussian (marginal covariance, distilled
lasso) or the cutoff comes from resampling with the finite-sample correction
``p = (1 + #{resampled >= observed}) / (M + 1)``.

The conditional variant replaces fresh draws with the conditional law of the
focal column given a sufficient statistic of the design, which lets the test
run when the covariate model is known only up to a Gaussian linear form; the
price is that only the component orthogonal to the nuisance block remains
random, and the test degenerates when the design has no residual degrees of
freedom.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import ndtr

from .lasso import distilled_loo_stats, fit_lasso
from .model_gen import Dataset, replicate_rng

ONE_SIDED = "one_sided_upper"
TWO_SIDED = "two_sided"

# sub-stream indices so resampling draws never collide with the data stream
# generated from the same seed
_RESAMPLE_STREAM = 1
_SPHERE_STREAM = 2


@dataclass(frozen=True)
class CrtStatKind:
    """Statistic selector: marginal covariance, OLS coefficient, or
    distilled lasso at a fixed penalty."""

    kind: str
    lam: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("mc", "ols", "distilled"):
            raise ValueError(f"unknown statistic kind {self.kind!r}")
        if self.kind == "distilled":
            if self.lam is None or self.lam <= 0:
                raise ValueError("distilled statistic needs lambda > 0")
        elif self.lam is not None:
            raise ValueError("lambda only applies to the distilled statistic")


MC = CrtStatKind("mc")
OLS = CrtStatKind("ols")


def distilled(lam: float) -> CrtStatKind:
    return CrtStatKind("distilled", lam)


@dataclass(frozen=True)
class PValue:
    value: float
    sided: str
    method: str
    resamples: Optional[int] = None
    degenerate: bool = False

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError("p-value outside [0, 1]")
        if self.sided not in (ONE_SIDED, TWO_SIDED):
            raise ValueError(f"unknown sidedness {self.sided!r}")


def _gaussian_p(t: float, sd: float, sided: str) -> float:
    z = t / sd
    if sided == ONE_SIDED:
        return float(ndtr(-z))
    return float(2.0 * ndtr(-abs(z)))


def _resampled_p(t: float, t_res: np.ndarray, sided: str) -> float:
    if sided == ONE_SIDED:
        count = int(np.sum(t_res >= t))
    else:
        count = int(np.sum(np.abs(t_res) >= abs(t)))
    return (1.0 + count) / (t_res.shape[0] + 1.0)


def stat_mc(x: np.ndarray, y: np.ndarray) -> float:
    """Marginal covariance estimate y'x / n."""
    if x.shape != y.shape:
        raise ValueError("x and y must have equal length")
    return float(y @ x) / x.shape[0]


def stat_ols(x: np.ndarray, Z: Optional[np.ndarray], y: np.ndarray) -> float:
    """sqrt(n) times the focal OLS coefficient, via the projection ratio."""
    n = x.shape[0]
    if Z is None or Z.shape[1] == 0:
        px = x
    else:
        if Z.shape[1] + 1 >= n:
            raise ValueError("OLS needs p < n")
        Q, R = np.linalg.qr(Z)
        if np.min(np.abs(np.diag(R))) < 1e-10 * max(np.abs(np.diag(R)).max(), 1.0):
            raise np.linalg.LinAlgError("nuisance block is rank deficient")
        px = x - Q @ (Q.T @ x)
    denom = float(px @ x)
    if denom <= 0:
        raise np.linalg.LinAlgError("focal column lies in the span of Z")
    return math.sqrt(n) * float(px @ y) / denom


def stat_distilled(x: np.ndarray, Z: np.ndarray, y: np.ndarray, lam: float) -> float:
    """Covariance of the focal column with the lasso residual of y on Z."""
    fit = fit_lasso(Z, y, lam)
    resid = y - Z @ fit.theta_hat
    return float(resid @ x) / x.shape[0]


def _labeled_views(dataset: Dataset):
    if not dataset.is_focal:
        raise ValueError("CRT operations need the focal view")
    n = dataset.labeled_n
    return dataset.focal_x[:n], dataset.Z[:n], dataset.y


def crt_pvalue_analytic(kind: CrtStatKind, dataset: Dataset, sided: str = ONE_SIDED) -> PValue:
    """Exact p-value from the Gaussian conditional null law of the statistic.

    Available for the marginal covariance (null sd ||y||/n) and the distilled
    lasso (null sd ||y - Z theta_hat||/n); the OLS ratio has no closed-form
    conditional law and must use resampling.
    """
    x, Z, y = _labeled_views(dataset)
    n = y.shape[0]
    if kind.kind == "mc":
        t = stat_mc(x, y)
        sd = float(np.linalg.norm(y)) / n
    elif kind.kind == "distilled":
        fit = fit_lasso(Z, y, kind.lam)
        resid = y - Z @ fit.theta_hat
        t = float(resid @ x) / n
        sd = float(np.linalg.norm(resid)) / n
    else:
        raise ValueError("no analytic null law for the OLS statistic; resample instead")
    return PValue(_gaussian_p(t, sd, sided), sided, "analytic")


def crt_pvalue_resampling(
    kind: CrtStatKind,
    dataset: Dataset,
    M: int = 999,
    sided: str = ONE_SIDED,
    seed: int = 0,
) -> PValue:
    """Exact p-value from M fresh focal-column draws."""
    if M < 19:
        raise ValueError("use at least 19 resamples")
    x, Z, y = _labeled_views(dataset)
    n = y.shape[0]
    rng = replicate_rng(seed, _RESAMPLE_STREAM)
    xt = rng.standard_normal((n, M))
    if kind.kind == "mc":
        t = stat_mc(x, y)
        t_res = (y @ xt) / n
    elif kind.kind == "distilled":
        fit = fit_lasso(Z, y, kind.lam)
        resid = y - Z @ fit.theta_hat
        t = float(resid @ x) / n
        t_res = (resid @ xt) / n
    else:
        if Z.shape[1] + 1 >= n:
            raise ValueError("OLS needs p < n")
        Q, _ = np.linalg.qr(Z)
        px = x - Q @ (Q.T @ x)
        py = y - Q @ (Q.T @ y)
        t = math.sqrt(n) * float(px @ y) / float(px @ x)
        pxt = xt - Q @ (Q.T @ xt)
        num = py @ xt
        den = np.einsum("ij,ij->j", pxt, xt)
        t_res = math.sqrt(n) * num / den
    return PValue(_resampled_p(t, t_res, sided), sided, "resampled", resamples=M)


@dataclass(frozen=True)
class ConditionalProjection:
    """Cached projection quantities for one design (Z_*, x_*).

    ``v = (I - H) x_*`` with H the hat matrix of Z_*; reusable across
    responses sharing the design.
    """

    v: np.ndarray
    chol: np.ndarray
    Z_labeled: np.ndarray
    dof: int


def conditional_projection(Z_star: np.ndarray, x_star: np.ndarray, labeled_n: int) -> ConditionalProjection:
    n_star, d = Z_star.shape
    dof = n_star - d
    if dof <= 0:
        return ConditionalProjection(
            v=np.zeros(n_star), chol=np.empty((0, 0)), Z_labeled=Z_star[:labeled_n], dof=dof
        )
    G = Z_star.T @ Z_star
    L = np.linalg.cholesky(G)
    w = np.linalg.solve(L.T, np.linalg.solve(L, Z_star.T @ x_star))
    v = x_star - Z_star @ w
    return ConditionalProjection(v=v, chol=L, Z_labeled=Z_star[:labeled_n], dof=dof)


def conditional_crt_unlabeled(
    dataset: Dataset,
    known_variance: bool = True,
    M: int = 999,
    sided: str = ONE_SIDED,
    seed: int = 0,
    projection: Optional[ConditionalProjection] = None,
) -> PValue:
    """CRT that conditions on the sufficient statistic of the focal model.

    The essential statistic is ``T = y' [(I - H) x_*]`` restricted to labeled
    rows, where H projects onto the span of all (labeled plus unlabeled)
    nuisance rows.  With the focal conditional variance known the null law is
    ``N(0, y'(I - H)y)`` on the labeled block; otherwise the residual
    direction is resampled uniformly on the sphere given its length.

    When the design has no residual degrees of freedom the conditioning
    determines the focal column exactly and the test returns p = 1 with the
    degenerate flag set.
    """
    if not dataset.is_focal:
        raise ValueError("conditional CRT needs the focal view")
    n = dataset.labeled_n
    y = dataset.y
    proj = projection
    if proj is None:
        proj = conditional_projection(dataset.Z, dataset.focal_x, n)
    if proj.dof <= 0:
        return PValue(1.0, sided, "analytic" if known_variance else "resampled",
                      resamples=None if known_variance else M, degenerate=True)

    t = float(y @ proj.v[:n])
    u = np.linalg.solve(proj.chol, proj.Z_labeled.T @ y)
    s0_sq = float(y @ y) - float(u @ u)
    s0_sq = max(s0_sq, 1e-300)

    if known_variance:
        return PValue(_gaussian_p(t, math.sqrt(s0_sq), sided), sided, "analytic")

    r_sq = float(proj.v @ proj.v)
    rng = replicate_rng(seed, _SPHERE_STREAM)
    g1 = rng.standard_normal(M)
    rest = rng.chisquare(proj.dof - 1, M) if proj.dof > 1 else np.zeros(M)
    unit = g1 / np.sqrt(g1**2 + rest)
    t_res = math.sqrt(r_sq * s0_sq) * unit
    return PValue(_resampled_p(t, t_res, sided), sided, "resampled", resamples=M)


# ---------------------------------------------------------------------------
# exact OLS p-values by quadrature
#
# Under resampling, the OLS statistic given (y, nuisance block) is
# sqrt(n) ||a|| Z1 / (Z1^2 + S) with a the projection of y off the nuisance
# span, Z1 ~ N(0,1), and S an independent chi-square with one fewer degree
# of freedom than the projection rank.  Integrating Z1 out analytically
# (the event is a quadratic inequality) leaves a one-dimensional smooth
# integral over S, so the resampling law can be evaluated to quadrature
# accuracy instead of Monte Carlo accuracy.

_OLS_QUAD_NODES = 200


def _ols_exact_upper(t_obs: np.ndarray, c2: np.ndarray, k: int) -> np.ndarray:
    """P(sqrt(c2) Z1 / (Z1^2 + S) >= t) for S ~ chi2_k, vectorized over t.

    ``c2`` is n ||a||^2 per coordinate; ``t`` must be positive.
    """
    from scipy.stats import chi2

    t = np.asarray(t_obs, dtype=float)
    c2 = np.asarray(c2, dtype=float)
    nodes, wts = np.polynomial.legendre.leggauss(_OLS_QUAD_NODES)
    nodes = 0.5 * (nodes + 1.0)
    wts = 0.5 * wts
    lo = chi2.ppf(1e-14, k)
    hi = chi2.ppf(1.0 - 1e-14, k)
    cut = c2 / (4.0 * t * t)
    out = np.zeros_like(t)

    free = cut >= hi
    if np.any(free):
        s = lo + (hi - lo) * nodes  # shared nodes; no truncation
        dens = chi2.pdf(s, k) * (hi - lo)
        disc = np.sqrt(np.maximum(c2[free, None] - 4.0 * t[free, None] ** 2 * s[None, :], 0.0))
        zp = (np.sqrt(c2[free, None]) + disc) / (2.0 * t[free, None])
        zm = (np.sqrt(c2[free, None]) - disc) / (2.0 * t[free, None])
        out[free] = np.sum((wts * dens)[None, :] * (ndtr(zp) - ndtr(zm)), axis=1)

    trunc = (~free) & (cut > lo)
    if np.any(trunc):
        # substitute S = cut - u^2 so the square-root endpoint is smooth
        umax = np.sqrt(cut[trunc] - lo)
        u = umax[:, None] * nodes[None, :]
        s = cut[trunc, None] - u * u
        dens = chi2.pdf(s, k) * 2.0 * u * umax[:, None]
        disc = 2.0 * t[trunc, None] * u
        zp = (np.sqrt(c2[trunc, None]) + disc) / (2.0 * t[trunc, None])
        zm = (np.sqrt(c2[trunc, None]) - disc) / (2.0 * t[trunc, None])
        out[trunc] = np.sum(wts[None, :] * dens * (ndtr(zp) - ndtr(zm)), axis=1)
    return np.clip(out, 0.0, 1.0)


def _ols_exact_pvalues(t_obs: np.ndarray, a_norm2: np.ndarray, n: int, k: int, sided: str) -> np.ndarray:
    t = np.asarray(t_obs, dtype=float)
    c2 = n * np.asarray(a_norm2, dtype=float)
    if sided == TWO_SIDED:
        att = np.abs(t)
        p = 2.0 * _ols_exact_upper(np.where(att > 0, att, 1.0), c2, k)
        return np.where(att > 0, np.minimum(p, 1.0), 1.0)
    pos = t > 0
    out = np.full(t.shape, 0.5)
    if np.any(pos):
        out[pos] = _ols_exact_upper(t[pos], c2[pos], k)
    neg = t < 0
    if np.any(neg):
        out[neg] = 1.0 - _ols_exact_upper(-t[neg], c2[neg], k)
    return out


def crt_pvalue_ols_exact(dataset: Dataset, sided: str = ONE_SIDED) -> PValue:
    """OLS-statistic CRT p-value from the exact resampling law (no draws)."""
    x, Z, y = _labeled_views(dataset)
    n = y.shape[0]
    d = Z.shape[1]
    if d + 1 >= n:
        raise ValueError("OLS needs p < n")
    Q, _ = np.linalg.qr(Z)
    py = y - Q @ (Q.T @ y)
    px = x - Q @ (Q.T @ x)
    t = math.sqrt(n) * float(px @ y) / float(px @ x)
    k = (n - d) - 1  # projection rank minus the direction of a
    p = _ols_exact_pvalues(np.array([t]), np.array([float(py @ y)]), n, k, sided)
    return PValue(float(p[0]), sided, "quadrature")


# ---------------------------------------------------------------------------
# vectorized p-values for every column of a full-matrix dataset


def _gaussian_p_vec(z: np.ndarray, sided: str) -> np.ndarray:
    if sided == ONE_SIDED:
        return ndtr(-z)
    return 2.0 * ndtr(-np.abs(z))


def crt_pvalues_mc(X: np.ndarray, y: np.ndarray, sided: str = TWO_SIDED) -> np.ndarray:
    """Analytic marginal-covariance CRT p-value for every column."""
    t = X.T @ y
    return _gaussian_p_vec(t / np.linalg.norm(y), sided)


def crt_pvalues_distilled(
    X: np.ndarray, y: np.ndarray, lam: float, sided: str = TWO_SIDED
) -> np.ndarray:
    """Analytic distilled-lasso CRT p-value for every column.

    Exactness requires the lasso fit for column j to exclude column j, so
    this runs one leave-one-column-out refit per coordinate (warm-started).
    """
    num, rss = distilled_loo_stats(X, y, lam)
    return _gaussian_p_vec(num / np.sqrt(rss), sided)


def crt_pvalues_ols_exact(X: np.ndarray, y: np.ndarray, sided: str = TWO_SIDED) -> np.ndarray:
    """Exact OLS-coefficient CRT p-value for every column, by quadrature.

    One Cholesky factorization yields every partialled-out quantity:
    beta_j = s_j'y/||s_j||^2 and ||P_{-j} y||^2 = ||r||^2 + beta_j^2 ||s_j||^2.
    """
    n, p = X.shape
    if p >= n:
        raise ValueError("OLS needs p < n")
    G = X.T @ X
    Ginv = np.linalg.inv(G)
    omega = np.diag(Ginv).copy()
    beta = Ginv @ (X.T @ y)
    resid = y - X @ beta
    rss = float(resid @ resid)
    a_norm2 = rss + beta**2 / omega
    t_obs = math.sqrt(n) * beta
    return _ols_exact_pvalues(t_obs, a_norm2, n, n - p, sided)


def crt_pvalues_ols(
    X: np.ndarray,
    y: np.ndarray,
    M: int = 999,
    sided: str = TWO_SIDED,
    seed: int = 0,
) -> np.ndarray:
    """Resampled OLS-coefficient CRT p-value for every column.

    For each column, M fresh copies replace X_j and the full OLS coefficient
    is recomputed through the partialled-out identity
    ``beta_j = s_j' y / ||s_j||^2`` with ``s_j = (I - P_{-j}) X_j``, which
    needs only one factorization of X per dataset.
    """
    n, p = X.shape
    if p >= n:
        raise ValueError("OLS needs p < n")
    rng = replicate_rng(seed, _RESAMPLE_STREAM)
    G = X.T @ X
    L = np.linalg.cholesky(G)
    Ginv = np.linalg.inv(G)
    omega = np.diag(Ginv).copy()
    beta = Ginv @ (X.T @ y)
    t_obs = math.sqrt(n) * beta
    resid = y - X @ beta
    rss_j = 1.0 / omega  # ||s_j||^2

    p_out = np.empty(p)
    Xt = rng.standard_normal((n, M))
    C = X.T @ Xt                      # p x M
    S = (Ginv @ C) / omega[:, None]   # s_j' Xt_m
    half = np.linalg.solve(L, C)      # ||P_X Xt_m||^2 = column norms^2
    q = np.einsum("ij,ij->j", Xt, Xt) - np.einsum("ij,ij->j", half, half)
    num = resid @ Xt + beta[:, None] * S
    den = q[None, :] + S**2 / rss_j[:, None]
    t_res = math.sqrt(n) * num / den
    if sided == ONE_SIDED:
        count = np.sum(t_res >= t_obs[:, None], axis=1)
    else:
        count = np.sum(np.abs(t_res) >= np.abs(t_obs)[:, None], axis=1)
    p_out[:] = (1.0 + count) / (M + 1.0)
    return p_out
