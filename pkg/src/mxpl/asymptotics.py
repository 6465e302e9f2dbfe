"""Closed-form asymptotic power and FDP limits.

Every procedure in the package behaves, in the proportional limit, like a
simple rule applied to an independent normal-means problem; this module
evaluates those limits:

* single tests reduce to a z-test with a standardized effect size,
* BH / AdaPT over CRT p-values reduce to threshold rules on a mixture CDF G,
* the knockoff filter reduces to a threshold rule on the limiting laws
  (G0, G1) of the null and non-null W statistics.

Threshold equations are solved on a dense grid followed by bisection; the
degenerate levels where the crossing has zero slope form a measure-zero set
and are classified rather than refined.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad
from scipy.special import ndtr, ndtri

from .amp import AmpSolution, min_tau_over_lambda, solve_fixed_point
from .mixture import SignalMixture

GRID_POINTS = 10_000
BISECT_STEPS = 60
_SQRT2 = math.sqrt(2.0)
_GL_NODES = 96
_TAIL_SPAN = 14.0


def _phi(x):
    return np.exp(-0.5 * np.square(x)) / math.sqrt(2.0 * math.pi)


# ---------------------------------------------------------------------------
# z-tests and effect sizes


def ztest_power(mu: float, alpha_level: float, sided: str = "one") -> float:
    """Power of the level-alpha z-test against a unit-variance mean shift mu."""
    if not 0.0 < alpha_level < 1.0:
        raise ValueError("alpha_level must be in (0, 1)")
    if sided == "one":
        return float(ndtr(mu + ndtri(alpha_level)))
    if sided == "two":
        z = ndtri(alpha_level / 2.0)
        return float(ndtr(mu + z) + ndtr(-mu + z))
    raise ValueError(f"unknown sidedness {sided!r}")


def m_retro(retro_threshold: float, sigma2: float, v_z2: float) -> float:
    """Root second moment of the screened response.

    For Y ~ N(0, s^2) kept when |Y| > C, E[Y^2 | kept] = s^2 (1 + c phi(c) /
    (1 - Phi(c))) with c = C/s; returns its square root.
    """
    if retro_threshold < 0:
        raise ValueError("threshold must be nonnegative")
    s = math.sqrt(sigma2 + v_z2)
    c = retro_threshold / s
    return s * math.sqrt(1.0 + c * float(_phi(c)) / float(ndtr(-c)))


@dataclass(frozen=True)
class TheoryScenario:
    """Inputs for one asymptotic evaluation.

    ``signal`` is the law of the sqrt(n)-scaled coefficients: the nuisance
    law for single-test scenarios (with the focal size in ``h``), the full
    null-plus-alternative law for multiple-testing scenarios.
    """

    statistic: str  # "mc" | "ols" | "distilled" | "lasso"
    kappa: float
    sigma2: float
    signal: SignalMixture
    h: Optional[float] = None
    q: Optional[float] = None
    sided: str = "one"
    alpha_level: float = 0.05
    lam: Optional[float] = None  # None means the tau-minimizing choice
    retro_threshold: Optional[float] = None
    kappa_star: Optional[float] = None
    procedure: str = "crt"  # "crt" | "bh" | "adapt" | "knockoff"

    def v_z2(self) -> float:
        return self.kappa * self.signal.second_moment()


def amp_for(scenario: TheoryScenario, doubled: bool) -> AmpSolution:
    """State-evolution solution at the scenario's lambda (or the minimizer)."""
    if scenario.lam is None:
        return min_tau_over_lambda(scenario.kappa, scenario.sigma2, scenario.signal, doubled)
    return solve_fixed_point(
        scenario.lam, scenario.kappa, scenario.sigma2, scenario.signal, doubled
    )


def crt_denominator(scenario: TheoryScenario, amp: Optional[AmpSolution] = None) -> float:
    """The one scale that standardizes each CRT statistic's effect size.

    Shared by the single-test effect sizes and the multiple-testing
    effective mixtures so the two can never drift apart.
    """
    if scenario.statistic == "mc":
        return math.sqrt(scenario.sigma2 + scenario.v_z2())
    if scenario.statistic == "ols":
        if scenario.kappa >= 1.0:
            raise ValueError("OLS needs kappa < 1")
        return math.sqrt(scenario.sigma2 / (1.0 - scenario.kappa))
    if scenario.statistic == "distilled":
        if amp is None:
            amp = amp_for(scenario, doubled=False)
        return amp.tau
    raise ValueError(f"no CRT denominator for statistic {scenario.statistic!r}")


@dataclass(frozen=True)
class UnlabeledEffect:
    """Bound pair plus the conjectured value for the conditional CRT."""

    lower: float
    upper: float
    conjectured: float
    upper_vacuous: bool


def effect_size(scenario: TheoryScenario):
    """Standardized effect size of the single-covariate CRT.

    Marginal covariance: h / sqrt(sigma2 + v_Z^2); OLS: (h/sigma)
    sqrt(1-kappa); distilled lasso: h / tau.  With a screening threshold the
    marginal-covariance size becomes h M_retro / (sigma2 + v_Z^2).  With
    unlabeled data (kappa_star set) the exact limit is open and an
    UnlabeledEffect carrying proven bounds plus the conjectured value is
    returned instead of a scalar.
    """
    if scenario.h is None:
        raise ValueError("single-test scenarios need h")
    h = scenario.h
    if scenario.kappa_star is not None:
        if scenario.statistic != "mc":
            raise ValueError("the conditional CRT analysis covers the marginal covariance")
        kk = scenario.kappa * scenario.kappa_star
        if kk >= 1.0:
            raise ValueError("needs kappa * kappa_star < 1")
        v = scenario.v_z2()
        s2 = scenario.sigma2
        root = math.sqrt(1.0 - kk)
        lower = h * root / math.sqrt(s2 + v / (1.0 - kk))
        blow = (1.0 + math.sqrt(1.0 / scenario.kappa)) ** 2
        shrink = (1.0 - math.sqrt(kk)) ** 2
        inner = (1.0 - blow / shrink * kk) / (1.0 - kk)
        vacuous = inner <= 0.0
        upper = h * root / math.sqrt(s2 + v * max(0.0, inner))
        conjectured = h * root / math.sqrt(s2 + v * (1.0 - scenario.kappa_star))
        return UnlabeledEffect(lower, upper, conjectured, vacuous)
    if scenario.retro_threshold is not None:
        if scenario.statistic != "mc":
            raise ValueError("retrospective analysis covers the marginal covariance")
        v = scenario.v_z2()
        return h * m_retro(scenario.retro_threshold, scenario.sigma2, v) / (
            scenario.sigma2 + v
        )
    return h / crt_denominator(scenario)


# ---------------------------------------------------------------------------
# BH / AdaPT limits in the normal-means reduction


def pvalue_cdf(pi_mu: SignalMixture, sided: str) -> Callable[[np.ndarray], np.ndarray]:
    """CDF of the non-null p-value when the statistic is mu + N(0,1).

    One-sided p-values are 1 - Phi(mu + Z); two-sided are 2(1 - Phi(|mu + Z|)).
    """
    if sided not in ("one", "two"):
        raise ValueError(f"unknown sidedness {sided!r}")
    mus = pi_mu.values[:, None]
    wts = pi_mu.weights[:, None]

    def G(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if sided == "one":
            z = ndtri(np.clip(t, 0.0, 1.0))[None, :]
            vals = ndtr(mus + z)
        else:
            z = ndtri(np.clip(t, 0.0, 1.0) / 2.0)[None, :]
            vals = ndtr(mus + z) + ndtr(-mus + z)
        return np.sum(wts * vals, axis=0)

    return G


@dataclass(frozen=True)
class LimitResult:
    threshold: float
    fdp_limit: float
    power_limit: float
    case_tag: str  # "interior" | "boundary" | "zero_power"


def _solve_max_threshold(gfun, q, grid):
    """max{t in grid range : g(t) <= q}, refined by bisection at the crossing."""
    vals = gfun(grid)
    ok = np.flatnonzero(vals <= q)
    if ok.size == 0:
        return None, "zero_power"
    idx = ok[-1]
    if idx == grid.shape[0] - 1:
        return float(grid[-1]), "boundary"
    lo, hi = grid[idx], grid[idx + 1]
    for _ in range(BISECT_STEPS):
        mid = 0.5 * (lo + hi)
        if gfun(np.array([mid]))[0] <= q:
            lo = mid
        else:
            hi = mid
    return float(lo), "interior"


def _solve_min_threshold(gfun, q, grid):
    """min{w in grid range : g(w) <= q}, refined by bisection."""
    vals = gfun(grid)
    ok = np.flatnonzero(vals <= q)
    if ok.size == 0:
        return None, "zero_power"
    idx = ok[0]
    if idx == 0:
        return float(grid[0]), "boundary"
    lo, hi = grid[idx - 1], grid[idx]
    for _ in range(BISECT_STEPS):
        mid = 0.5 * (lo + hi)
        if gfun(np.array([mid]))[0] <= q:
            hi = mid
        else:
            lo = mid
    return float(hi), "interior"


def limit_bh_adapt(
    pi_mu: SignalMixture,
    gamma: float,
    q: float,
    sided: str = "two",
    procedure: str = "bh",
) -> LimitResult:
    """Limiting FDP and realized power of BH or intercept-only AdaPT.

    ``pi_mu`` is the law of the standardized effect size carried by the
    non-null coordinates; nulls (fraction gamma) contribute uniform
    p-values.  Non-nulls with a zero atom carry null-distributed p-values,
    so all-zero ``pi_mu`` yields zero power.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must be in (0, 1)")
    if not 0.0 < q < 1.0:
        raise ValueError("q must be in (0, 1)")
    G = pvalue_cdf(pi_mu, sided)

    if procedure == "bh":

        def gfun(t):
            return t / (gamma * t + (1.0 - gamma) * G(t))

    elif procedure == "adapt":

        def gfun(t):
            denom = gamma * t + (1.0 - gamma) * G(t)
            return (gamma * t + (1.0 - gamma) * (1.0 - G(1.0 - t))) / denom

    else:
        raise ValueError(f"unknown procedure {procedure!r}")

    grid = np.linspace(1e-10, 1.0, GRID_POINTS)
    t_star, tag = _solve_max_threshold(gfun, q, grid)
    if t_star is None:
        return LimitResult(0.0, 0.0, 0.0, "zero_power")
    power = float(G(t_star)[0])
    fdp = gamma * t_star / (gamma * t_star + (1.0 - gamma) * power)
    return LimitResult(t_star, fdp, power, tag)


# ---------------------------------------------------------------------------
# knockoff limits


def _absdiff_sf(t: np.ndarray, m1: float, m2: float) -> np.ndarray:
    """P(|X| - |Y| > t) for X ~ N(m1, 1), Y ~ N(m2, 1) independent.

    The sum and difference of the coordinates are independent N(., 2)
    variables, so the survival probability is a product of normal CDF
    values with no cancellation at either tail.
    """
    t = np.asarray(t, dtype=float)
    u_hi = ndtr((m1 - m2 - t) / _SQRT2)  # P(U >= t), U = X - Y
    v_hi = ndtr((m1 + m2 - t) / _SQRT2)  # P(V >= t), V = X + Y
    u_lo = ndtr((-t - m1 + m2) / _SQRT2)
    v_lo = ndtr((-t - m1 - m2) / _SQRT2)
    ov_u = np.maximum(u_lo - (1.0 - u_hi), 0.0)
    ov_v = np.maximum(v_lo - (1.0 - v_hi), 0.0)
    overlap = np.where(t < 0.0, ov_u * ov_v, 0.0)
    return u_hi * v_hi + u_lo * v_lo - overlap


def _absdiff_cdf(x: np.ndarray, mu: float) -> np.ndarray:
    """CDF of |mu + Z1| - |Z2|; evaluated as a swapped survival for stability."""
    return _absdiff_sf(-np.asarray(x, dtype=float), 0.0, mu)


def _absdiff_sf_mu(x: np.ndarray, mu: float) -> np.ndarray:
    return _absdiff_sf(np.asarray(x, dtype=float), mu, 0.0)


class _NormalMeansWDistribution:
    """Limiting W law for the marginal-covariance and OLS statistics,
    standardized so the per-coordinate noise is unit normal."""

    def __init__(self, mus: np.ndarray, wts: np.ndarray, antisym: str):
        self.mus = np.asarray(mus, dtype=float)
        self.wts = np.asarray(wts, dtype=float)
        self.antisym = antisym

    def cdf(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.antisym == "difference":
            vals = ndtr((x[None, :] - self.mus[:, None]) / _SQRT2)
        else:
            vals = np.stack([_absdiff_cdf(x, m) for m in self.mus], axis=0)
        return np.sum(self.wts[:, None] * vals, axis=0)

    def sf(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.antisym == "difference":
            vals = ndtr((self.mus[:, None] - x[None, :]) / _SQRT2)
        else:
            vals = np.stack([_absdiff_sf_mu(x, m) for m in self.mus], axis=0)
        return np.sum(self.wts[:, None] * vals, axis=0)


class LassoWDistribution:
    """Limiting law of a lasso-coefficient W statistic.

    W = f(eta(B + tau Z1; alpha tau), eta(tau Z2; alpha tau)); the soft
    threshold puts point mass at W = 0 which is tracked exactly, and the
    continuous part is integrated over Z2 by fixed Gauss-Legendre panels
    split at the dead-zone breakpoints.
    """

    def __init__(self, alpha: float, tau: float, b_mixture: SignalMixture, antisym: str):
        self.alpha = alpha
        self.tau = tau
        self.c = alpha * tau
        self.values = b_mixture.values
        self.weights = b_mixture.weights
        self.antisym = antisym
        nodes, wts = np.polynomial.legendre.leggauss(_GL_NODES)
        self._gx = 0.5 * (nodes + 1.0)  # on [0, 1]
        self._gw = 0.5 * wts
        self.mass_zero_tilde = 2.0 * float(ndtr(alpha)) - 1.0

    def _abs_cdf(self, u, b):
        """P(|eta(b + tau Z; c)| <= u) for u >= 0 (0 for u < 0)."""
        u = np.asarray(u, dtype=float)
        out = ndtr((u + self.c - b) / self.tau) - ndtr((-u - self.c - b) / self.tau)
        return np.where(u >= 0.0, out, 0.0)

    def _abs_sf(self, u, b):
        """P(|eta(b + tau Z; c)| > u) for u >= 0 (1 for u < 0), no cancellation."""
        u = np.asarray(u, dtype=float)
        out = ndtr((b - u - self.c) / self.tau) + ndtr((-u - self.c - b) / self.tau)
        return np.where(u >= 0.0, out, 1.0)

    def _cdf_one(self, a, b):
        """P(eta(b + tau Z; c) <= a)."""
        a = np.asarray(a, dtype=float)
        return np.where(
            a >= 0.0,
            ndtr((a + self.c - b) / self.tau),
            ndtr((a - self.c - b) / self.tau),
        )

    def _sf_one(self, a, b):
        a = np.asarray(a, dtype=float)
        return np.where(
            a >= 0.0,
            ndtr((b - a - self.c) / self.tau),
            ndtr((b - a + self.c) / self.tau),
        )

    def _panel(self, lo, hi, fn):
        """Vectorized integral of phi(z) * fn(z) over [lo, hi] per row."""
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        span = np.maximum(hi - lo, 0.0)
        z = lo[:, None] + span[:, None] * self._gx[None, :]
        return span * np.sum(self._gw[None, :] * _phi(z) * fn(z), axis=1)

    def point_mass_zero(self) -> float:
        m = ndtr((self.c - self.values) / self.tau) - ndtr((-self.c - self.values) / self.tau)
        return float(np.sum(self.weights * m)) * self.mass_zero_tilde

    def cdf(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        total = np.zeros_like(x)
        for b, w in zip(self.values, self.weights):
            total += w * self._tail_atom(x, b, survival=False)
        return total

    def sf(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        total = np.zeros_like(x)
        for b, w in zip(self.values, self.weights):
            total += w * self._tail_atom(x, b, survival=True)
        return total

    def _tail_atom(self, x, b, survival: bool):
        alpha, tau = self.alpha, self.tau
        if self.antisym == "abs_difference":
            point = self._abs_sf if survival else self._abs_cdf
            base = self.mass_zero_tilde * point(x, b)
            # the integrand kinks where x + tau (z - alpha) crosses zero
            lo = np.minimum(np.maximum(alpha, alpha - x / tau), alpha + _TAIL_SPAN)
            tail = self._panel(np.full_like(x, alpha), lo,
                               lambda z: point(x[:, None] + tau * (z - alpha), b))
            tail += self._panel(lo, lo + _TAIL_SPAN,
                                lambda z: point(x[:, None] + tau * (z - alpha), b))
            return base + 2.0 * tail
        point = self._sf_one if survival else self._cdf_one
        base = self.mass_zero_tilde * point(x, b)
        # knockoff draw positive: argument x + tau (z - alpha), kink at z0
        z0 = np.minimum(np.clip(alpha - x / tau, alpha, None), alpha + _TAIL_SPAN)
        i1 = self._panel(np.full_like(x, alpha), z0,
                         lambda z: point(x[:, None] + tau * (z - alpha), b))
        i1 += self._panel(z0, z0 + _TAIL_SPAN,
                          lambda z: point(x[:, None] + tau * (z - alpha), b))
        # knockoff draw negative: argument x - tau (z - alpha), kink at z1
        z1 = np.minimum(np.clip(alpha + x / tau, alpha, None), alpha + _TAIL_SPAN)
        i2 = self._panel(np.full_like(x, alpha), z1,
                         lambda z: point(x[:, None] - tau * (z - alpha), b))
        i2 += self._panel(z1, z1 + _TAIL_SPAN,
                          lambda z: point(x[:, None] - tau * (z - alpha), b))
        return base + i1 + i2


def _effective_mu_atoms(scenario: TheoryScenario, gamma: float) -> tuple[np.ndarray, np.ndarray]:
    """Non-null importance means standardized to unit noise, for MC/OLS knockoffs."""
    pi1 = scenario.signal
    if scenario.statistic == "mc":
        s2 = scenario.sigma2 + scenario.kappa * pi1.with_null(gamma).second_moment()
        mult = math.sqrt(s2)
        if scenario.retro_threshold is not None:
            mult = m_retro(scenario.retro_threshold, scenario.sigma2, s2 - scenario.sigma2)
        mus = pi1.values * mult / s2
    elif scenario.statistic == "ols":
        if scenario.kappa >= 0.5:
            raise ValueError("knockoff OLS needs kappa < 1/2")
        if scenario.retro_threshold is not None:
            raise ValueError("retrospective analysis covers the marginal covariance")
        s = math.sqrt(scenario.sigma2 / (1.0 - 2.0 * scenario.kappa))
        mus = pi1.values / s
    else:
        raise ValueError("effective means exist for the mc and ols statistics")
    return mus, pi1.weights


def limit_knockoff(scenario: TheoryScenario, gamma: float, q: float) -> LimitResult:
    """Limiting FDP and realized power of the knockoff filter.

    ``scenario.signal`` is the non-null coefficient law; gamma is the null
    fraction.  The antisymmetric function follows the scenario sidedness:
    one-sided means f(x, y) = x - y, two-sided means f(x, y) = |x| - |y|.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must be in (0, 1)")
    if not 0.0 < q < 1.0:
        raise ValueError("q must be in (0, 1)")
    antisym = "difference" if scenario.sided == "one" else "abs_difference"

    if scenario.statistic == "lasso":
        full = scenario.signal.with_null(gamma)
        amp = (
            min_tau_over_lambda(scenario.kappa, scenario.sigma2, full, doubled=True)
            if scenario.lam is None
            else solve_fixed_point(scenario.lam, scenario.kappa, scenario.sigma2, full, doubled=True)
        )
        dist0 = LassoWDistribution(amp.alpha, amp.tau, SignalMixture.point(0.0), antisym)
        dist1 = LassoWDistribution(amp.alpha, amp.tau, scenario.signal, antisym)
        w_max = float(np.max(np.abs(scenario.signal.values))) + 10.0 * amp.tau
    else:
        mus, wts = _effective_mu_atoms(scenario, gamma)
        dist0 = _NormalMeansWDistribution(np.array([0.0]), np.array([1.0]), antisym)
        dist1 = _NormalMeansWDistribution(mus, wts, antisym)
        w_max = float(np.max(np.abs(mus))) + 10.0

    def gfun(w):
        w = np.atleast_1d(np.asarray(w, dtype=float))
        num = gamma * dist0.cdf(-w) + (1.0 - gamma) * dist1.cdf(-w)
        den = gamma * dist0.sf(w) + (1.0 - gamma) * dist1.sf(w)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(den > 1e-280, num / np.maximum(den, 1e-280), np.inf)
        return out

    grid = np.linspace(w_max * 1e-9, w_max, GRID_POINTS)
    w_kf, tag = _solve_min_threshold(gfun, q, grid)
    if w_kf is None:
        return LimitResult(math.inf, 0.0, 0.0, "zero_power")
    g0m = float(dist0.cdf(np.array([-w_kf]))[0])
    s0p = float(dist0.sf(np.array([w_kf]))[0])
    s1p = float(dist1.sf(np.array([w_kf]))[0])
    den = gamma * s0p + (1.0 - gamma) * s1p
    fdp = gamma * g0m / den if den > 0 else 0.0
    return LimitResult(w_kf, fdp, s1p, tag)


# ---------------------------------------------------------------------------
# numeric cross-check helpers and curve emission


def m_retro_by_quadrature(retro_threshold: float, sigma2: float, v_z2: float) -> float:
    """Independent evaluation of m_retro by adaptive integration."""
    s2 = sigma2 + v_z2
    s = math.sqrt(s2)

    def dens(y):
        return math.exp(-0.5 * y * y / s2) / (s * math.sqrt(2.0 * math.pi))

    num = quad(lambda y: y * y * dens(y), retro_threshold, np.inf)[0]
    den = quad(dens, retro_threshold, np.inf)[0]
    return math.sqrt(num / den)


def theory_curve(items) -> list[tuple[str, str, float, str]]:
    """Evaluate scenarios into flat (scenario_id, param, value, flag) rows.

    Single-test scenarios (h set) emit effect sizes and z-test powers,
    including bound and conjecture rows for the unlabeled case; scenarios
    with q set emit the multiple-testing limits for the procedure implied
    by the statistic kind.
    """
    rows: list[tuple[str, str, float, str]] = []
    for scenario_id, scenario in items:
        if scenario.h is not None:
            eff = effect_size(scenario)
            if isinstance(eff, UnlabeledEffect):
                for name, val in (("lower", eff.lower), ("upper", eff.upper)):
                    flag = "vacuous_upper" if (name == "upper" and eff.upper_vacuous) else name
                    rows.append((scenario_id, "effect_size", val, flag))
                    rows.append(
                        (scenario_id, "power",
                         ztest_power(val, scenario.alpha_level, scenario.sided), flag)
                    )
                rows.append((scenario_id, "effect_size", eff.conjectured, "conjectured"))
                rows.append(
                    (scenario_id, "power",
                     ztest_power(eff.conjectured, scenario.alpha_level, scenario.sided),
                     "conjectured")
                )
            else:
                rows.append((scenario_id, "effect_size", eff, ""))
                rows.append(
                    (scenario_id, "power",
                     ztest_power(eff, scenario.alpha_level, scenario.sided), "")
                )
        elif scenario.q is not None:
            res = multiple_testing_limit(scenario)
            rows.append((scenario_id, "power_limit", res.power_limit, res.case_tag))
            rows.append((scenario_id, "fdp_limit", res.fdp_limit, res.case_tag))
        else:
            raise ValueError(f"scenario {scenario_id} has neither h nor q")
    return rows


def theory_curve_csv(items, path: str) -> None:
    """Write theory_curve rows as CSV with header scenario_id,param,value,flag."""
    rows = theory_curve(items)
    with open(path, "w") as fh:
        fh.write("scenario_id,param,value,flag\n")
        for scenario_id, param, value, flag in rows:
            fh.write(f"{scenario_id},{param},{value!r},{flag}\n")


def multiple_testing_limit(scenario: TheoryScenario) -> LimitResult:
    """Limit of the procedure named by the scenario on its full signal law.

    ``scenario.signal`` is the complete coefficient mixture (nulls included);
    the null fraction, the effective standardized mixture for CRT p-values,
    and the retrospective rescaling are all derived here.
    """
    if scenario.q is None:
        raise ValueError("multiple-testing scenarios need q")
    full = scenario.signal
    gamma = full.null_mass()
    pi1 = full.nonzero_part()
    if scenario.procedure == "knockoff":
        sub = TheoryScenario(
            statistic=scenario.statistic, kappa=scenario.kappa, sigma2=scenario.sigma2,
            signal=pi1, sided=scenario.sided, lam=scenario.lam,
            retro_threshold=scenario.retro_threshold,
        )
        return limit_knockoff(sub, gamma, scenario.q)
    if scenario.procedure not in ("bh", "adapt"):
        raise ValueError(f"unknown multiple-testing procedure {scenario.procedure!r}")
    if scenario.retro_threshold is not None:
        if scenario.statistic != "mc":
            raise ValueError("retrospective analysis covers the marginal covariance")
        s2 = scenario.sigma2 + scenario.kappa * full.second_moment()
        mult = m_retro(scenario.retro_threshold, scenario.sigma2, s2 - scenario.sigma2)
        pi_mu = pi1.scaled(mult / s2)
    else:
        sub = TheoryScenario(
            statistic=scenario.statistic, kappa=scenario.kappa,
            sigma2=scenario.sigma2, signal=full, lam=scenario.lam,
        )
        pi_mu = pi1.scaled(1.0 / crt_denominator(sub))
    return limit_bh_adapt(pi_mu, gamma, scenario.q, scenario.sided, scenario.procedure)
