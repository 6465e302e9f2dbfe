import numpy as np
import pytest
from scipy.stats import kstest

from mxpl.crt import (
    MC,
    OLS,
    ONE_SIDED,
    TWO_SIDED,
    conditional_crt_unlabeled,
    crt_pvalue_analytic,
    crt_pvalue_ols_exact,
    crt_pvalue_resampling,
    crt_pvalues_distilled,
    crt_pvalues_mc,
    crt_pvalues_ols,
    crt_pvalues_ols_exact,
    distilled,
    stat_distilled,
    stat_mc,
    stat_ols,
)
from mxpl.mixture import SignalMixture
from mxpl.model_gen import Dataset, ModelConfig, generate_setting1, generate_with_unlabeled

SPARSE4 = SignalMixture(((0.0, 0.9), (4.0, 0.1)))


def _focal(n, p, h=0.0, seed=0, signal=SPARSE4, m=0):
    cfg = ModelConfig(n=n, p=p, h=h, signal=signal, unlabeled_m=m, seed=seed)
    return generate_with_unlabeled(cfg) if m else generate_setting1(cfg)


class TestStatistics:
    def test_stat_mc_hand_values(self):
        ones = np.ones(4)
        assert stat_mc(ones, ones) == pytest.approx(1.0)
        assert stat_mc(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0
        assert stat_mc(np.array([1.0, 2.0]), np.array([3.0, -1.0])) == pytest.approx(0.5)

    def test_stat_ols_simple_regression(self):
        x = np.array([1.0, 2.0, 3.0])
        y = 2.0 * x
        assert stat_ols(x, None, y) == pytest.approx(np.sqrt(3) * 2.0)

    def test_stat_ols_noiseless_recovery(self):
        rng = np.random.default_rng(0)
        Z = rng.standard_normal((30, 4))
        x = rng.standard_normal(30)
        y = 1.7 * x + Z @ rng.standard_normal(4)
        assert stat_ols(x, Z, y) == pytest.approx(np.sqrt(30) * 1.7)

    def test_stat_ols_normal_equation_oracle(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal(8)
        Z = rng.standard_normal((8, 2))
        y = rng.standard_normal(8)
        coef = np.linalg.lstsq(np.column_stack([x, Z]), y, rcond=None)[0]
        assert stat_ols(x, Z, y) == pytest.approx(np.sqrt(8) * coef[0], abs=1e-10)

    def test_stat_distilled_penalty_extremes(self):
        rng = np.random.default_rng(2)
        Z = rng.standard_normal((40, 6))
        x = rng.standard_normal(40)
        y = rng.standard_normal(40)
        lam_max = np.max(np.abs(Z.T @ y)) / np.sqrt(40)
        assert stat_distilled(x, Z, y, lam_max * 1.01) == pytest.approx(stat_mc(x, y))
        Q, _ = np.linalg.qr(Z)
        py = y - Q @ (Q.T @ y)
        assert stat_distilled(x, Z, y, 1e-9) == pytest.approx(
            float(x @ py) / 40, abs=1e-6
        )


class TestAnalyticPValues:
    def test_symmetry_at_zero_statistic(self):
        ds = _focal(50, 5, seed=3)
        ds_zero = Dataset(
            y=ds.y - ds.focal_x * (ds.y @ ds.focal_x) / (ds.focal_x @ ds.focal_x),
            beta_truth=ds.beta_truth, labeled_n=50, focal_x=ds.focal_x, Z=ds.Z,
        )
        p1 = crt_pvalue_analytic(MC, ds_zero, ONE_SIDED)
        p2 = crt_pvalue_analytic(MC, ds_zero, TWO_SIDED)
        assert p1.value == pytest.approx(0.5, abs=1e-12)
        assert p2.value == pytest.approx(1.0, abs=1e-12)

    def test_mc_normal_quantile(self):
        # T = 1.6449 with null sd 1 gives one-sided p ~ 0.05
        n = 4
        y = np.array([2.0, 0.0, 0.0, 0.0])  # ||y||^2/n^2 = 0.25 -> sd 0.5
        x = np.array([1.6449 * 2 * 0.5, 0.0, 0.0, 0.0])  # T = x.y/n = 1.6449*0.5
        ds = Dataset(y=y, beta_truth=np.zeros(2), labeled_n=n, focal_x=x,
                     Z=np.zeros((4, 1)))
        p = crt_pvalue_analytic(MC, ds, ONE_SIDED)
        assert p.value == pytest.approx(0.05, abs=1e-4)

    def test_ols_kind_rejected(self):
        ds = _focal(40, 4, seed=1)
        with pytest.raises(ValueError):
            crt_pvalue_analytic(OLS, ds)

    def test_null_uniformity_exact(self):
        # exactness holds at any sample size, so a small design suffices
        pvals_mc, pvals_di = [], []
        for seed in range(2000):
            ds = _focal(40, 8, h=0.0, seed=seed)
            pvals_mc.append(crt_pvalue_analytic(MC, ds, ONE_SIDED).value)
            pvals_di.append(crt_pvalue_analytic(distilled(0.5), ds, TWO_SIDED).value)
        crit = 1.628 / np.sqrt(2000)
        assert kstest(pvals_mc, "uniform").statistic < crit
        assert kstest(pvals_di, "uniform").statistic < crit

    def test_two_sided_dominates_one_sided_for_positive_t(self):
        for seed in range(20):
            ds = _focal(60, 6, h=3.0, seed=seed)
            if stat_mc(ds.focal_x, ds.y) > 0:
                p1 = crt_pvalue_analytic(MC, ds, ONE_SIDED).value
                p2 = crt_pvalue_analytic(MC, ds, TWO_SIDED).value
                assert p2 >= p1


class TestResampledPValues:
    def test_extreme_statistics_hit_grid_ends(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal(300)
        Z = rng.standard_normal((300, 2))
        ds_hi = Dataset(y=50.0 * x, beta_truth=np.zeros(3), labeled_n=300,
                        focal_x=x, Z=Z)
        p = crt_pvalue_resampling(MC, ds_hi, M=99, sided=ONE_SIDED, seed=0)
        assert p.value == pytest.approx(1.0 / 100.0)
        ds_lo = Dataset(y=-50.0 * x, beta_truth=np.zeros(3), labeled_n=300,
                        focal_x=x, Z=Z)
        p = crt_pvalue_resampling(MC, ds_lo, M=99, sided=ONE_SIDED, seed=0)
        assert p.value == pytest.approx(1.0)

    def test_matches_analytic(self):
        ds = _focal(200, 30, h=1.0, seed=5)
        pa = crt_pvalue_analytic(MC, ds, ONE_SIDED).value
        pr = crt_pvalue_resampling(MC, ds, M=5000, sided=ONE_SIDED, seed=6).value
        assert abs(pa - pr) < 2.0 / np.sqrt(5000)

    def test_minimum_resamples(self):
        ds = _focal(30, 3, seed=7)
        with pytest.raises(ValueError):
            crt_pvalue_resampling(MC, ds, M=5)

    def test_ols_exact_matches_resampling(self):
        ds = _focal(150, 40, h=1.0, seed=8)
        pe = crt_pvalue_ols_exact(ds, ONE_SIDED).value
        pr = crt_pvalue_resampling(OLS, ds, M=40000, sided=ONE_SIDED, seed=9).value
        assert abs(pe - pr) < 2.5 / np.sqrt(40000)

    def test_ols_exact_null_uniformity(self):
        pvals = [
            crt_pvalue_ols_exact(_focal(45, 12, h=0.0, seed=s), ONE_SIDED).value
            for s in range(1500)
        ]
        assert kstest(pvals, "uniform").statistic < 1.628 / np.sqrt(1500)


class TestMonotonePower:
    def test_rejection_rate_nondecreasing_in_h(self):
        # shared covariate/noise streams across h values
        rates = []
        for h in (0.0, 1.0, 2.0, 3.0, 4.0):
            rejects = 0
            for seed in range(250):
                ds = _focal(150, 30, h=h, seed=seed)
                rejects += crt_pvalue_analytic(MC, ds, ONE_SIDED).value <= 0.05
            rates.append(rejects / 250)
        tol = 3 * np.sqrt(0.25 / 250)
        assert all(rates[i + 1] >= rates[i] - tol for i in range(4))


class TestConditionalCrt:
    def test_matches_plain_projection_test_when_m_zero(self):
        # with no unlabeled rows the known-variance path is the exact test on
        # y'(I - H)x; the resampled version of that statistic must agree
        ds = _focal(120, 40, h=2.0, seed=10)
        p_cond = conditional_crt_unlabeled(ds, known_variance=True, sided=ONE_SIDED)
        p_res = crt_pvalue_resampling(distilled(1e-9), ds, M=20000, sided=ONE_SIDED,
                                      seed=11)
        assert abs(p_cond.value - p_res.value) < 2.5 / np.sqrt(20000)

    def test_null_uniformity_known_and_unknown_variance(self):
        pk, pu = [], []
        for seed in range(1200):
            ds = _focal(50, 60, h=0.0, seed=seed, m=50)  # n*=100 > p-1=59
            pk.append(conditional_crt_unlabeled(ds, True, sided=ONE_SIDED).value)
            pu.append(
                conditional_crt_unlabeled(ds, False, M=199, sided=ONE_SIDED,
                                          seed=seed).value
            )
        crit = 1.628 / np.sqrt(1200)
        assert kstest(pk, "uniform").statistic < crit
        # resampled p-values live on the grid {k/200}; compare to that law
        grid_cdf = lambda t: np.clip(np.floor(np.asarray(t) * 200) / 200, 0, 1)
        xs = np.sort(pu)
        emp_hi = np.arange(1, 1201) / 1200
        emp_lo = np.arange(0, 1200) / 1200
        dist = max(np.max(np.abs(emp_hi - grid_cdf(xs))), np.max(np.abs(emp_lo - grid_cdf(xs - 1e-12))))
        assert dist < crit + 1 / 200

    def test_known_vs_unknown_agree(self):
        ds = _focal(250, 150, h=2.0, seed=12, m=350)
        p1 = conditional_crt_unlabeled(ds, True, sided=ONE_SIDED).value
        p2 = conditional_crt_unlabeled(ds, False, M=30000, sided=ONE_SIDED, seed=13).value
        assert abs(p1 - p2) < 0.01

    def test_degenerate_design(self):
        ds = _focal(40, 121, h=1.0, seed=14, m=80)  # n* = 120 = p - 1
        p = conditional_crt_unlabeled(ds)
        assert p.value == 1.0
        assert p.degenerate


class TestVectorizedPValues:
    def test_column_consistency_with_single_tests(self):
        rng = np.random.default_rng(15)
        X = rng.standard_normal((80, 6))
        y = X[:, 1] * 0.5 + rng.standard_normal(80)
        pv = crt_pvalues_mc(X, y, ONE_SIDED)
        for j in range(6):
            ds = Dataset(y=y, beta_truth=np.zeros(6), labeled_n=80,
                         focal_x=X[:, j], Z=np.delete(X, j, axis=1))
            assert pv[j] == pytest.approx(crt_pvalue_analytic(MC, ds, ONE_SIDED).value)

    def test_ols_vector_exact_vs_resampled(self):
        rng = np.random.default_rng(16)
        X = rng.standard_normal((120, 12))
        y = X[:, 0] * 0.7 + rng.standard_normal(120)
        pe = crt_pvalues_ols_exact(X, y, TWO_SIDED)
        pr = crt_pvalues_ols(X, y, M=20000, sided=TWO_SIDED, seed=17)
        assert np.max(np.abs(pe - pr)) < 0.02

    def test_distilled_vector_matches_loo_definition(self):
        rng = np.random.default_rng(18)
        X = rng.standard_normal((60, 8))
        y = X[:, 3] + rng.standard_normal(60)
        pv = crt_pvalues_distilled(X, y, 0.4, ONE_SIDED)
        j = 3
        ds = Dataset(y=y, beta_truth=np.zeros(8), labeled_n=60,
                     focal_x=X[:, j], Z=np.delete(X, j, axis=1))
        ref = crt_pvalue_analytic(distilled(0.4), ds, ONE_SIDED).value
        assert pv[j] == pytest.approx(ref, abs=1e-6)
