"""Conditional randomization tests, model-X knockoffs, and their
high-dimensional asymptotics for Gaussian linear models."""

from .amp import (
    AmpSolution,
    min_tau_over_lambda,
    soft_threshold,
    solve_fixed_point,
    state_evolution_tau,
)
from .asymptotics import (
    LimitResult,
    TheoryScenario,
    UnlabeledEffect,
    effect_size,
    limit_bh_adapt,
    limit_knockoff,
    m_retro,
    multiple_testing_limit,
    theory_curve,
    ztest_power,
)
from .crt import (
    MC,
    OLS,
    CrtStatKind,
    PValue,
    conditional_crt_unlabeled,
    crt_pvalue_analytic,
    crt_pvalue_resampling,
    distilled,
    stat_distilled,
    stat_mc,
    stat_ols,
)
from .harness import ExperimentConfig, MethodSpec, ResultRow, run_experiment
from .knockoffs import WVector, knockoff_threshold, sample_knockoffs_iid, w_statistics
from .lasso import LassoFit, fit_lasso, kkt_residual
from .mixture import SignalMixture
from .model_gen import (
    Dataset,
    ModelConfig,
    generate_retrospective,
    generate_setting1,
    generate_setting2,
    generate_with_unlabeled,
)
from .selection import SelectionResult, adapt, bh, evaluate

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
