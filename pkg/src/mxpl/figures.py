"""Bundled experiment configs behind the ``figures`` CLI subcommand.

Eight benchmark tables, fig1 through fig8.  Signal sizes are always on the
h = sqrt(n) * beta scale (a figure quoting "beta = 3" for a local
alternative means h = 3 here); each config's comment records that reading.
Default sizes are desk scale; ``full=True`` restores the large runs.
"""
from __future__ import annotations

from .harness import ExperimentConfig, MethodSpec
from .mixture import SignalMixture
from .model_gen import ModelConfig

Q_DEFAULT = 0.1
SPARSE4 = SignalMixture(((0.0, 0.9), (4.0, 0.1)))
SPARSE3 = SignalMixture(((0.0, 0.9), (3.0, 0.1)))
H_GRID = (1.0, 2.0, 3.0, 4.0, 5.0, 6.0)
RATIOS = {"nd2.5p": 2.5, "ndp": 1.0, "nd0.5p": 0.5}


def _model(n, p, sigma2=1.0, h=0.0, signal=SPARSE4, m=0, screen=None, seed=0):
    return ModelConfig(
        n=n, p=p, sigma2=sigma2, h=h, signal=signal,
        unlabeled_m=m, screen_threshold=screen, seed=seed,
    )


def fig1(full: bool = False) -> list[ExperimentConfig]:
    """Theory: single-test power of the distilled statistic across lambda,
    with the marginal-covariance and OLS levels for reference."""
    lams = tuple(round(0.05 * 1.23**k, 6) for k in range(26))
    configs = []
    for tag, ratio in RATIOS.items():
        p = 500
        n = int(round(ratio * p))
        methods = [
            MethodSpec("crt", "distilled", sided="one", label="crt-distilled"),
            MethodSpec("crt", "mc", sided="one", label="crt-mc"),
        ]
        if ratio > 1.0:
            methods.append(MethodSpec("crt", "ols", sided="one", label="crt-ols"))
        configs.append(ExperimentConfig(
            name=f"fig1_{tag}",
            model=_model(n=n, p=p, h=2.0, signal=SPARSE4),
            sweep_param="lambda",
            sweep_values=lams,
            methods=tuple(methods),
            replicates=1,
            seed=101,
            comment="fig1: asymptotic power vs lasso penalty; h = sqrt(n)*beta = 2; "
                    "theory only (run with mode=theory)",
        ))
    return configs


def _compare_config(tag, ratio, statistic, kf_statistic, name, seed):
    p = 500
    n = int(round(ratio * p))
    methods = [
        MethodSpec("bh", statistic, sided="two", q=Q_DEFAULT, label=f"bh-{statistic}"),
        MethodSpec("adapt", statistic, sided="two", q=Q_DEFAULT, label=f"adapt-{statistic}"),
        MethodSpec("knockoff", kf_statistic, sided="two", q=Q_DEFAULT,
                   label=f"knockoff-{kf_statistic}"),
    ]
    return ExperimentConfig(
        name=f"{name}_{tag}",
        model=_model(n=n, p=p, signal=SPARSE4),
        sweep_param="signal_h",
        sweep_values=H_GRID,
        methods=tuple(methods),
        replicates=1,
        seed=seed,
        comment=f"{name}: limit power vs non-null size h (pi_1 = delta_h, gamma = 0.9); "
                "h on the sqrt(n)*beta scale; theory only (mode=theory); "
                "sweeping h rescales the non-null atom of the signal mixture",
    )


def fig2(full: bool = False) -> list[ExperimentConfig]:
    """Theory: BH/AdaPT on two-sided CRT p-values vs knockoffs, marginal
    covariance statistic."""
    return [
        _compare_config(tag, ratio, "mc", "mc", "fig2", 102)
        for tag, ratio in RATIOS.items()
    ]


def fig3(full: bool = False) -> list[ExperimentConfig]:
    """Theory: same comparison with the OLS statistic (needs n > 2p)."""
    return [_compare_config("nd2.5p", 2.5, "ols", "ols", "fig3", 103)]


def fig4(full: bool = False) -> list[ExperimentConfig]:
    """Simulation: single-test CRT power, three statistics, h = 3."""
    p = 1000 if full else 200
    reps = 1000 if full else 500
    configs = []
    for tag, ratio in RATIOS.items():
        n = int(round(ratio * p))
        methods = [
            MethodSpec("crt", "mc", sided="one", label="crt-mc"),
            MethodSpec("crt", "distilled", sided="one", label="crt-distilled"),
        ]
        if ratio > 1.0:
            methods.insert(1, MethodSpec("crt", "ols", sided="one", M=199, label="crt-ols"))
        configs.append(ExperimentConfig(
            name=f"fig4_{tag}",
            model=_model(n=n, p=p, h=3.0, signal=SPARSE3),
            sweep_param="h",
            sweep_values=(3.0,),
            methods=tuple(methods),
            replicates=reps,
            seed=104,
            comment="fig4: single-test power at one-sided level 0.05; the signal "
                    "size 3 is read on the h = sqrt(n)*beta scale",
        ))
    return configs


def fig5(full: bool = False) -> list[ExperimentConfig]:
    """Simulation: conditional CRT with unlabeled rows vs its bounds."""
    p = 1000 if full else 200
    reps = 1000 if full else 500
    n = int(round(1.5 * p))
    configs = []
    for tag, signal in (("lowvz", SignalMixture(((0.0, 0.9), (2.0, 0.1)))),
                        ("highvz", SPARSE4)):
        m_values = tuple(int(round(r * p)) - n for r in (2.0, 4.0, 8.0))
        configs.append(ExperimentConfig(
            name=f"fig5_{tag}",
            model=_model(n=n, p=p, h=4.0, signal=signal),
            sweep_param="unlabeled_m",
            sweep_values=m_values,
            methods=(MethodSpec("conditional_crt", "mc", sided="one",
                                label="conditional-crt-mc"),),
            replicates=reps,
            seed=105,
            comment="fig5: conditional CRT power vs unlabeled rows at n = 1.5p; "
                    "theory rows carry lower/upper bounds and the conjectured curve "
                    "(conjecture reported, never asserted); h = 4 on the sqrt(n)*beta scale",
        ))
    return configs


def fig6(full: bool = False) -> list[ExperimentConfig]:
    """Theory: distilled-lasso CRT selection vs lasso knockoffs, penalty
    minimizing the respective noise scale."""
    return [
        _compare_config(tag, ratio, "distilled", "lasso", "fig6", 106)
        for tag, ratio in RATIOS.items()
    ]


def fig7(full: bool = False) -> list[ExperimentConfig]:
    """Simulation: selection power of BH-CRT and knockoffs at q = 0.1."""
    sizes = (1000, 2000) if full else (200, 500)
    reps = 1000 if full else 500
    configs = []
    for tag, ratio in RATIOS.items():
        methods = [
            MethodSpec("bh", "mc", sided="two", q=Q_DEFAULT, label="bh-mc"),
            MethodSpec("bh", "distilled", sided="two", q=Q_DEFAULT, label="bh-distilled"),
            MethodSpec("knockoff", "mc", sided="two", q=Q_DEFAULT, label="knockoff-mc"),
            MethodSpec("knockoff", "lasso", sided="two", q=Q_DEFAULT, label="knockoff-lasso"),
        ]
        if ratio > 2.0:
            methods.insert(2, MethodSpec("bh", "ols", sided="two", q=Q_DEFAULT, M=0,
                                         label="bh-ols"))
            methods.append(MethodSpec("knockoff", "ols", sided="two", q=Q_DEFAULT,
                                      label="knockoff-ols"))
        for p in sizes:
            n = int(round(ratio * p))
            configs.append(ExperimentConfig(
                name=f"fig7_{tag}_p{p}",
                model=_model(n=n, p=p, signal=SPARSE4),
                sweep_param="signal_h",
                sweep_values=(4.0,),
                methods=tuple(methods),
                replicates=reps,
                seed=107,
                comment="fig7: empirical selection power and FDR at q = 0.1 vs the "
                        "p = infinity theory rows; pi_1 = delta_4, gamma = 0.9; "
                        "h on the sqrt(n)*beta scale",
            ))
    return configs


def fig8(full: bool = False) -> list[ExperimentConfig]:
    """Simulation: retrospective screening |y| > C, marginal covariance CRT."""
    p = 500 if full else 200
    reps = 1000 if full else 500
    ratio = 2.5
    n = int(round(ratio * p))
    s = (1.0 + 1.6 * p / n) ** 0.5  # sqrt(sigma2 + v_Z^2)
    thresholds = tuple(round(c * s, 6) for c in (0.0, 0.5, 1.0, 1.5))
    return [ExperimentConfig(
        name="fig8",
        model=_model(n=n, p=p, h=4.0, signal=SPARSE4, screen=0.0),
        sweep_param="screen_threshold",
        sweep_values=thresholds,
        methods=(MethodSpec("crt", "mc", sided="one", label="crt-mc"),),
        replicates=reps,
        seed=108,
        comment="fig8: screened sampling keeps rows with |y| > C; sweep over "
                "C = {0, 0.5, 1, 1.5} * sqrt(sigma2 + v_Z^2); h = 4 on the "
                "sqrt(n)*beta scale",
    )]


BUILDERS = {
    "fig1": fig1, "fig2": fig2, "fig3": fig3, "fig4": fig4,
    "fig5": fig5, "fig6": fig6, "fig7": fig7, "fig8": fig8,
}

THEORY_ONLY = {"fig1", "fig2", "fig3", "fig6"}


def build(name: str, full: bool = False) -> list[ExperimentConfig]:
    if name not in BUILDERS:
        raise KeyError(f"unknown figure {name!r}; choose from {sorted(BUILDERS)}")
    return BUILDERS[name](full)
