"""Experiment runner: Monte Carlo sweeps joined with their theory curves.

A JSON experiment config (``schema: 1``) names a model template, one sweep
parameter, a list of methods, and a replicate count.  Each (sweep value,
replicate) pair gets its own counter-based RNG stream, so results are
independent of scheduling and identical for any ``--threads`` value; rows
are aggregated in replicate order and written as CSV with the fixed header

    experiment,method,sweep_value,metric,estimate,std_error,replicates_used
"""
from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import crt
from .asymptotics import (
    TheoryScenario,
    UnlabeledEffect,
    effect_size,
    multiple_testing_limit,
    ztest_power,
)
from .amp import min_tau_over_lambda
from .knockoffs import augmented_gram, knockoff_threshold, sample_knockoffs_iid, w_statistics
from .mixture import SignalMixture
from .model_gen import (
    Dataset,
    ModelConfig,
    generate_retrospective,
    generate_setting1,
    generate_setting2,
    generate_with_unlabeled,
)
from .selection import adapt, bh, evaluate

CSV_HEADER = "experiment,method,sweep_value,metric,estimate,std_error,replicates_used"

SWEEP_PARAMS = (
    "h", "n", "p", "sigma2", "unlabeled_m", "screen_threshold", "lambda", "signal_h",
)


def thread_count(requested: Optional[int] = None) -> int:
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get("MXPL_THREADS")
    return max(1, int(env)) if env else 1


def derive_seed(base: int, *parts: int) -> int:
    """Stable 64-bit mix of a base seed and index parts (splitmix-style)."""
    x = np.uint64(base & 0xFFFFFFFFFFFFFFFF)
    for part in parts:
        x = np.uint64((int(x) + 0x9E3779B97F4A7C15 + part) & 0xFFFFFFFFFFFFFFFF)
        z = int(x)
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
        x = np.uint64(z ^ (z >> 31))
    return int(x)


@dataclass(frozen=True)
class MethodSpec:
    """One procedure/statistic pairing to run and predict."""

    procedure: str  # "crt" | "conditional_crt" | "bh" | "adapt" | "knockoff"
    statistic: str  # "mc" | "ols" | "distilled" | "lasso"
    sided: str = "two"
    q: float = 0.1
    alpha_level: float = 0.05
    M: int = 999
    lam: object = "min_tau"  # float or "min_tau"; ignored unless lasso-based
    known_variance: bool = True
    label: Optional[str] = None

    def __post_init__(self):
        if self.procedure not in ("crt", "conditional_crt", "bh", "adapt", "knockoff"):
            raise ValueError(f"unknown procedure {self.procedure!r}")
        if self.statistic not in ("mc", "ols", "distilled", "lasso"):
            raise ValueError(f"unknown statistic {self.statistic!r}")
        if self.sided not in ("one", "two"):
            raise ValueError("sided must be 'one' or 'two'")
        if self.statistic == "lasso" and self.procedure not in ("knockoff",):
            raise ValueError("the plain lasso importance is a knockoff statistic; "
                             "CRT methods use 'distilled'")
        if self.procedure == "knockoff" and self.statistic == "distilled":
            raise ValueError("knockoffs use 'lasso', not 'distilled'")

    @property
    def name(self) -> str:
        return self.label or f"{self.procedure}-{self.statistic}"

    @property
    def is_multiple(self) -> bool:
        return self.procedure in ("bh", "adapt", "knockoff")

    @classmethod
    def from_json(cls, data: dict) -> "MethodSpec":
        return cls(
            procedure=data["procedure"],
            statistic=data["statistic"],
            sided=data.get("sided", "two"),
            q=float(data.get("q", 0.1)),
            alpha_level=float(data.get("alpha_level", 0.05)),
            M=int(data.get("M", 999)),
            lam=data.get("lambda", "min_tau"),
            known_variance=bool(data.get("known_variance", True)),
            label=data.get("label"),
        )


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    model: ModelConfig
    sweep_param: str
    sweep_values: tuple
    methods: tuple[MethodSpec, ...]
    replicates: int
    seed: int
    output_path: Optional[str] = None
    comment: str = ""

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if self.sweep_param not in SWEEP_PARAMS:
            raise ValueError(f"unknown sweep parameter {self.sweep_param!r}")
        if not self.sweep_values:
            raise ValueError("sweep needs at least one value")

    @classmethod
    def from_json(cls, data: dict) -> "ExperimentConfig":
        if data.get("schema") != 1:
            raise ValueError("config must declare \"schema\": 1")
        sweep = data["sweep"]
        return cls(
            name=data["name"],
            model=ModelConfig.from_json(data["model"]),
            sweep_param=sweep["param"],
            sweep_values=tuple(sweep["values"]),
            methods=tuple(MethodSpec.from_json(m) for m in data["methods"]),
            replicates=int(data["replicates"]),
            seed=int(data.get("seed", data["model"].get("seed", 0))),
            output_path=data.get("output_path"),
            comment=data.get("comment", ""),
        )

    def to_json(self) -> dict:
        out = {
            "schema": 1,
            "name": self.name,
            "comment": self.comment,
            "model": self.model.to_json(),
            "sweep": {"param": self.sweep_param, "values": list(self.sweep_values)},
            "methods": [
                {
                    "procedure": m.procedure,
                    "statistic": m.statistic,
                    "sided": m.sided,
                    "q": m.q,
                    "alpha_level": m.alpha_level,
                    "M": m.M,
                    "lambda": m.lam,
                    "known_variance": m.known_variance,
                    "label": m.label,
                }
                for m in self.methods
            ],
            "replicates": self.replicates,
            "seed": self.seed,
        }
        if self.output_path:
            out["output_path"] = self.output_path
        return out


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    method: str
    sweep_value: float
    metric: str
    estimate: float
    std_error: float
    replicates_used: int

    def as_csv(self) -> str:
        return ",".join(
            [
                self.experiment,
                self.method,
                _fmt(self.sweep_value),
                self.metric,
                _fmt(self.estimate),
                _fmt(self.std_error),
                str(self.replicates_used),
            ]
        )


def _fmt(x: float) -> str:
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return repr(float(x))


def write_csv(rows: list[ResultRow], path: str) -> None:
    with open(path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        for row in rows:
            fh.write(row.as_csv() + "\n")


# ---------------------------------------------------------------------------
# sweep mechanics


def _apply_sweep(model: ModelConfig, param: str, value) -> ModelConfig:
    if param == "lambda":
        return model
    if param == "signal_h":
        # move every non-null atom of the signal mixture to the swept size
        gamma = model.signal.null_mass()
        if gamma >= 1.0:
            raise ValueError("signal_h sweep needs non-null mass in the mixture")
        return replace(model, signal=SignalMixture.sparse(gamma, float(value)))
    if param in ("n", "p", "unlabeled_m"):
        return replace(model, **{param: int(value)})
    return replace(model, **{param: float(value)})


def _resolve_lambdas(model: ModelConfig, methods, sweep_param, sweep_value) -> dict:
    """Fix the lasso penalty for each lasso-based method at this sweep cell."""
    out = {}
    kappa = model.kappa
    for m in methods:
        if m.statistic == "distilled":
            key = ("crt_lasso",)
        elif m.statistic == "lasso":
            key = ("kf_lasso",)
        else:
            continue
        if key in out:
            continue
        if sweep_param == "lambda":
            out[key] = float(sweep_value)
        elif m.lam == "min_tau":
            doubled = key == ("kf_lasso",)
            out[key] = min_tau_over_lambda(kappa, model.sigma2, model.signal, doubled).lam
        else:
            out[key] = float(m.lam)
    return out


def _method_lambda(m: MethodSpec, resolved: dict) -> Optional[float]:
    if m.statistic == "distilled":
        return resolved[("crt_lasso",)]
    if m.statistic == "lasso":
        return resolved[("kf_lasso",)]
    return None


# ---------------------------------------------------------------------------
# per-replicate engines


def _generate(model: ModelConfig, view: str, seed: int) -> Dataset:
    model = replace(model, seed=seed)
    if model.screen_threshold is not None:
        return generate_retrospective(model, view=view)
    if view == "focal":
        if model.unlabeled_m > 0:
            return generate_with_unlabeled(model)
        return generate_setting1(model)
    return generate_setting2(model)


def _single_test_replicate(model, methods, resolved, rep_seed) -> dict:
    dataset = _generate(model, "focal", rep_seed)
    out = {}
    proj = None
    for i, m in enumerate(methods):
        if m.procedure == "conditional_crt":
            if proj is None:
                proj = crt.conditional_projection(dataset.Z, dataset.focal_x, dataset.labeled_n)
            pv = crt.conditional_crt_unlabeled(
                dataset,
                known_variance=m.known_variance,
                M=m.M,
                sided=crt.ONE_SIDED if m.sided == "one" else crt.TWO_SIDED,
                seed=derive_seed(rep_seed, 900 + i),
                projection=proj,
            )
        else:
            sided = crt.ONE_SIDED if m.sided == "one" else crt.TWO_SIDED
            if m.statistic == "ols":
                if m.M == 0:
                    pv = crt.crt_pvalue_ols_exact(dataset, sided=sided)
                else:
                    pv = crt.crt_pvalue_resampling(
                        crt.OLS, dataset, M=m.M, sided=sided, seed=derive_seed(rep_seed, 900 + i)
                    )
            elif m.statistic == "mc":
                pv = crt.crt_pvalue_analytic(crt.MC, dataset, sided=sided)
            else:
                pv = crt.crt_pvalue_analytic(
                    crt.distilled(_method_lambda(m, resolved)), dataset, sided=sided
                )
        out[m.name] = {"power": float(pv.value <= m.alpha_level)}
    return out


def _mt_replicate(model, methods, resolved, rep_seed) -> dict:
    dataset = _generate(model, "full", rep_seed)
    X, y, truth = dataset.X, dataset.y, dataset.beta_truth
    out = {}
    pcache: dict = {}
    kcache: dict = {}
    X_tilde = None
    gram = None
    for i, m in enumerate(methods):
        if m.procedure in ("bh", "adapt"):
            sided = crt.ONE_SIDED if m.sided == "one" else crt.TWO_SIDED
            key = (m.statistic, sided, m.M)
            if key not in pcache:
                if m.statistic == "mc":
                    pcache[key] = crt.crt_pvalues_mc(X, y, sided)
                elif m.statistic == "ols":
                    # M = 0 selects the exact quadrature law; M > 0 resamples
                    if m.M == 0:
                        pcache[key] = crt.crt_pvalues_ols_exact(X, y, sided)
                    else:
                        pcache[key] = crt.crt_pvalues_ols(
                            X, y, M=m.M, sided=sided, seed=derive_seed(rep_seed, 500 + i)
                        )
                else:
                    pcache[key] = crt.crt_pvalues_distilled(
                        X, y, _method_lambda(m, resolved), sided
                    )
            pvals = pcache[key]
            res = bh(pvals, m.q, truth) if m.procedure == "bh" else adapt(pvals, m.q, beta_truth=truth)
            out[m.name] = {"power": res.power, "fdr": res.fdp}
        else:  # knockoff
            if X_tilde is None:
                X_tilde = sample_knockoffs_iid(X, seed=derive_seed(rep_seed, 3))
            antisym = "difference" if m.sided == "one" else "abs_difference"
            key = (m.statistic, antisym)
            if key not in kcache:
                if m.statistic in ("ols", "lasso") and gram is None:
                    gram = augmented_gram(X, X_tilde, y)
                kcache[key] = w_statistics(
                    X, X_tilde, y, m.statistic, antisym,
                    lam=_method_lambda(m, resolved), gram=gram,
                )
            _, selected = knockoff_threshold(kcache[key], m.q)
            fdp, power = evaluate(selected, truth)
            out[m.name] = {"power": power, "fdr": fdp}
    return out


# ---------------------------------------------------------------------------
# theory rows


def _theory_rows(config, model, methods, resolved, sweep_value) -> list[ResultRow]:
    rows = []
    kappa = model.kappa
    for m in methods:
        lam = _method_lambda(m, resolved)
        if m.procedure in ("crt", "conditional_crt"):
            scenario = TheoryScenario(
                statistic=m.statistic,
                kappa=kappa,
                sigma2=model.sigma2,
                signal=model.signal,
                h=model.h,
                sided=m.sided,
                alpha_level=m.alpha_level,
                lam=lam,
                retro_threshold=model.screen_threshold,
                kappa_star=(
                    model.n / (model.n + model.unlabeled_m)
                    if m.procedure == "conditional_crt"
                    else None
                ),
            )
            eff = effect_size(scenario)
            if isinstance(eff, UnlabeledEffect):
                parts = [
                    ("theory_lower:" + m.name, eff.lower),
                    ("theory_upper:" + m.name, eff.upper),
                    ("conjecture:" + m.name, eff.conjectured),
                ]
                for label, mu in parts:
                    rows.append(ResultRow(
                        config.name, label, sweep_value, "power_limit",
                        ztest_power(mu, m.alpha_level, m.sided), 0.0, 0,
                    ))
            else:
                rows.append(ResultRow(
                    config.name, "theory:" + m.name, sweep_value, "power_limit",
                    ztest_power(eff, m.alpha_level, m.sided), 0.0, 0,
                ))
        else:
            scenario = TheoryScenario(
                statistic=m.statistic,
                kappa=kappa,
                sigma2=model.sigma2,
                signal=model.signal,
                q=m.q,
                sided=m.sided,
                lam=lam,
                retro_threshold=model.screen_threshold,
                procedure=m.procedure,
            )
            res = multiple_testing_limit(scenario)
            rows.append(ResultRow(
                config.name, "theory:" + m.name, sweep_value, "power_limit",
                res.power_limit, 0.0, 0,
            ))
            rows.append(ResultRow(
                config.name, "theory:" + m.name, sweep_value, "fdp_limit",
                res.fdp_limit, 0.0, 0,
            ))
    return rows


# ---------------------------------------------------------------------------
# the runner


def _aggregate(config, methods, sweep_value, per_rep: list[dict]) -> list[ResultRow]:
    rows = []
    for m in methods:
        metrics = sorted({k for rep in per_rep for k in rep.get(m.name, {})})
        for metric in metrics:
            vals = np.array([rep[m.name][metric] for rep in per_rep if m.name in rep])
            n = vals.shape[0]
            est = float(np.mean(vals))
            se = float(np.std(vals, ddof=1) / math.sqrt(n)) if n > 1 else float("nan")
            rows.append(ResultRow(config.name, m.name, sweep_value, metric, est, se, n))
    return rows


def run_experiment(
    config: ExperimentConfig,
    threads: Optional[int] = None,
    mode: str = "compare",
) -> list[ResultRow]:
    """Run an experiment config; ``mode`` selects empirical rows
    ("simulate"), theory rows ("theory"), or both ("compare")."""
    if mode not in ("compare", "simulate", "theory"):
        raise ValueError(f"unknown mode {mode!r}")
    workers = thread_count(threads)
    rows: list[ResultRow] = []
    single = all(m.procedure in ("crt", "conditional_crt") for m in config.methods)
    if not single and any(m.procedure in ("crt", "conditional_crt") for m in config.methods):
        raise ValueError("mix of single-test and multiple-testing methods in one experiment")

    for sweep_idx, sweep_value in enumerate(config.sweep_values):
        model = _apply_sweep(config.model, config.sweep_param, sweep_value)
        try:
            resolved = _resolve_lambdas(model, config.methods, config.sweep_param, sweep_value)
            if mode in ("theory", "compare"):
                rows.extend(
                    _theory_rows(config, model, config.methods, resolved, sweep_value)
                )
            if mode in ("simulate", "compare"):
                engine = _single_test_replicate if single else _mt_replicate
                seeds = [
                    derive_seed(config.seed, sweep_idx, r) for r in range(config.replicates)
                ]
                if workers == 1:
                    per_rep = [engine(model, config.methods, resolved, s) for s in seeds]
                else:
                    with ThreadPoolExecutor(max_workers=workers) as pool:
                        per_rep = list(
                            pool.map(
                                lambda s: engine(model, config.methods, resolved, s), seeds
                            )
                        )
                rows.extend(_aggregate(config, config.methods, sweep_value, per_rep))
        except Exception as exc:  # noqa: BLE001 - a bad cell must not kill the sweep
            rows.append(ResultRow(
                config.name, f"error:{type(exc).__name__}", sweep_value, "error",
                float("nan"), float("nan"), 0,
            ))
    return rows


def load_config(path: str) -> ExperimentConfig:
    with open(path) as fh:
        return ExperimentConfig.from_json(json.load(fh))
