"""Monte-Carlo experiment runners and the metrics table they emit.

Reproducibility contract: every replication draws from a generator seeded
by SeedSequence(base_seed, spawn_key=(cell_index, rep)), so results are
bit-identical for any worker count and any scheduling order.  Aggregation
walks replications in index order after all of them finish.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from multiprocessing import get_context

import numpy as np
import pandas as pd

from ..crossfit import crossfit_predictions, make_folds, predictions_from_bundle
from ..diagnostics import scenario1_bias_term
from ..errors import ParameterError, RRTransportError, StructuralError
from ..estimators import (
    METHOD_A4STAR,
    METHOD_IF,
    METHOD_IPW,
    METHOD_IPW_ALT,
    METHOD_OR,
    estimate_scenario1,
)
from ..glm import LOGISTIC, FeatureSpec
from ..inference import wald_inference
from ..nuisance import (
    KnownConstant,
    NuisanceBundle,
    NuisanceSpec,
    estimate_kappa,
    fit_bundle,
    make_perturbed_oracle,
)
from .dgm import DgmConfig, compute_truth, draw_population, oracle_functions, solve_lambda0
from .rate import (
    RateDgmConfig,
    draw_rate_dataset,
    membership_probability,
    outcome_mean,
    rate_alpha_truth,
    trial_propensity,
)

METRICS_COLUMNS = (
    "estimator",
    "config",
    "n1",
    "n0",
    "reps",
    "abs_bias",
    "sd",
    "sqrt_n_rmse",
    "coverage",
    "r1n_diag",
    "clip_count",
)

# Misspecified models regress on X2 alone without an intercept.
MISSPECIFIED_FEATURES = FeatureSpec((1,), include_intercept=False, family=LOGISTIC)

# Correctness configuration -> set of misspecified nuisances.  The control
# regression mu10 and the trial propensity stay correct throughout unless
# q corruption is explicitly switched on for the all-misspecified cell.
CORRECTNESS_CONFIGS = {
    "all_correct": frozenset(),
    "outcome_only": frozenset({"mu00", "tau"}),
    "weighting_only": frozenset({"mu11"}),
    "none_correct": frozenset({"mu11", "mu00", "tau"}),
}


@dataclass(frozen=True)
class MetricsTable:
    """Bias / SD / scaled-RMSE / coverage grid, one row per cell x estimator."""

    frame: pd.DataFrame

    def __post_init__(self):
        missing = [c for c in METRICS_COLUMNS if c not in self.frame.columns]
        if missing:
            raise ParameterError(f"metrics table missing columns {missing}", module="simulate")
        object.__setattr__(self, "frame", self.frame[list(METRICS_COLUMNS)].reset_index(drop=True))

    def to_csv_text(self) -> str:
        return self.frame.to_csv(index=False)

    def to_json_text(self) -> str:
        records = self.frame.to_dict(orient="records")
        cleaned = [
            {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in row.items()}
            for row in records
        ]
        return json.dumps(cleaned, indent=2) + "\n"

    def rows(self) -> list[dict]:
        return self.frame.to_dict(orient="records")


@dataclass(frozen=True)
class McExperiment:
    """Grid description for the double-robustness study.

    ``folds = 1`` (the default) fits every nuisance once on the full
    replication sample: the simulation nuisances are parametric GLMs, for
    which sample splitting is not needed and, at the configured stratum
    sizes, visibly inflates both bias and variance (and invalidates the
    influence-function SE).  Any ``folds >= 2`` switches to cross-fitted
    out-of-fold predictions.
    """

    base: DgmConfig = field(default_factory=DgmConfig)
    sizes: tuple[tuple[int, int], ...] = ((1000, 5000),)
    configs: tuple[str, ...] = ("all_correct",)
    estimators: tuple[str, ...] = (METHOD_IF, METHOD_OR, METHOD_IPW)
    folds: int = 1
    level: float = 0.95
    truth_reps: int | None = None
    corrupt_q: bool = False

    def __post_init__(self):
        for name in self.configs:
            if name not in CORRECTNESS_CONFIGS:
                raise ParameterError(f"unknown correctness config {name!r}", module="simulate")
        valid = (METHOD_IF, METHOD_OR, METHOD_IPW, METHOD_IPW_ALT, METHOD_A4STAR)
        for est in self.estimators:
            if est not in valid:
                raise ParameterError(f"unknown estimator {est!r}", module="simulate")

    def cells(self) -> list[tuple[str, int, int]]:
        return [(cfg, n1, n0) for (n1, n0) in self.sizes for cfg in self.configs]


def _build_spec(config: DgmConfig, misspecified: frozenset, corrupt_q: bool) -> NuisanceSpec:
    correct = FeatureSpec(tuple(range(config.p)), True, LOGISTIC)
    entries = {
        "mu11": MISSPECIFIED_FEATURES if "mu11" in misspecified else correct,
        "mu10": MISSPECIFIED_FEATURES if "mu10" in misspecified else correct,
        "mu00": MISSPECIFIED_FEATURES if "mu00" in misspecified else correct,
        "tau": MISSPECIFIED_FEATURES if "tau" in misspecified else correct,
        "q": MISSPECIFIED_FEATURES if corrupt_q else KnownConstant(config.trial_propensity),
    }
    return NuisanceSpec(entries)




def _mc_one_rep(args) -> dict:
    (experiment, cell_index, rep, base_seed, cfg_name, n1, n0, lambda0) = args
    config = experiment.base.with_sizes(n1, n0)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=base_seed, spawn_key=(cell_index, rep)))
    draw = draw_population(config, rng, lambda0)
    data = draw.dataset
    spec = _build_spec(config, CORRECTNESS_CONFIGS[cfg_name], experiment.corrupt_q)
    if experiment.folds <= 1:
        bundle = fit_bundle(data, spec, np.arange(data.n), scenario=1)
        preds = predictions_from_bundle(data, bundle)
    else:
        folds = make_folds(data, experiment.folds, int(rng.integers(2**63)))
        preds = crossfit_predictions(data, spec, folds, scenario=1)
    out: dict = {"clip_count": draw.clip_count}
    for est in experiment.estimators:
        points, ifs = estimate_scenario1(data, preds, est)
        out[est] = points.alpha
        if est == METHOD_IF and ifs is not None:
            record = wald_inference(points, ifs, experiment.level)
            out["ci_low"], out["ci_high"] = record.ci_alpha
    if config.case == 2:
        out["r1n"] = scenario1_bias_term(data, preds, oracle_functions(config, lambda0))
    return out


def _aggregate_cell(
    estimator: str,
    cfg_name: str,
    n1: int,
    n0: int,
    truth: float,
    results: list[dict],
) -> dict:
    estimates = np.array([res[estimator] for res in results])
    reps = len(results)
    bias = float(np.mean(estimates) - truth)
    sd = float(np.std(estimates, ddof=0))
    rmse = float(np.sqrt(np.mean((estimates - truth) ** 2)))
    if estimator == METHOD_IF and "ci_low" in results[0]:
        cover = float(
            np.mean([res["ci_low"] <= truth <= res["ci_high"] for res in results])
        )
    else:
        cover = math.nan
    if estimator == METHOD_IF and "r1n" in results[0]:
        r1n = float(np.mean([res["r1n"] for res in results]))
    else:
        r1n = math.nan
    return {
        "estimator": estimator,
        "config": cfg_name,
        "n1": n1,
        "n0": n0,
        "reps": reps,
        "abs_bias": abs(bias),
        "sd": sd,
        "sqrt_n_rmse": math.sqrt(n1 + n0) * rmse,
        "coverage": cover,
        "r1n_diag": r1n,
        "clip_count": int(np.sum([res["clip_count"] for res in results])),
    }


def _run_tasks(task_fn, tasks: list, workers: int) -> list:
    if workers <= 1 or len(tasks) <= 1:
        return [task_fn(t) for t in tasks]
    ctx = get_context()
    with ctx.Pool(processes=workers) as pool:
        return pool.map(task_fn, tasks, chunksize=max(1, len(tasks) // (workers * 8)))


def run_mc_experiment(
    experiment: McExperiment, reps: int, base_seed: int, workers: int = 1
) -> MetricsTable:
    """Run the estimator x correctness x size grid; aggregate per cell.

    A replication failing with a structural error aborts its cell with a
    report naming the cell and replication.
    """
    if reps < 1:
        raise ParameterError("reps must be at least 1", module="simulate")
    cells = experiment.cells()
    lambda_cache: dict[float, float] = {}
    truth_cache: dict[tuple[int, int], float] = {}
    rows = []
    for cell_index, (cfg_name, n1, n0) in enumerate(cells):
        config = experiment.base.with_sizes(n1, n0)
        frac = config.target_fraction
        if frac not in lambda_cache:
            lambda_cache[frac] = solve_lambda0(config.lambda_slopes, frac)
        if (n1, n0) not in truth_cache:
            truth_cache[(n1, n0)] = compute_truth(
                config, reps=experiment.truth_reps, seed=base_seed
            )
        tasks = [
            (experiment, cell_index, rep, base_seed, cfg_name, n1, n0, lambda_cache[frac])
            for rep in range(reps)
        ]
        try:
            results = _run_tasks(_mc_one_rep, tasks, workers)
        except RRTransportError as exc:
            raise StructuralError(
                f"cell ({cfg_name}, n1={n1}, n0={n0}) aborted: {exc}",
                module="simulate",
            ) from exc
        for est in experiment.estimators:
            rows.append(
                _aggregate_cell(est, cfg_name, n1, n0, truth_cache[(n1, n0)], results)
            )
    return MetricsTable(pd.DataFrame(rows, columns=METRICS_COLUMNS))


@dataclass(frozen=True)
class RateExperiment:
    cells: tuple[RateDgmConfig, ...]

    @staticmethod
    def grid(
        n_values: tuple[int, ...], r_values: tuple[float, ...], h: float
    ) -> "RateExperiment":
        return RateExperiment(
            tuple(RateDgmConfig(n, r, h) for n in n_values for r in r_values)
        )


def _rate_one_rep(args) -> dict:
    (cell, cell_index, rep, base_seed) = args
    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=base_seed, spawn_key=(cell_index, rep))
    )
    data = draw_rate_dataset(cell.n, rng)
    n, h, r = cell.n, cell.h, cell.r
    # One noise field per nuisance (sampled at the n data points), drawn in
    # fixed order so the stream is reproducible.
    tau_fn = make_perturbed_oracle(
        membership_probability, "odds", h, r, n, rng, per_point=True
    )
    q_fn = make_perturbed_oracle(
        trial_propensity, "probability", h, r, n, rng, per_point=True
    )

    def true_mu(s_val, a_val):
        return lambda x: outcome_mean(
            x, np.full(x.shape[0], s_val), np.full(x.shape[0], a_val)
        )

    mu00_fn = make_perturbed_oracle(true_mu(0, 0), "mean", h, r, n, rng, per_point=True)
    mu10_fn = make_perturbed_oracle(true_mu(1, 0), "mean", h, r, n, rng, per_point=True)
    mu11_fn = make_perturbed_oracle(true_mu(1, 1), "mean", h, r, n, rng, per_point=True)
    kappa = estimate_kappa(data, np.arange(data.n))
    bundle = NuisanceBundle(
        kappa,
        {"mu11": mu11_fn, "mu10": mu10_fn, "mu00": mu00_fn, "q": q_fn, "tau": tau_fn},
        {name: "perturbed" for name in ("mu11", "mu10", "mu00", "q", "tau")},
    )
    preds = predictions_from_bundle(data, bundle)
    points, _ = estimate_scenario1(data, preds, METHOD_IF)
    target = data.s == 0
    plugin = float(
        np.mean((preds["mu11"][target] / preds["mu10"][target]) * preds["mu00"][target])
    )
    return {"if": points.alpha, "plugin": plugin}


def run_rate_experiment(
    experiment: RateExperiment, reps: int, base_seed: int, workers: int = 1
) -> MetricsTable:
    """Perturbed-oracle study: influence-function estimator vs plug-in."""
    if reps < 1:
        raise ParameterError("reps must be at least 1", module="simulate")
    truth = rate_alpha_truth()
    rows = []
    for cell_index, cell in enumerate(experiment.cells):
        tasks = [(cell, cell_index, rep, base_seed) for rep in range(reps)]
        try:
            results = _run_tasks(_rate_one_rep, tasks, workers)
        except RRTransportError as exc:
            raise StructuralError(
                f"rate cell (n={cell.n}, r={cell.r}) aborted: {exc}", module="simulate"
            ) from exc
        for est in ("if", "plugin"):
            estimates = np.array([res[est] for res in results])
            bias = float(np.mean(estimates) - truth)
            sd = float(np.std(estimates, ddof=0))
            rmse = float(np.sqrt(np.mean((estimates - truth) ** 2)))
            rows.append(
                {
                    "estimator": est,
                    "config": f"h={cell.h:g},r={cell.r:g}",
                    "n1": cell.n,
                    "n0": 0,
                    "reps": reps,
                    "abs_bias": abs(bias),
                    "sd": sd,
                    "sqrt_n_rmse": math.sqrt(cell.n) * rmse,
                    "coverage": math.nan,
                    "r1n_diag": math.nan,
                    "clip_count": 0,
                }
            )
    return MetricsTable(pd.DataFrame(rows, columns=METRICS_COLUMNS))
