"""Data-generating mechanisms and Monte-Carlo experiment runners."""

from .dgm import (
    DESIGN_DEFAULTS,
    DgmConfig,
    SimDraw,
    compute_truth,
    draw_population,
    generate_dataset,
    oracle_functions,
    solve_lambda0,
)
from .rate import RateDgmConfig, rate_alpha_truth, rate_oracle_functions
from .runner import (
    CORRECTNESS_CONFIGS,
    McExperiment,
    MetricsTable,
    RateExperiment,
    run_mc_experiment,
    run_rate_experiment,
)

__all__ = [
    "DESIGN_DEFAULTS",
    "DgmConfig",
    "SimDraw",
    "compute_truth",
    "draw_population",
    "generate_dataset",
    "oracle_functions",
    "solve_lambda0",
    "RateDgmConfig",
    "rate_alpha_truth",
    "rate_oracle_functions",
    "CORRECTNESS_CONFIGS",
    "McExperiment",
    "MetricsTable",
    "RateExperiment",
    "run_mc_experiment",
    "run_rate_experiment",
]
