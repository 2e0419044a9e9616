"""Counterfactual means in a target population under relative-effect
transportability: multiply robust, influence-function-based estimators with
cross-fitting, plus the Monte-Carlo harness that checks their robustness,
efficiency, and rate behavior at desk scale.
"""

from .crossfit import (
    FoldScheme,
    NuisancePredictions,
    crossfit_predictions,
    make_folds,
    predictions_from_bundle,
)
from .data import Dataset, Observation, ValidationReport, load_csv, validate, write_csv
from .diagnostics import (
    scenario1_bias_term,
    scenario2_bias_terms,
    scenario3_bias_terms,
)
from .estimators import (
    IfVectors,
    TargetEstimates,
    estimate_scenario1,
    estimate_scenario2,
    estimate_scenario3,
    estimate_trial_target,
    influence_contributions,
)
from .glm import FeatureSpec, FittedNuisance, GlmFit, expit, fit_glm, logit, predict
from .inference import EstimateRecord, normal_quantile, wald_inference
from .nuisance import (
    KnownConstant,
    NuisanceBundle,
    NuisanceSpec,
    OracleFunction,
    estimate_kappa,
    fit_bundle,
    make_perturbed_oracle,
)

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "Observation",
    "ValidationReport",
    "load_csv",
    "write_csv",
    "validate",
    "FeatureSpec",
    "GlmFit",
    "FittedNuisance",
    "fit_glm",
    "predict",
    "expit",
    "logit",
    "NuisanceSpec",
    "NuisanceBundle",
    "KnownConstant",
    "OracleFunction",
    "estimate_kappa",
    "fit_bundle",
    "make_perturbed_oracle",
    "FoldScheme",
    "NuisancePredictions",
    "make_folds",
    "crossfit_predictions",
    "predictions_from_bundle",
    "TargetEstimates",
    "IfVectors",
    "estimate_scenario1",
    "estimate_scenario2",
    "estimate_scenario3",
    "estimate_trial_target",
    "influence_contributions",
    "EstimateRecord",
    "wald_inference",
    "normal_quantile",
    "scenario1_bias_term",
    "scenario2_bias_terms",
    "scenario3_bias_terms",
    "__version__",
]
