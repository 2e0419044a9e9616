"""Oracle bias-term diagnostics for simulation studies.

Each estimator's leading bias is bounded by a product of nuisance L2
errors.  These diagnostics evaluate the empirical version of those
products over the sample, comparing fitted predictions against supplied
truth functions; they are population quantities, so they only make sense
where oracle nuisances exist (simulation mode).

``oracles`` maps nuisance names to callables over the matching covariate
matrix (x, or [x w] for the scenario-3 target models).
"""

from __future__ import annotations

from typing import Callable, Mapping

import numpy as np

from .crossfit import NuisancePredictions
from .data import Dataset


def empirical_l2(a: np.ndarray, b: np.ndarray) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.sqrt(np.mean((a - b) ** 2)))


def _ratio_and_weighting_terms(
    data: Dataset, preds: NuisancePredictions, oracles: Mapping[str, Callable]
) -> tuple[float, float, float]:
    x = data.x
    mu11_t, mu10_t = oracles["mu11"](x), oracles["mu10"](x)
    ratio_err = empirical_l2(preds["mu11"] / preds["mu10"], mu11_t / mu10_t)
    mu10_err = empirical_l2(preds["mu10"], mu10_t)
    tau_err = empirical_l2(preds["tau"], oracles["tau"](x))
    return ratio_err, mu10_err, tau_err


def scenario1_bias_term(
    data: Dataset, preds: NuisancePredictions, oracles: Mapping[str, Callable]
) -> float:
    """Ratio error times the summed weighting-side errors."""
    ratio_err, mu10_err, tau_err = _ratio_and_weighting_terms(data, preds, oracles)
    mu00_err = empirical_l2(preds["mu00"], oracles["mu00"](data.x))
    return ratio_err * (mu00_err + mu10_err + tau_err)


def scenario2_bias_terms(
    data: Dataset, preds: NuisancePredictions, oracles: Mapping[str, Callable]
) -> dict:
    """beta term: target outcome-model error times propensity error;
    alpha term: the scenario-1 product plus the beta term."""
    target = data.stratum_indices(0)
    x_t = data.x[target]
    mu00_err = empirical_l2(preds["mu00"][target], oracles["mu00"](x_t))
    pi_err = empirical_l2(preds["pi"][target], oracles["pi"](x_t))
    beta_term = mu00_err * pi_err
    alpha_term = scenario1_bias_term(data, preds, oracles) + beta_term
    return {"beta": beta_term, "alpha": alpha_term}


def scenario3_bias_terms(
    data: Dataset, preds: NuisancePredictions, oracles: Mapping[str, Callable]
) -> dict:
    """As scenario 2, with the (x, w) target models and the nested
    regression replacing the target outcome model in the trial terms."""
    target = data.stratum_indices(0)
    xw_t = data.xw()[target]
    mu00w_err = empirical_l2(preds["mu00w"][target], oracles["mu00w"](xw_t))
    piw_err = empirical_l2(preds["pi_w"][target], oracles["pi_w"](xw_t))
    beta_term = mu00w_err * piw_err
    ratio_err, mu10_err, tau_err = _ratio_and_weighting_terms(data, preds, oracles)
    m_err = empirical_l2(preds["m_nested"], oracles["m_nested"](data.x))
    alpha_term = ratio_err * (m_err + mu10_err + tau_err) + beta_term
    return {"beta": beta_term, "alpha": alpha_term}
