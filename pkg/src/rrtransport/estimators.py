"""Point estimators and per-unit influence-function contributions.

All influence-function-based estimators solve their estimating equation in
closed form: each influence function is affine in its own target
parameter, with coefficient kappa * (1 - S), so the solution is a ratio of
pooled sums.  Every estimator here (including the plug-in comparison
estimators) is normalized by P_n[kappa_i * (1 - S_i)]; with a full-sample
kappa that normalizer is exactly one and the estimators coincide with
their plain kappa * P_n[...] forms, while under per-fold kappa the pooled
estimating equation still holds exactly.

Centering convention: the alpha/beta centering terms always enter as
kappa * (1 - S) * (value - target), never multiplied by outcome-model
ratios, so the estimating equations are unbiased at the truth and the
returned influence vectors are empirically mean zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .crossfit import NuisancePredictions
from .data import Dataset
from .errors import ScenarioMismatchError, SpecError, StratumEmptyError

BETA_DEGENERATE = 1e-12

METHOD_IF = "if"
METHOD_OR = "or"
METHOD_IPW = "ipw"
METHOD_IPW_ALT = "ipw_alt"
METHOD_A4STAR = "a4star"
METHOD_TRIAL_TARGET = "trial_target"

SCENARIO1_METHODS = (METHOD_IF, METHOD_OR, METHOD_IPW, METHOD_IPW_ALT, METHOD_A4STAR)

_REQUIRED = {
    (1, METHOD_IF): ("mu11", "mu10", "mu00", "q", "tau"),
    (1, METHOD_OR): ("mu11", "mu10"),
    (1, METHOD_IPW): ("mu00", "mu10", "q", "tau"),
    (1, METHOD_IPW_ALT): ("mu11", "mu10", "mu00", "q", "tau"),
    (1, METHOD_A4STAR): ("mu11", "q", "tau"),
    (2, METHOD_IF): ("mu11", "mu10", "mu00", "q", "tau", "pi"),
    (3, METHOD_IF): ("mu11", "mu10", "mu00w", "m_nested", "pi_w", "q", "tau"),
    (2, METHOD_TRIAL_TARGET): ("mu01", "mu00", "pi"),
}


@dataclass(frozen=True)
class TargetEstimates:
    """Counterfactual means, their ratio and difference, with method tags.

    ``phi`` is None when |beta| is numerically zero (ratio undefined).
    """

    alpha: float
    beta: float
    psi: float
    phi: float | None
    method: str
    scenario: int


@dataclass(frozen=True)
class IfVectors:
    """Per-unit influence values evaluated at the point estimates."""

    alpha: np.ndarray
    beta: np.ndarray
    psi: np.ndarray
    phi: np.ndarray | None

    def __post_init__(self):
        for arr in (self.alpha, self.beta, self.psi, self.phi):
            if arr is not None:
                np.asarray(arr).setflags(write=False)


def _combine(alpha: float, beta: float, method: str, scenario: int) -> TargetEstimates:
    phi = alpha / beta if abs(beta) >= BETA_DEGENERATE else None
    return TargetEstimates(alpha, beta, alpha - beta, phi, method, scenario)


def _require(preds: NuisancePredictions, scenario: int, method: str) -> None:
    needed = _REQUIRED[(scenario, method)]
    missing = [name for name in needed if not preds.has(name)]
    if missing:
        raise SpecError(
            f"scenario {scenario} method {method!r} needs predictions {missing}",
            module="estimators",
        )


def _phi_psi_vectors(
    alpha_if: np.ndarray, beta_if: np.ndarray, points: TargetEstimates
) -> IfVectors:
    psi_if = alpha_if - beta_if
    if points.phi is None:
        phi_if = None
    else:
        phi_if = (alpha_if - points.phi * beta_if) / points.beta
    return IfVectors(alpha_if, beta_if, psi_if, phi_if)


def _trial_augmentation(data: Dataset, preds: NuisancePredictions) -> np.ndarray:
    """A/q-weighted treated residual minus ratio-weighted control residual.

    Returned for every unit; meaningful (and used) only where s = 1.
    """
    y, a = data.y, data.a
    mu11, mu10 = preds["mu11"], preds["mu10"]
    q, tau = preds["q"], preds["tau"]
    ratio = mu11 / mu10
    return tau * (
        a / q * (y - mu11) - (1 - a) / (1 - q) * ratio * (y - mu10)
    )


def estimate_scenario1(
    data: Dataset, preds: NuisancePredictions, method: str = METHOD_IF
) -> tuple[TargetEstimates, IfVectors | None]:
    """Scenario-1 estimators (target population uniformly on control).

    ``if`` is the influence-function estimator; ``or`` and ``ipw`` are the
    plug-in outcome-regression and weighting comparison estimators,
    ``ipw_alt`` the control-arm weighting form, and ``a4star`` the
    estimator that is efficient under mean (rather than relative-effect)
    transportability.  Influence vectors are returned for ``if`` and
    ``a4star`` only.
    """
    if method not in SCENARIO1_METHODS:
        raise SpecError(f"unknown scenario-1 method {method!r}", module="estimators")
    if not data.scenario_flags[1]:
        raise ScenarioMismatchError(
            "scenario 1 requires every target unit on control", module="estimators"
        )
    _require(preds, 1, method)
    y, s, a, kap = data.y, data.s, data.a, preds.kappa
    target = s == 0
    trial = ~target
    mass = np.sum(kap[target])
    beta = float(np.sum(kap[target] * y[target]) / mass)

    if method == METHOD_IF:
        ratio = preds["mu11"] / preds["mu10"]
        aug = _trial_augmentation(data, preds)
        contrib = np.zeros(data.n)
        contrib[trial] = (
            kap[trial] * (preds["mu00"][trial] / preds["mu10"][trial]) * aug[trial]
        )
        contrib[target] = kap[target] * ratio[target] * y[target]
        alpha = float(np.sum(contrib) / mass)
    elif method == METHOD_OR:
        ratio = preds["mu11"] / preds["mu10"]
        alpha = float(np.sum(kap[target] * ratio[target] * y[target]) / mass)
    elif method == METHOD_IPW:
        weight = (
            preds["tau"][trial]
            * (a[trial] / preds["q"][trial])
            * (preds["mu00"][trial] / preds["mu10"][trial])
        )
        alpha = float(np.sum(kap[trial] * weight * y[trial]) / mass)
    elif method == METHOD_IPW_ALT:
        ratio = preds["mu11"][trial] / preds["mu10"][trial]
        weight = (
            preds["tau"][trial]
            * ((1 - a[trial]) / (1 - preds["q"][trial]))
            * ratio
            * (preds["mu00"][trial] / preds["mu10"][trial])
        )
        alpha = float(np.sum(kap[trial] * weight * y[trial]) / mass)
    else:  # a4star
        aug = np.zeros(data.n)
        aug[trial] = (
            preds["tau"][trial]
            * (a[trial] / preds["q"][trial])
            * (y[trial] - preds["mu11"][trial])
        )
        alpha = float(
            (np.sum(kap[target] * preds["mu11"][target]) + np.sum(kap[trial] * aug[trial]))
            / mass
        )
    points = _combine(alpha, beta, method, 1)
    if method in (METHOD_IF, METHOD_A4STAR):
        return points, influence_contributions(data, preds, points)
    return points, None


def estimate_scenario2(
    data: Dataset, preds: NuisancePredictions
) -> tuple[TargetEstimates, IfVectors]:
    """Scenario-2 estimator (treatment variation in the target population)."""
    if not data.scenario_flags[2]:
        raise ScenarioMismatchError("scenario 2 unsupported", module="estimators")
    _require(preds, 2, METHOD_IF)
    if len(data.stratum_indices(0, 0)) == 0:
        raise StratumEmptyError("target control arm empty", module="estimators")
    y, s, a, kap = data.y, data.s, data.a, preds.kappa
    target = s == 0
    trial = ~target
    mass = np.sum(kap[target])
    ratio_t = preds["mu11"][target] / preds["mu10"][target]
    mu00_t = preds["mu00"][target]
    controlled = mu00_t + (1 - a[target]) / preds["pi"][target] * (y[target] - mu00_t)
    aug = _trial_augmentation(data, preds)
    trial_part = kap[trial] * (preds["mu00"][trial] / preds["mu10"][trial]) * aug[trial]
    alpha = float((np.sum(kap[target] * ratio_t * controlled) + np.sum(trial_part)) / mass)
    beta = float(np.sum(kap[target] * controlled) / mass)
    points = _combine(alpha, beta, METHOD_IF, 2)
    return points, influence_contributions(data, preds, points)


def estimate_scenario3(
    data: Dataset, preds: NuisancePredictions
) -> tuple[TargetEstimates, IfVectors]:
    """Scenario-3 estimator (additional target-only confounders W)."""
    if not data.scenario_flags[3]:
        raise ScenarioMismatchError(
            "scenario 3 requires w on every target row", module="estimators"
        )
    _require(preds, 3, METHOD_IF)
    if len(data.stratum_indices(0, 0)) == 0:
        raise StratumEmptyError("target control arm empty", module="estimators")
    y, s, a, kap = data.y, data.s, data.a, preds.kappa
    target = s == 0
    trial = ~target
    mass = np.sum(kap[target])
    ratio_t = preds["mu11"][target] / preds["mu10"][target]
    mu00w_t = preds["mu00w"][target]
    controlled = mu00w_t + (1 - a[target]) / preds["pi_w"][target] * (y[target] - mu00w_t)
    aug = _trial_augmentation(data, preds)
    trial_part = (
        kap[trial] * (preds["m_nested"][trial] / preds["mu10"][trial]) * aug[trial]
    )
    alpha = float((np.sum(kap[target] * ratio_t * controlled) + np.sum(trial_part)) / mass)
    beta = float(np.sum(kap[target] * controlled) / mass)
    points = _combine(alpha, beta, METHOD_IF, 3)
    return points, influence_contributions(data, preds, points)


def estimate_trial_target(
    data: Dataset, preds: NuisancePredictions
) -> tuple[TargetEstimates, IfVectors]:
    """Estimator for a target population that is itself a two-arm trial.

    Only target units contribute; trial rows carry zero weight in both
    estimating equations.
    """
    _require(preds, 2, METHOD_TRIAL_TARGET)
    if len(data.stratum_indices(0, 1)) == 0:
        raise StratumEmptyError("target treated arm empty", module="estimators")
    if len(data.stratum_indices(0, 0)) == 0:
        raise StratumEmptyError("target control arm empty", module="estimators")
    y, a, kap = data.y, data.a, preds.kappa
    target = data.s == 0
    mass = np.sum(kap[target])
    mu01_t, mu00_t = preds["mu01"][target], preds["mu00"][target]
    pi_t = preds["pi"][target]
    a_t, y_t = a[target], y[target]
    alpha = float(
        np.sum(kap[target] * (mu01_t + a_t / pi_t * (y_t - mu01_t))) / mass
    )
    beta = float(
        np.sum(kap[target] * (mu00_t + (1 - a_t) / pi_t * (y_t - mu00_t))) / mass
    )
    points = _combine(alpha, beta, METHOD_TRIAL_TARGET, 2)
    return points, influence_contributions(data, preds, points)


def influence_contributions(
    data: Dataset, preds: NuisancePredictions, points: TargetEstimates
) -> IfVectors:
    """Per-unit influence vectors at the supplied point estimates.

    The psi vector is alpha - beta pointwise and the phi vector is
    (alpha_if - phi * beta_if) / beta; phi is omitted when the ratio is
    undefined.
    """
    y, s, a, kap = data.y, data.s, data.a, preds.kappa
    target = s == 0
    trial = ~target
    method, scenario = points.method, points.scenario

    beta_if = np.zeros(data.n)
    alpha_if = np.zeros(data.n)

    if method in (METHOD_IF, METHOD_A4STAR) and scenario == 1:
        beta_if[target] = kap[target] * (y[target] - points.beta)
        if method == METHOD_IF:
            ratio = preds["mu11"] / preds["mu10"]
            aug = _trial_augmentation(data, preds)
            alpha_if[trial] = (
                kap[trial] * (preds["mu00"][trial] / preds["mu10"][trial]) * aug[trial]
            )
            alpha_if[target] = kap[target] * (ratio[target] * y[target] - points.alpha)
        else:
            alpha_if[target] = kap[target] * (preds["mu11"][target] - points.alpha)
            alpha_if[trial] = (
                kap[trial]
                * preds["tau"][trial]
                * (a[trial] / preds["q"][trial])
                * (y[trial] - preds["mu11"][trial])
            )
    elif method == METHOD_IF and scenario == 2:
        mu00_t = preds["mu00"][target]
        controlled = (
            mu00_t + (1 - a[target]) / preds["pi"][target] * (y[target] - mu00_t)
        )
        ratio_t = preds["mu11"][target] / preds["mu10"][target]
        aug = _trial_augmentation(data, preds)
        alpha_if[target] = kap[target] * (ratio_t * controlled - points.alpha)
        alpha_if[trial] = (
            kap[trial] * (preds["mu00"][trial] / preds["mu10"][trial]) * aug[trial]
        )
        beta_if[target] = kap[target] * (controlled - points.beta)
    elif method == METHOD_IF and scenario == 3:
        mu00w_t = preds["mu00w"][target]
        controlled = (
            mu00w_t + (1 - a[target]) / preds["pi_w"][target] * (y[target] - mu00w_t)
        )
        ratio_t = preds["mu11"][target] / preds["mu10"][target]
        aug = _trial_augmentation(data, preds)
        alpha_if[target] = kap[target] * (ratio_t * controlled - points.alpha)
        alpha_if[trial] = (
            kap[trial] * (preds["m_nested"][trial] / preds["mu10"][trial]) * aug[trial]
        )
        beta_if[target] = kap[target] * (controlled - points.beta)
    elif method == METHOD_TRIAL_TARGET:
        mu01_t, mu00_t = preds["mu01"][target], preds["mu00"][target]
        pi_t = preds["pi"][target]
        a_t, y_t = a[target], y[target]
        alpha_if[target] = kap[target] * (
            mu01_t - points.alpha + a_t / pi_t * (y_t - mu01_t)
        )
        beta_if[target] = kap[target] * (
            mu00_t - points.beta + (1 - a_t) / pi_t * (y_t - mu00_t)
        )
    else:
        raise SpecError(
            f"no influence function for method {method!r} in scenario {scenario}",
            module="estimators",
        )
    return _phi_psi_vectors(alpha_if, beta_if, points)
