"""Rate-robustness mechanism: Gaussian outcomes, perturbed-oracle nuisances.

Covariates are X1 ~ Bernoulli(0.5) independent of X2 ~ Uniform(0,1); trial
membership, trial treatment, and the outcome mean follow fixed functional
forms.  Nuisances are never fitted here: the true functions are shifted by
one noise draw per function with designed L2 error of order n^-r, which
pins the nuisance convergence rate exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data import Dataset
from ..errors import ParameterError
from ..glm import expit

DEFAULT_H = 2.2
DEFAULT_R_GRID = tuple(0.10 + 0.05 * k for k in range(9))
DEFAULT_N_GRID = (1000, 2000, 5000)


def membership_probability(x: np.ndarray) -> np.ndarray:
    """t(X) = Pr[S = 1 | X]."""
    return expit(-0.2 + 0.5 * x[:, 0] + 1.2 * x[:, 1])


def trial_propensity(x: np.ndarray) -> np.ndarray:
    """q(X) = Pr[A = 1 | X, S = 1]."""
    return expit(0.3 + 0.9 * x[:, 0] - 0.8 * x[:, 1])


def outcome_mean(x: np.ndarray, s: np.ndarray, a: np.ndarray) -> np.ndarray:
    base = 5.2 + x[:, 0] - 1.2 * x[:, 1] + a * (1.2 - 0.6 * x[:, 0])
    return (0.75 * (1 - s) + s) * base


@dataclass(frozen=True)
class RateDgmConfig:
    n: int
    r: float
    h: float = DEFAULT_H

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError("n must be positive", module="simulate")
        if not 0.0 < self.r <= 0.5:
            raise ParameterError("r must lie in (0, 0.5]", module="simulate")
        if self.h < 0.0:
            raise ParameterError("h must be nonnegative", module="simulate")


def draw_rate_dataset(n: int, rng: np.random.Generator) -> Dataset:
    x = np.column_stack([
        (rng.uniform(size=n) < 0.5).astype(float),
        rng.uniform(size=n),
    ])
    s = (rng.uniform(size=n) < membership_probability(x)).astype(int)
    a = np.where(s == 1, (rng.uniform(size=n) < trial_propensity(x)).astype(int), 0)
    y = outcome_mean(x, s, a) + rng.standard_normal(n)
    return Dataset(y, s, a, x)


def rate_oracle_functions() -> dict:
    """Unperturbed truth functions in nuisance-bundle layout."""

    def mu11(x):
        return outcome_mean(x, np.ones(x.shape[0]), np.ones(x.shape[0]))

    def mu10(x):
        return outcome_mean(x, np.ones(x.shape[0]), np.zeros(x.shape[0]))

    def mu00(x):
        return outcome_mean(x, np.zeros(x.shape[0]), np.zeros(x.shape[0]))

    def tau(x):
        t = membership_probability(x)
        return (1.0 - t) / t

    return {"mu11": mu11, "mu10": mu10, "mu00": mu00, "q": trial_propensity, "tau": tau}


def rate_alpha_truth(nodes: int = 256) -> float:
    """alpha = E[(mu11/mu10) * mu00 | S = 0], by Gauss-Legendre over X2.

    The integrand mixes the two X1 values with weight 1/2 each and the
    target-membership density 1 - t(x).
    """
    z, w = np.polynomial.legendre.leggauss(nodes)
    x2 = 0.5 * (z + 1.0)
    weights = 0.5 * w
    numerator = 0.0
    denominator = 0.0
    for x1 in (0.0, 1.0):
        x = np.column_stack([np.full(nodes, x1), x2])
        target_density = 0.5 * (1.0 - membership_probability(x))
        mu11 = outcome_mean(x, np.ones(nodes), np.ones(nodes))
        mu10 = outcome_mean(x, np.ones(nodes), np.zeros(nodes))
        mu00 = outcome_mean(x, np.zeros(nodes), np.zeros(nodes))
        numerator += float(np.sum(weights * target_density * (mu11 / mu10) * mu00))
        denominator += float(np.sum(weights * target_density))
    return numerator / denominator
