"""Main-study data-generating mechanism for the double-robustness runs.

Five uniform covariates; trial membership follows a logistic selection
model whose intercept is solved so the expected trial fraction matches the
configured sample sizes.  Potential outcomes are Bernoulli with log-scale
means built from coefficient vectors m, g, r over (1, X1..X5), so the
conditional relative effect exp{r(X)} is identical in the two populations
(relative-effect transportability holds by construction) while the g term
separates the populations on the mean scale (mean transportability fails
wherever g differs from zero).

Three hypothetical cases are supported.  Case 2 (the default, used by all
acceptance runs) makes the source a direct cause of the outcome through g.
Cases 1 and 3 route part of the outcome mean through an unobserved U that
also drives selection; they are provided for exploration only, with
f(U) = U, g1(X) a configurable linear index, and a unit coefficient on U
in the selection model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..data import Dataset
from ..errors import ParameterError, RootNotFoundError
from ..glm import expit, logit

LN_105 = math.log(1.05)

DESIGN_DEFAULTS = {
    "m": (-0.5, -0.4, -0.4, -0.4, -0.4, -0.4),
    "g": (0.0, 0.4, 0.5, -0.5, -0.6, 0.6),
    "r": (0.0, 0.5, -0.1, 0.3, 0.2, -0.3),
    "lambda_slopes": (LN_105,) * 5,
    "q": 0.5,
}


def _affine(coef: tuple[float, ...], x: np.ndarray) -> np.ndarray:
    coef_arr = np.asarray(coef, dtype=float)
    return coef_arr[0] + x @ coef_arr[1:]


def _affine_max(coef: tuple[float, ...]) -> float:
    # exact maximum of an affine index over the unit cube
    return coef[0] + sum(c for c in coef[1:] if c > 0)


def _coef_sum(*coefs: tuple[float, ...]) -> tuple[float, ...]:
    return tuple(sum(vals) for vals in zip(*coefs))


@dataclass(frozen=True)
class DgmConfig:
    """Design of one simulated population.

    Coefficient vectors run over (1, X1..Xp).  ``target_fraction`` is
    n1 / (n1 + n0); the selection intercept lambda0 is solved, not given.
    """

    case: int = 2
    n1: int = 1000
    n0: int = 5000
    m_coef: tuple[float, ...] = DESIGN_DEFAULTS["m"]
    g_coef: tuple[float, ...] = DESIGN_DEFAULTS["g"]
    r_coef: tuple[float, ...] = DESIGN_DEFAULTS["r"]
    lambda_slopes: tuple[float, ...] = DESIGN_DEFAULTS["lambda_slopes"]
    trial_propensity: float = DESIGN_DEFAULTS["q"]
    g1_coef: tuple[float, ...] | None = None  # cases 1/3: coefficient of f(U)
    lambda_u: float = 1.0  # cases 1/3: selection coefficient on U
    seed: int = 0
    clip_flag: bool = field(init=False, default=False)

    def __post_init__(self):
        if self.case not in (1, 2, 3):
            raise ParameterError(f"unknown case {self.case}", module="simulate")
        if min(self.n1, self.n0) < 1:
            raise ParameterError("sample sizes must be positive", module="simulate")
        if not 0.0 < self.trial_propensity < 1.0:
            raise ParameterError("trial propensity must be in (0,1)", module="simulate")
        lengths = {len(self.m_coef), len(self.g_coef), len(self.r_coef)}
        if len(lengths) != 1:
            raise ParameterError("m, g, r must share one length", module="simulate")
        if len(self.lambda_slopes) != len(self.m_coef) - 1:
            raise ParameterError(
                "lambda slopes must match the covariate count", module="simulate"
            )
        # Flag configurations whose implied probabilities can leave [0, 1];
        # such draws are clipped and counted.  For case 2 the bound is the
        # exact corner maximum of each affine log-mean; the U term of cases
        # 1 and 3 adds its own worst case on top.
        zero = (0.0,) * len(self.m_coef)
        maxima = [
            _affine_max(_coef_sum(self.m_coef, g_part, r_part))
            for g_part in (zero, self.g_coef)
            for r_part in (zero, self.r_coef)
        ]
        worst = max(maxima)
        if self.case in (1, 3):
            g1 = self.g1_coef if self.g1_coef is not None else self.g_coef
            worst += max(0.0, _affine_max(g1))
        object.__setattr__(self, "clip_flag", worst > 0.0)

    @property
    def p(self) -> int:
        return len(self.lambda_slopes)

    @property
    def target_fraction(self) -> float:
        return self.n1 / (self.n1 + self.n0)

    def with_sizes(self, n1: int, n0: int) -> "DgmConfig":
        return replace(self, n1=n1, n0=n0)


def _weighted_uniform_sum_density(weights: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Density of sum(w_j U_j) for U_j iid Uniform(0,1), w_j > 0.

    Inclusion-exclusion over subsets; exact piecewise polynomial.
    """
    p = weights.size
    out = np.zeros_like(t, dtype=float)
    for mask in range(1 << p):
        subset_sum = 0.0
        bits = 0
        for j in range(p):
            if mask >> j & 1:
                subset_sum += weights[j]
                bits += 1
        out += (-1.0) ** bits * np.clip(t - subset_sum, 0.0, None) ** (p - 1)
    out /= math.factorial(p - 1) * float(np.prod(weights))
    return out


def _selection_mean(lambda0: float, slopes: np.ndarray) -> float:
    """E[expit(lambda0 + sum slopes_j X_j)] for X_j iid Uniform(0,1).

    The expectation depends on X only through the linear index, so it is a
    one-dimensional integral against the exact density of the weighted
    uniform sum, evaluated by composite Simpson on 2048 intervals.
    Negative slopes are folded in as a location shift of their absolute
    value.
    """
    slopes = np.asarray(slopes, dtype=float)
    active = slopes[slopes != 0.0]
    if active.size == 0:
        return float(expit(lambda0))
    shift = float(np.sum(active[active < 0.0]))
    weights = np.abs(active)
    span = float(np.sum(weights))
    m = 2048
    t = np.linspace(0.0, span, m + 1)
    density = _weighted_uniform_sum_density(weights, t)
    values = expit(lambda0 + shift + t) * density
    h = span / m
    simpson = values[0] + values[-1] + 4.0 * np.sum(values[1:-1:2]) + 2.0 * np.sum(values[2:-1:2])
    return float(simpson * h / 3.0)


def solve_lambda0(
    slopes: tuple[float, ...], target_fraction: float, tol: float = 1e-10
) -> float:
    """Intercept making the expected trial fraction equal target_fraction."""
    if not 0.0 < target_fraction < 1.0:
        raise ParameterError("target fraction must be in (0,1)", module="simulate")
    slopes_arr = np.asarray(slopes, dtype=float)
    if slopes_arr.size == 0 or np.all(slopes_arr == 0.0):
        return float(logit(target_fraction))

    def g(lam: float) -> float:
        return _selection_mean(lam, slopes_arr) - target_fraction

    lo, hi = -1.0, 1.0
    while g(lo) > 0.0:
        lo *= 2.0
        if lo < -50.0:
            raise RootNotFoundError("no bracket below -50", module="simulate")
    while g(hi) < 0.0:
        hi *= 2.0
        if hi > 50.0:
            raise RootNotFoundError("no bracket above 50", module="simulate")
    g_lo = g(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        g_mid = g(mid)
        if abs(g_mid) <= tol or hi - lo <= 1e-14:
            return mid
        if (g_lo < 0.0) == (g_mid < 0.0):
            lo, g_lo = mid, g_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class SimDraw:
    """One simulated sample with its retained counterfactuals."""

    dataset: Dataset
    y1: np.ndarray
    y0: np.ndarray
    clip_count: int
    lambda0: float


def _log_means(config: DgmConfig, x: np.ndarray, s: np.ndarray, u: np.ndarray | None):
    m = _affine(config.m_coef, x)
    r = _affine(config.r_coef, x)
    if config.case == 2:
        shift = s * _affine(config.g_coef, x)
    else:
        g1 = config.g1_coef if config.g1_coef is not None else config.g_coef
        shift = u * _affine(g1, x)
        if config.case == 3:
            shift = shift + s * _affine(config.g_coef, x)
    return m + shift, m + r + shift


def draw_population(
    config: DgmConfig, rng: np.random.Generator, lambda0: float | None = None
) -> SimDraw:
    """Draw n1 + n0 units; counterfactuals are kept out of the Dataset."""
    n = config.n1 + config.n0
    if lambda0 is None:
        lambda0 = solve_lambda0(config.lambda_slopes, config.target_fraction)
    x = rng.uniform(size=(n, config.p))
    u = rng.uniform(size=n) if config.case in (1, 3) else None
    eta = lambda0 + x @ np.asarray(config.lambda_slopes)
    if u is not None:
        eta = eta + config.lambda_u * u
    s = (rng.uniform(size=n) < expit(eta)).astype(int)
    a = np.where(s == 1, (rng.uniform(size=n) < config.trial_propensity).astype(int), 0)
    log_p0, log_p1 = _log_means(config, x, s, u)
    p0, p1 = np.exp(log_p0), np.exp(log_p1)
    clip_count = int(np.sum(p0 > 1.0) + np.sum(p1 > 1.0))
    p0, p1 = np.minimum(p0, 1.0), np.minimum(p1, 1.0)
    y0 = (rng.uniform(size=n) < p0).astype(float)
    y1 = (rng.uniform(size=n) < p1).astype(float)
    y = np.where(a == 1, y1, y0)
    dataset = Dataset(y, s, a, x)
    return SimDraw(dataset, y1, y0, clip_count, lambda0)


def generate_dataset(config: DgmConfig, rng: np.random.Generator) -> Dataset:
    return draw_population(config, rng).dataset


def compute_truth(
    config: DgmConfig, reps: int | None = None, seed: int = 0
) -> float:
    """Monte-Carlo truth: mean over replications of mean(Y^1) among s = 0.

    Defaults to enough replications for roughly 1e5 total draws.
    """
    n = config.n1 + config.n0
    if reps is None:
        reps = max(1, math.ceil(100_000 / n))
    if reps < 1:
        raise ParameterError("reps must be at least 1", module="simulate")
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(9,)))
    lambda0 = solve_lambda0(config.lambda_slopes, config.target_fraction)
    means = np.empty(reps)
    for i in range(reps):
        draw = draw_population(config, rng, lambda0)
        target = draw.dataset.s == 0
        means[i] = float(np.mean(draw.y1[target]))
    return float(np.mean(means))


def oracle_functions(config: DgmConfig, lambda0: float | None = None) -> dict:
    """True nuisance functions of the case-2 mechanism (x-matrix callables)."""
    if config.case != 2:
        raise ParameterError(
            "oracle nuisances are only available for case 2", module="simulate"
        )
    if lambda0 is None:
        lambda0 = solve_lambda0(config.lambda_slopes, config.target_fraction)
    m_coef, g_coef, r_coef = config.m_coef, config.g_coef, config.r_coef
    slopes = np.asarray(config.lambda_slopes)
    q_val = config.trial_propensity

    def mu11(x):
        return np.exp(_affine(m_coef, x) + _affine(r_coef, x) + _affine(g_coef, x))

    def mu10(x):
        return np.exp(_affine(m_coef, x) + _affine(g_coef, x))

    def mu00(x):
        return np.exp(_affine(m_coef, x))

    def tau(x):
        t1 = expit(lambda0 + x @ slopes)
        return (1.0 - t1) / t1

    def q(x):
        return np.full(x.shape[0], q_val)

    return {"mu11": mu11, "mu10": mu10, "mu00": mu00, "tau": tau, "q": q}
