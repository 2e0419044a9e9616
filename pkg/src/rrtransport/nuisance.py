"""Nuisance-function specification, fitting, and perturbed-oracle variants.

Every estimator consumes a fitted bundle of nuisance functions:

======== =============================================== ==========
name     meaning                                         domain
======== =============================================== ==========
mu11     E[Y | X, S=1, A=1]                              x
mu10     E[Y | X, S=1, A=0]                              x
mu00     E[Y | X, S=0] (scenario 1) or
         E[Y | X, S=0, A=0] (scenario 2)                 x
mu01     E[Y | X, S=0, A=1] (trial-target method only)   x
q        Pr[A=1 | X, S=1]                                x
tau      Pr[S=0 | X] / Pr[S=1 | X]                       x
pi       Pr[A=0 | X, S=0]                                x
mu00w    E[Y | X, W, S=0, A=0]                           x,w
m_nested E[ mu00w(X, W) | X, S=0 ]                       x
pi_w     Pr[A=0 | X, W, S=0]                             x,w
======== =============================================== ==========

The sampling odds ``tau`` is never modeled directly: a logistic
source-membership model for Pr[S=0 | X] is fitted on all training rows and
transformed, so the odds inherit the membership model's specification.

Denominator nuisances (mu10, q and 1-q, pi, pi_w, and the membership
probability behind tau) are clamped away from zero at ``EPS_TRIM``; an
evaluation where more than ``MAX_CLAMP_FRACTION`` of points needed clamping
raises a positivity error.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .data import Dataset
from .errors import (
    DegenerateKappaError,
    ParameterError,
    PositivityError,
    SpecError,
    StratumEmptyError,
)
from .glm import (
    LINEAR,
    LOGISTIC,
    FeatureSpec,
    FittedNuisance,
    GlmFit,
    expit,
    fit_glm,
    logit,
)

EPS_TRIM = 1e-3
MAX_CLAMP_FRACTION = 0.05

X_DOMAIN = "x"
XW_DOMAIN = "xw"

NUISANCE_DOMAIN = {
    "mu11": X_DOMAIN,
    "mu10": X_DOMAIN,
    "mu00": X_DOMAIN,
    "mu01": X_DOMAIN,
    "q": X_DOMAIN,
    "tau": X_DOMAIN,
    "pi": X_DOMAIN,
    "mu00w": XW_DOMAIN,
    "m_nested": X_DOMAIN,
    "pi_w": XW_DOMAIN,
}

# Probability-type nuisances are clamped into [eps, 1 - eps]; mu10 is
# clamped away from zero in magnitude; tau is floored at eps.
PROBABILITY_TRIMMED = ("q", "pi", "pi_w")
MAGNITUDE_TRIMMED = ("mu10",)

REQUIRED_BY_SCENARIO = {
    1: ("mu11", "mu10", "mu00", "q", "tau"),
    2: ("mu11", "mu10", "mu00", "q", "tau", "pi"),
    3: ("mu11", "mu10", "q", "tau", "mu00w", "m_nested", "pi_w"),
}

FITTED = "fitted"
KNOWN = "known"
ORACLE = "oracle"
PERTURBED = "perturbed"


@dataclass(frozen=True)
class KnownConstant:
    """A nuisance declared known, e.g. the trial propensity of a 1:1 design."""

    value: float


@dataclass(frozen=True)
class OracleFunction:
    """A nuisance supplied as a function of the covariate matrix.

    ``fn`` receives the matrix matching the nuisance's domain (x, or the
    concatenation [x w]) and returns one value per row.  For ``tau`` the
    function must return the odds directly.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    provenance: str = ORACLE


Descriptor = FeatureSpec | KnownConstant | OracleFunction


@dataclass(frozen=True)
class NuisanceSpec:
    """Declarative description of how each nuisance function is modeled."""

    entries: Mapping[str, Descriptor]

    def __post_init__(self):
        for name in self.entries:
            if name not in NUISANCE_DOMAIN:
                raise SpecError(f"unknown nuisance {name!r}", module="nuisance")
        object.__setattr__(self, "entries", dict(self.entries))

    def require(self, scenario: int, extra: tuple[str, ...] = ()) -> None:
        missing = [
            name
            for name in (*REQUIRED_BY_SCENARIO[scenario], *extra)
            if name not in self.entries
        ]
        if missing:
            raise SpecError(
                f"scenario {scenario} requires nuisances {missing}", module="nuisance"
            )

    @staticmethod
    def glm_defaults(
        p: int,
        scenario: int,
        q_extra: int = 0,
        outcome_family: str = LOGISTIC,
        q_known: float | None = None,
        with_mu01: bool = False,
    ) -> "NuisanceSpec":
        """Full-covariate GLM spec: every model uses all available columns.

        ``p`` is the number of shared covariates and ``q_extra`` the number
        of target-only covariates (scenario 3).
        """
        x_idx = tuple(range(p))
        xw_idx = tuple(range(p + q_extra))
        entries: dict[str, Descriptor] = {
            "mu11": FeatureSpec(x_idx, True, outcome_family),
            "mu10": FeatureSpec(x_idx, True, outcome_family),
            "q": KnownConstant(q_known) if q_known is not None else FeatureSpec(x_idx, True, LOGISTIC),
            "tau": FeatureSpec(x_idx, True, LOGISTIC),
        }
        if scenario in (1, 2):
            entries["mu00"] = FeatureSpec(x_idx, True, outcome_family)
        if scenario == 2:
            entries["pi"] = FeatureSpec(x_idx, True, LOGISTIC)
        if scenario == 3:
            entries["mu00w"] = FeatureSpec(xw_idx, True, outcome_family)
            entries["pi_w"] = FeatureSpec(xw_idx, True, LOGISTIC)
            entries["m_nested"] = FeatureSpec(x_idx, True, LINEAR)
        if with_mu01:
            entries["mu01"] = FeatureSpec(x_idx, True, outcome_family)
            entries.setdefault("mu00", FeatureSpec(x_idx, True, outcome_family))
            entries.setdefault("pi", FeatureSpec(x_idx, True, LOGISTIC))
        return NuisanceSpec(entries)

    @staticmethod
    def from_functions(funcs: Mapping[str, Callable], provenance: str = ORACLE) -> "NuisanceSpec":
        return NuisanceSpec({k: OracleFunction(v, provenance) for k, v in funcs.items()})


def estimate_kappa(data: Dataset, subset: np.ndarray) -> float:
    """Reciprocal of the empirical target fraction over ``subset``."""
    idx = np.asarray(subset, dtype=int)
    if idx.size == 0:
        raise DegenerateKappaError("empty subset", module="nuisance")
    n0 = int(np.sum(data.s[idx] == 0))
    if n0 == 0:
        raise DegenerateKappaError("no target units in subset", module="nuisance")
    return 1.0 / (n0 / idx.size)


def _trim_probability(values: np.ndarray) -> tuple[np.ndarray, float]:
    clamped = (values < EPS_TRIM) | (values > 1.0 - EPS_TRIM)
    return np.clip(values, EPS_TRIM, 1.0 - EPS_TRIM), float(np.mean(clamped))


def _trim_magnitude(values: np.ndarray) -> tuple[np.ndarray, float]:
    small = np.abs(values) < EPS_TRIM
    out = values.copy()
    signs = np.where(values[small] >= 0.0, 1.0, -1.0)
    out[small] = signs * EPS_TRIM
    return out, float(np.mean(small))


@dataclass(frozen=True)
class NuisanceBundle:
    """Fitted (or supplied) nuisance functions plus kappa.

    ``functions`` map a domain matrix to raw values; :meth:`predict`
    applies the denominator trimming rules and reports the clamp fraction.
    The membership probability behind ``tau`` is stored separately so the
    odds can be formed after trimming.
    """

    kappa: float
    functions: Mapping[str, Callable[[np.ndarray], np.ndarray]]
    provenance: Mapping[str, str]
    membership: Callable[[np.ndarray], np.ndarray] | None = None
    fits: Mapping[str, GlmFit] = field(default_factory=dict)

    def __post_init__(self):
        if not np.isfinite(self.kappa) or self.kappa <= 0:
            raise ParameterError("kappa must be a positive real", module="nuisance")
        object.__setattr__(self, "functions", dict(self.functions))
        object.__setattr__(self, "provenance", dict(self.provenance))
        object.__setattr__(self, "fits", dict(self.fits))

    def names(self) -> tuple[str, ...]:
        return tuple(self.functions)

    def _domain_matrix(self, name: str, data: Dataset, indices: np.ndarray | None) -> np.ndarray:
        mat = data.x if NUISANCE_DOMAIN[name] == X_DOMAIN else data.xw()
        return mat if indices is None else mat[np.asarray(indices, dtype=int)]

    def predict(
        self, name: str, data: Dataset, indices: np.ndarray | None = None
    ) -> tuple[np.ndarray, float]:
        """Evaluate one nuisance; returns (values, clamp fraction)."""
        if name == "tau" and self.membership is not None:
            mat = self._domain_matrix("tau", data, indices)
            t0, frac = _trim_probability(np.asarray(self.membership(mat), dtype=float))
            return t0 / (1.0 - t0), frac
        if name not in self.functions:
            raise SpecError(f"bundle lacks nuisance {name!r}", module="nuisance")
        mat = self._domain_matrix(name, data, indices)
        values = np.asarray(self.functions[name](mat), dtype=float)
        if values.shape != (mat.shape[0],):
            values = np.broadcast_to(np.ravel(values), (mat.shape[0],)).astype(float)
        if name in PROBABILITY_TRIMMED:
            return _trim_probability(values)
        if name in MAGNITUDE_TRIMMED:
            return _trim_magnitude(values)
        if name == "tau":
            floored = values < EPS_TRIM
            return np.maximum(values, EPS_TRIM), float(np.mean(floored))
        return values, 0.0


def _stratum(data: Dataset, train: np.ndarray, s: int, a: int | None) -> np.ndarray:
    mask = data.s[train] == s
    if a is not None:
        mask &= data.a[train] == a
    return train[mask]


FIT_STRATA = {
    "mu11": (1, 1),
    "mu10": (1, 0),
    "mu01": (0, 1),
    "q": (1, None),
    "pi": (0, None),
    "mu00w": (0, 0),
    "pi_w": (0, None),
    "m_nested": (0, None),
}


def fit_bundle(
    data: Dataset, spec: NuisanceSpec, train_indices: np.ndarray, scenario: int
) -> NuisanceBundle:
    """Fit every nuisance in ``spec`` on ``train_indices`` only.

    Deterministic given (data, spec, train_indices).  The fitting stratum
    for ``mu00`` depends on the scenario: all target rows under scenario 1,
    the target control arm under scenario 2.
    """
    if scenario not in (1, 2, 3):
        raise ParameterError(f"unknown scenario {scenario}", module="nuisance")
    train = np.asarray(train_indices, dtype=int)
    functions: dict[str, Callable] = {}
    provenance: dict[str, str] = {}
    fits: dict[str, GlmFit] = {}
    membership = None

    def fit_one(name: str, rows: np.ndarray, response: np.ndarray, descriptor: FeatureSpec):
        if rows.size == 0:
            raise StratumEmptyError(
                f"no training rows to fit {name!r}", module="nuisance"
            )
        if rows.size < descriptor.n_columns:
            raise StratumEmptyError(
                f"stratum for {name!r} smaller than its design", module="nuisance"
            )
        mat = data.x if NUISANCE_DOMAIN[name] == X_DOMAIN else data.xw()
        design = descriptor.build_design(mat[rows])
        fit = fit_glm(design, response, descriptor.family)
        fits[name] = fit
        return FittedNuisance(descriptor, fit)

    for name, descriptor in spec.entries.items():
        if isinstance(descriptor, KnownConstant):
            value = float(descriptor.value)
            functions[name] = (lambda v: (lambda mat: np.full(mat.shape[0], v)))(value)
            provenance[name] = KNOWN
            continue
        if isinstance(descriptor, OracleFunction):
            functions[name] = descriptor.fn
            provenance[name] = descriptor.provenance
            continue
        if name == "tau":
            # Source-membership model over all training rows, then odds.
            resp = (data.s[train] == 0).astype(float)
            fitted = fit_one("tau", train, resp, descriptor)
            membership = fitted
            functions["tau"] = lambda mat, f=fitted: f(mat) / (1.0 - f(mat))
            provenance["tau"] = FITTED
            continue
        if name == "mu00":
            arm = None if scenario == 1 else 0
            rows = _stratum(data, train, 0, arm)
            fitted = fit_one("mu00", rows, data.y[rows], descriptor)
            functions["mu00"] = fitted
            provenance["mu00"] = FITTED
            continue
        if name == "m_nested":
            continue  # fitted after mu00w below
        s_val, a_val = FIT_STRATA[name]
        rows = _stratum(data, train, s_val, a_val)
        if name in ("q",):
            resp = (data.a[rows] == 1).astype(float)
        elif name in ("pi", "pi_w"):
            resp = (data.a[rows] == 0).astype(float)
        else:
            resp = data.y[rows]
        fitted = fit_one(name, rows, resp, descriptor)
        functions[name] = fitted
        provenance[name] = FITTED

    if "m_nested" in spec.entries:
        descriptor = spec.entries["m_nested"]
        if isinstance(descriptor, FeatureSpec):
            if descriptor.family != LINEAR:
                raise SpecError(
                    "the nested regression must use the linear family",
                    module="nuisance",
                )
            if "mu00w" not in functions:
                raise SpecError(
                    "m_nested requires mu00w in the same spec", module="nuisance"
                )
            rows = _stratum(data, train, 0, None)
            if rows.size == 0:
                raise StratumEmptyError(
                    "no training rows to fit 'm_nested'", module="nuisance"
                )
            inner = np.asarray(functions["mu00w"](data.xw()[rows]), dtype=float)
            design = descriptor.build_design(data.x[rows])
            fit = fit_glm(design, inner, LINEAR)
            fits["m_nested"] = fit
            functions["m_nested"] = FittedNuisance(descriptor, fit)
            provenance["m_nested"] = FITTED

    kappa = estimate_kappa(data, train)
    return NuisanceBundle(kappa, functions, provenance, membership, fits)


def make_perturbed_oracle(
    truth: Callable[[np.ndarray], np.ndarray],
    kind: str,
    h: float,
    r: float,
    n: int,
    rng: np.random.Generator,
    per_point: bool = False,
) -> Callable[[np.ndarray], np.ndarray]:
    """Noise-perturbed version of a true nuisance function.

    Noise ``eps ~ N(n^-r, n^-2r)`` shifts the function on the logit scale
    for ``probability``, additively for ``mean``; ``odds`` takes the true
    membership probability, perturbs it on the logit scale, and returns
    the implied odds (1 - t)/t, matching how the sampling odds are
    composed from a membership model.  Either way the designed L2 error is
    O(n^-r).  With ``h = 0`` the truth is returned untouched.

    ``per_point=False`` draws one scalar per function (a constant shift in
    the link).  ``per_point=True`` draws a noise field once, sampled iid
    at exactly ``n`` evaluation points; the returned function must then be
    evaluated on matrices with ``n`` rows (the simulation sample), and the
    idiosyncratic part of the noise averages out in sample means while the
    systematic n^-r component remains.
    """
    if kind not in ("probability", "mean", "odds"):
        raise ParameterError(f"unknown perturbation kind {kind!r}", module="nuisance")
    if h < 0:
        raise ParameterError("h must be nonnegative", module="nuisance")
    if not (0.0 < r <= 0.5):
        raise ParameterError("r must lie in (0, 0.5]", module="nuisance")
    if n < 1:
        raise ParameterError("n must be at least 1", module="nuisance")
    if h == 0.0:
        if kind == "odds":
            return lambda mat: (1.0 - np.asarray(truth(mat), float)) / np.asarray(truth(mat), float)
        return truth
    scale = n ** (-r)
    if per_point:
        noise = h * rng.normal(loc=scale, scale=scale, size=n)

        def shift_for(mat: np.ndarray) -> np.ndarray:
            if mat.shape[0] != n:
                raise ParameterError(
                    f"per-point perturbed oracle expects {n} rows, got {mat.shape[0]}",
                    module="nuisance",
                )
            return noise

    else:
        shift = h * float(rng.normal(loc=scale, scale=scale))

        def shift_for(mat: np.ndarray) -> np.ndarray:
            return np.full(mat.shape[0], shift)

    if kind == "mean":
        return lambda mat: np.asarray(truth(mat), dtype=float) + shift_for(mat)
    if kind == "probability":
        return lambda mat: expit(
            logit(np.asarray(truth(mat), dtype=float)) + shift_for(mat)
        )

    def perturbed_odds(mat):
        t = expit(logit(np.asarray(truth(mat), dtype=float)) + shift_for(mat))
        return (1.0 - t) / t

    return perturbed_odds


def check_positivity(name: str, clamp_fraction: float) -> None:
    if clamp_fraction > MAX_CLAMP_FRACTION:
        raise PositivityError(
            f"{clamp_fraction:.1%} of {name!r} predictions required clamping "
            f"(limit {MAX_CLAMP_FRACTION:.0%})",
            module="nuisance",
        )
