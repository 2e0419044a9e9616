"""Stratified sample splitting and cross-fitted out-of-fold prediction.

Folds are dealt round-robin within each (s, a) stratum after a seeded
shuffle, so every fold keeps every stratum populated.  Nuisances for the
units of fold f are always evaluated from a bundle trained on the
complement of f; each unit also carries the kappa estimated on that same
complement.  Downstream estimating equations are solved once over the
pooled out-of-fold predictions (they reduce to the average of fold-wise
estimators up to the kappa convention, and pooling yields a single
per-unit influence-function vector for variance estimation).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .data import Dataset
from .errors import FoldInfeasibleError, ParameterError, RRTransportError
from .nuisance import (
    NUISANCE_DOMAIN,
    XW_DOMAIN,
    NuisanceBundle,
    NuisanceSpec,
    check_positivity,
    fit_bundle,
)


@dataclass(frozen=True)
class FoldScheme:
    k: int
    assignment: np.ndarray  # per-unit fold label in 0..k-1
    seed: int

    def __post_init__(self):
        labels = np.asarray(self.assignment, dtype=int)
        if self.k < 2:
            raise ParameterError("fold count must be at least 2", module="crossfit")
        if labels.min(initial=0) < 0 or labels.max(initial=0) >= self.k:
            raise ParameterError("fold labels out of range", module="crossfit")
        object.__setattr__(self, "assignment", labels)
        labels.setflags(write=False)

    def fold_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == fold)

    def complement_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment != fold)


def make_folds(data: Dataset, k: int, seed: int) -> FoldScheme:
    """Shuffle each (s, a) stratum with a seeded generator, deal round-robin."""
    if k < 2:
        raise ParameterError("fold count must be at least 2", module="crossfit")
    rng = np.random.default_rng(seed)
    assignment = np.empty(data.n, dtype=int)
    for s_val in (0, 1):
        for a_val in (0, 1):
            idx = data.stratum_indices(s_val, a_val)
            if idx.size == 0:
                continue
            if idx.size < k:
                raise FoldInfeasibleError(
                    f"stratum (s={s_val}, a={a_val}) has {idx.size} units, "
                    f"fewer than k={k}",
                    module="crossfit",
                )
            shuffled = idx[rng.permutation(idx.size)]
            assignment[shuffled] = np.arange(idx.size) % k
    return FoldScheme(k, assignment, seed)


@dataclass(frozen=True)
class NuisancePredictions:
    """Per-unit out-of-fold nuisance values plus each unit's fold kappa."""

    values: Mapping[str, np.ndarray]
    kappa: np.ndarray
    folds: FoldScheme | None = None
    clamp_fractions: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "values", dict(self.values))
        object.__setattr__(self, "clamp_fractions", dict(self.clamp_fractions))
        kappa = np.asarray(self.kappa, dtype=float)
        object.__setattr__(self, "kappa", kappa)
        kappa.setflags(write=False)
        for arr in self.values.values():
            np.asarray(arr).setflags(write=False)

    def has(self, *names: str) -> bool:
        return all(name in self.values for name in names)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.values[name]


def crossfit_predictions(
    data: Dataset, spec: NuisanceSpec, folds: FoldScheme, scenario: int
) -> NuisancePredictions:
    """For each fold, fit on its complement and evaluate on its units."""
    if folds.assignment.shape[0] != data.n:
        raise ParameterError("fold scheme does not match dataset", module="crossfit")
    names = tuple(spec.entries)
    values = {name: np.full(data.n, np.nan) for name in names}
    kappa = np.empty(data.n, dtype=float)
    clamp_totals = {name: 0.0 for name in names}
    eval_totals = {name: 0 for name in names}
    for fold in range(folds.k):
        test = folds.fold_indices(fold)
        train = folds.complement_indices(fold)
        try:
            bundle = fit_bundle(data, spec, train, scenario)
        except RRTransportError as exc:
            raise type(exc)(f"fold {fold}: {exc}", module="crossfit") from exc
        kappa[test] = bundle.kappa
        for name in names:
            # Target-only covariate models are evaluated on target rows only
            # (trial rows carry no w).
            rows = test[data.s[test] == 0] if NUISANCE_DOMAIN[name] == XW_DOMAIN else test
            if rows.size == 0:
                continue
            vals, frac = bundle.predict(name, data, rows)
            values[name][rows] = vals
            clamp_totals[name] += frac * rows.size
            eval_totals[name] += rows.size
    clamp_fractions = {
        name: clamp_totals[name] / eval_totals[name] if eval_totals[name] else 0.0
        for name in names
    }
    for name, frac in clamp_fractions.items():
        check_positivity(name, frac)
    return NuisancePredictions(values, kappa, folds, clamp_fractions)


def predictions_from_bundle(data: Dataset, bundle: NuisanceBundle) -> NuisancePredictions:
    """Evaluate a single bundle on every unit (no sample splitting).

    Used for oracle bundles and perturbed-oracle simulation, where no
    fitting takes place and cross-fitting would be a no-op.
    """
    values = {}
    clamp_fractions = {}
    for name in bundle.names():
        if NUISANCE_DOMAIN[name] == XW_DOMAIN:
            rows = data.stratum_indices(0)
            vals, frac = bundle.predict(name, data, rows)
            full = np.full(data.n, np.nan)
            full[rows] = vals
            values[name] = full
        else:
            vals, frac = bundle.predict(name, data)
            values[name] = vals
        clamp_fractions[name] = frac
        check_positivity(name, frac)
    kappa = np.full(data.n, bundle.kappa)
    return NuisancePredictions(values, kappa, None, clamp_fractions)
