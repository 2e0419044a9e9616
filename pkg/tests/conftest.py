import numpy as np
import pytest

from rrtransport import Dataset, NuisanceBundle, NuisancePredictions, predictions_from_bundle

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def four_row_dataset() -> Dataset:
    """The hand-arithmetic scenario-1 example: zero trial residuals."""
    return Dataset(
        y=np.array([2.0, 1.0, 3.0, 3.0]),
        s=np.array([1, 1, 0, 0]),
        a=np.array([1, 0, 0, 0]),
        x=np.zeros((4, 1)),
    )


def constant_predictions(data: Dataset, kappa: float | None = None, **values) -> NuisancePredictions:
    """Build NuisancePredictions with constant per-unit values."""
    if kappa is None:
        kappa = data.n / data.n0
    arrays = {name: np.full(data.n, float(v)) for name, v in values.items()}
    return NuisancePredictions(arrays, np.full(data.n, kappa))


@pytest.fixture
def const_preds():
    return constant_predictions


def oracle_predictions(data: Dataset, funcs: dict) -> NuisancePredictions:
    """Evaluate truth functions through a bundle (applies trimming rules)."""
    kappa = data.n / data.n0
    bundle = NuisanceBundle(kappa, funcs, {k: "oracle" for k in funcs})
    return predictions_from_bundle(data, bundle)


def balanced_scenario1(n_per_cell: int, p: int = 1, seed: int = 0) -> Dataset:
    """Scenario-1 data with (1,1), (1,0), (0,0) cells of equal size.

    The target fraction is n/(3n), i.e. 1/3 — not dyadic — so exactness
    tests that need a dyadic fraction should use dyadic_scenario1.
    """
    rng = np.random.default_rng(seed)
    n = 3 * n_per_cell
    s = np.repeat([1, 1, 0], n_per_cell)
    a = np.repeat([1, 0, 0], n_per_cell)
    x = rng.uniform(size=(n, p))
    y = (rng.uniform(size=n) < 0.3 + 0.2 * x[:, 0]).astype(float)
    return Dataset(y, s, a, x)


def dyadic_scenario1(n_trial_arm: int, p: int = 1, seed: int = 0) -> Dataset:
    """Scenario-1 data whose target fraction is exactly 1/2."""
    rng = np.random.default_rng(seed)
    n0 = 2 * n_trial_arm
    n = 4 * n_trial_arm
    s = np.repeat([1, 1, 0], [n_trial_arm, n_trial_arm, n0])
    a = np.repeat([1, 0, 0], [n_trial_arm, n_trial_arm, n0])
    x = rng.uniform(size=(n, p))
    y = (rng.uniform(size=n) < 0.3 + 0.2 * x[:, 0]).astype(float)
    return Dataset(y, s, a, x)
