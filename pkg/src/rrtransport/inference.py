"""Influence-function standard errors and Wald confidence intervals.

The asymptotic variance of each estimator is the second moment of its
influence function, so se = sqrt(P_n[IF^2]) / sqrt(n) with the 1/n
divisor (the vectors are mean zero by construction, making P_n[IF^2] the
sample variance up to the 1/n vs 1/(n-1) convention).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .errors import ParameterError
from .estimators import IfVectors, TargetEstimates

MEAN_ZERO_TOL = 1e-8


@dataclass(frozen=True)
class EstimateRecord:
    estimates: TargetEstimates
    se_alpha: float
    se_beta: float
    se_phi: float | None
    se_psi: float
    ci_alpha: tuple[float, float]
    ci_beta: tuple[float, float]
    ci_phi: tuple[float, float] | None
    ci_psi: tuple[float, float]
    level: float
    n: int

    def to_dict(self) -> dict:
        est = self.estimates
        out = {
            "method": est.method,
            "scenario": est.scenario,
            "alpha": est.alpha,
            "beta": est.beta,
            "phi": est.phi,
            "psi": est.psi,
            "se_alpha": self.se_alpha,
            "se_beta": self.se_beta,
            "se_phi": self.se_phi,
            "se_psi": self.se_psi,
            "ci_alpha_lower": self.ci_alpha[0],
            "ci_alpha_upper": self.ci_alpha[1],
            "ci_beta_lower": self.ci_beta[0],
            "ci_beta_upper": self.ci_beta[1],
            "ci_phi_lower": None if self.ci_phi is None else self.ci_phi[0],
            "ci_phi_upper": None if self.ci_phi is None else self.ci_phi[1],
            "ci_psi_lower": self.ci_psi[0],
            "ci_psi_upper": self.ci_psi[1],
            "level": self.level,
            "n": self.n,
        }
        return out


def normal_quantile(p: float) -> float:
    """Standard normal quantile (inverse CDF), accurate to double precision."""
    if not 0.0 < p < 1.0:
        raise ParameterError("quantile argument must be in (0, 1)", module="inference")
    return float(ndtri(p))


def _se(if_vector: np.ndarray) -> float:
    n = if_vector.shape[0]
    return float(np.sqrt(np.mean(if_vector**2)) / np.sqrt(n))


def wald_inference(
    points: TargetEstimates, ifs: IfVectors, level: float = 0.95
) -> EstimateRecord:
    """Wald record: se from the IF second moment, CI = point +/- z * se."""
    if not 0.0 < level < 1.0:
        raise ParameterError("level must lie in (0, 1)", module="inference")
    n = ifs.alpha.shape[0]
    if n == 0:
        raise ParameterError("empty influence vectors", module="inference")
    for name, vec in (("alpha", ifs.alpha), ("beta", ifs.beta), ("psi", ifs.psi)):
        if abs(float(np.mean(vec))) > MEAN_ZERO_TOL:
            raise ParameterError(
                f"{name} influence vector is not mean zero", module="inference"
            )
    z = normal_quantile(1.0 - (1.0 - level) / 2.0)
    se_alpha, se_beta, se_psi = _se(ifs.alpha), _se(ifs.beta), _se(ifs.psi)
    se_phi = None if ifs.phi is None else _se(ifs.phi)

    def ci(point: float, se: float) -> tuple[float, float]:
        return (point - z * se, point + z * se)

    return EstimateRecord(
        estimates=points,
        se_alpha=se_alpha,
        se_beta=se_beta,
        se_phi=se_phi,
        se_psi=se_psi,
        ci_alpha=ci(points.alpha, se_alpha),
        ci_beta=ci(points.beta, se_beta),
        ci_phi=None if se_phi is None else ci(points.phi, se_phi),
        ci_psi=ci(points.psi, se_psi),
        level=level,
        n=n,
    )
