"""Generalized linear model fitting used for every nuisance regression.

Two families are supported: ``logistic`` (Bernoulli outcome, logit link,
fit by iteratively reweighted least squares with Newton steps and a
step-halving line search) and ``linear`` (identity link, least squares).
A feature specification selects which covariate columns enter the design,
so a misspecified model is just a reduced ``FeatureSpec`` on the same code
path as a correct one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, SingularityError

GRADIENT_TOL = 1e-8
MAX_ITERATIONS = 100
RIDGE_JITTER = 1e-10
CONDITION_LIMIT = 1e12

LOGISTIC = "logistic"
LINEAR = "linear"
FAMILIES = (LOGISTIC, LINEAR)


def expit(z):
    """Numerically stable logistic function."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out if out.ndim else float(out)


def logit(p):
    p = np.asarray(p, dtype=float)
    out = np.log(p) - np.log1p(-p)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class FeatureSpec:
    """Design description: which covariate columns enter, intercept, family.

    ``covariate_indices`` index into the covariate matrix handed to
    ``build_design`` (for target-only models that matrix is the
    concatenation of the shared and extra covariates).
    """

    covariate_indices: tuple[int, ...]
    include_intercept: bool = True
    family: str = LOGISTIC

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterError(f"unknown family {self.family!r}", module="glm")
        if not self.include_intercept and len(self.covariate_indices) == 0:
            raise ParameterError("feature spec selects no regressors", module="glm")
        if any(i < 0 for i in self.covariate_indices):
            raise ParameterError("negative covariate index", module="glm")

    @property
    def n_columns(self) -> int:
        return len(self.covariate_indices) + int(self.include_intercept)

    def build_design(self, covariates: np.ndarray) -> np.ndarray:
        """Assemble the design matrix from a (n, p) covariate matrix."""
        covariates = np.atleast_2d(np.asarray(covariates, dtype=float))
        if self.covariate_indices and max(self.covariate_indices) >= covariates.shape[1]:
            raise ParameterError(
                f"covariate index {max(self.covariate_indices)} out of range "
                f"for {covariates.shape[1]} columns",
                module="glm",
            )
        cols = [covariates[:, list(self.covariate_indices)]]
        if self.include_intercept:
            cols.insert(0, np.ones((covariates.shape[0], 1)))
        return np.hstack(cols)


@dataclass(frozen=True)
class GlmFit:
    coefficients: np.ndarray
    family: str
    converged: bool
    iterations: int
    final_gradient_norm: float


def _solve_newton_step(hessian: np.ndarray, gradient: np.ndarray) -> np.ndarray:
    """Solve H d = g, adding ridge jitter when H is near singular."""
    try:
        cond = np.linalg.cond(hessian)
    except np.linalg.LinAlgError:
        cond = np.inf
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        hessian = hessian + RIDGE_JITTER * np.eye(hessian.shape[0])
    try:
        return np.linalg.solve(hessian, gradient)
    except np.linalg.LinAlgError:
        try:
            return np.linalg.solve(
                hessian + RIDGE_JITTER * np.eye(hessian.shape[0]), gradient
            )
        except np.linalg.LinAlgError as exc:
            raise SingularityError(
                "weighted Gram matrix singular after ridge jitter", module="glm"
            ) from exc


def _bernoulli_loglik(y: np.ndarray, eta: np.ndarray) -> float:
    # log L = sum y*eta - log(1 + exp(eta)), stable via logaddexp
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)))


def fit_glm(design: np.ndarray, response: np.ndarray, family: str) -> GlmFit:
    """Maximum-likelihood GLM fit.

    Logistic fits run IRLS-Newton until the score max-norm drops below
    1e-8 or 100 iterations elapse; a non-converged fit is returned with
    ``converged=False`` rather than raised.  Linear fits are ordinary
    least squares.
    """
    design = np.asarray(design, dtype=float)
    response = np.asarray(response, dtype=float)
    if design.ndim != 2:
        raise ParameterError("design must be 2-dimensional", module="glm")
    n, k = design.shape
    if response.shape != (n,):
        raise ParameterError("response length must match design rows", module="glm")
    if n < k:
        raise ParameterError("fewer rows than design columns", module="glm")
    if family == LINEAR:
        beta, *_ = np.linalg.lstsq(design, response, rcond=None)
        grad_norm = float(np.max(np.abs(design.T @ (response - design @ beta)), initial=0.0))
        return GlmFit(beta, LINEAR, True, 0, grad_norm)
    if family != LOGISTIC:
        raise ParameterError(f"unknown family {family!r}", module="glm")
    if not np.all((response == 0.0) | (response == 1.0)):
        raise ParameterError("logistic family requires a 0/1 response", module="glm")

    # Intercept-only fit has the closed-form solution logit(mean).
    if k == 1 and np.all(design[:, 0] == 1.0):
        ybar = float(np.mean(response))
        if 0.0 < ybar < 1.0:
            beta = np.array([logit(ybar)])
            grad = abs(float(np.sum(response - expit(beta[0]))))
            return GlmFit(beta, LOGISTIC, grad <= GRADIENT_TOL, 0, grad)
        # Degenerate stratum (all 0 or all 1): MLE sits at the boundary.
        beta = np.array([logit(min(max(ybar, 1e-12), 1.0 - 1e-12))])
        return GlmFit(beta, LOGISTIC, False, 0, float(n * min(ybar, 1.0 - ybar)))

    beta = np.zeros(k)
    eta = design @ beta
    loglik = _bernoulli_loglik(response, eta)
    grad = design.T @ (response - expit(eta))
    grad_norm = float(np.max(np.abs(grad)))
    iterations = 0
    while grad_norm > GRADIENT_TOL and iterations < MAX_ITERATIONS:
        p = expit(eta)
        weights = p * (1.0 - p)
        hessian = design.T @ (design * weights[:, None])
        step = _solve_newton_step(hessian, grad)
        # Step-halving keeps the likelihood from decreasing.
        scale = 1.0
        for _ in range(50):
            candidate = beta + scale * step
            cand_eta = design @ candidate
            cand_loglik = _bernoulli_loglik(response, cand_eta)
            if cand_loglik >= loglik - 1e-12:
                break
            scale *= 0.5
        beta = beta + scale * step
        eta = design @ beta
        loglik = _bernoulli_loglik(response, eta)
        grad = design.T @ (response - expit(eta))
        grad_norm = float(np.max(np.abs(grad)))
        iterations += 1
    return GlmFit(beta, LOGISTIC, grad_norm <= GRADIENT_TOL, iterations, grad_norm)


def predict(fit: GlmFit, covariates: np.ndarray) -> np.ndarray | float:
    """Evaluate a fit on design rows (not raw covariates; see FittedNuisance).

    Accepts a single design row or a matrix of rows; scalar in, scalar out.
    """
    covariates = np.asarray(covariates, dtype=float)
    single = covariates.ndim == 1
    rows = np.atleast_2d(covariates)
    if rows.shape[1] != fit.coefficients.shape[0]:
        raise ParameterError(
            f"expected {fit.coefficients.shape[0]} design columns, got {rows.shape[1]}",
            module="glm",
        )
    eta = rows @ fit.coefficients
    values = expit(eta) if fit.family == LOGISTIC else eta
    return float(values[0]) if single else values


@dataclass(frozen=True)
class FittedNuisance:
    """A FeatureSpec paired with its GlmFit; evaluates raw covariate rows."""

    spec: FeatureSpec
    fit: GlmFit

    def __call__(self, covariates: np.ndarray) -> np.ndarray:
        design = self.spec.build_design(covariates)
        return np.asarray(predict(self.fit, design), dtype=float)
