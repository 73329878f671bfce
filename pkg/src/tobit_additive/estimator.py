"""Fitting Tobit additive models, plus a naive spline least-squares baseline."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import likelihood as lk
from .errors import DegenerateData, InsufficientData, InvalidArgument, NonConvergence
from .likelihood import CensoredDataset, NaturalParams, WorkingParams
from .optimizer import OptimizerConfig, maximize
from .splines import SplineSpec, build_design, component_curve, design_rows

log = logging.getLogger(__name__)

TOBIT = "tobit-additive"
BASELINE = "naive-spline-ols"
MAX_CENSORED_FRACTION = 0.95
# Residual scale below which uncensored data are an exact spline interpolation.
EXACT_FIT_RTOL = 1e-12


@dataclass
class TobitFit:
    """A fitted additive model on the response scale.

    ``intercept`` includes the detection limit, so the latent mean at ``x``
    is ``intercept + sum_j m_j(x_j)``. Coefficient blocks act on the
    drop-first, training-centered spline columns of each covariate.
    """

    specs: tuple
    intercept: float
    theta_blocks: list
    sigma: float
    loglik: float
    converged: bool
    n_used: int
    censored_count: int
    column_means: np.ndarray
    detection_limit: float
    iterations: int = 0
    grad_norm: float = 0.0
    termination: str = "GradientTolerance"
    method: str = TOBIT
    restarts: int = field(default=0)

    @property
    def d(self) -> int:
        return len(self.specs)

    @property
    def kappa(self) -> int:
        return self.specs[0].kappa

    def theta(self, shift: float | None = None) -> np.ndarray:
        """Full coefficient vector with the intercept measured from ``shift``."""
        shift = self.detection_limit if shift is None else shift
        return np.concatenate([[self.intercept - shift], *self.theta_blocks])

    def predict(self, x_new) -> np.ndarray:
        return predict(self, x_new)

    def component(self, j: int, grid, center: bool = True) -> np.ndarray:
        return component_curve(self, j, grid, center=center)


def _ols(B, y):
    coef, *_ = np.linalg.lstsq(B, y, rcond=None)
    resid = y - B @ coef
    return coef, float(resid @ resid)


def _check_data(data: CensoredDataset, spec: SplineSpec, spare_rows: int = 5):
    cols = 1 + data.x.shape[1] * (spec.kappa - 1)
    if data.censored_count == data.n:
        raise DegenerateData("every observation is censored")
    if data.censored_count >= MAX_CENSORED_FRACTION * data.n:
        raise DegenerateData(
            f"{data.censored_count} of {data.n} observations censored "
            f"(limit {MAX_CENSORED_FRACTION:.0%})"
        )
    if data.n < cols + spare_rows:
        raise InsufficientData(f"need at least {cols + spare_rows} rows for {cols} design columns, got {data.n}")


def _assemble(design, data, theta, sigma, method, **diag) -> TobitFit:
    specs = design.specs
    blocks = [np.array(theta[design.block(j)]) for j in range(len(specs))]
    params = lk.from_natural(NaturalParams(theta, sigma))
    return TobitFit(
        specs=specs,
        intercept=float(theta[0] + data.c),
        theta_blocks=blocks,
        sigma=float(sigma),
        loglik=lk.log_likelihood(params, design, data),
        n_used=data.n,
        censored_count=data.censored_count,
        column_means=design.column_means.copy(),
        detection_limit=data.c,
        method=method,
        **diag,
    )


def fit(data: CensoredDataset, spec: SplineSpec = SplineSpec(), config: OptimizerConfig = OptimizerConfig()) -> TobitFit:
    """Maximum likelihood fit of the Tobit additive model.

    The log-likelihood is maximized by BFGS in working coordinates
    ``(theta / sigma, 1 / sigma)``, where it is concave, starting from least
    squares on the observed responses (censored rows taken at the limit).
    If that run fails, one restart from ``gamma = 0, h = 1 / SD(y - c)`` is
    attempted before :class:`NonConvergence` is raised.
    """
    _check_data(data, spec)
    design = build_design(data, spec)
    B = design.values
    yp = data.y_shifted
    n, p = B.shape

    theta0, rss = _ols(B, yp)
    scale = float(np.std(yp))
    if data.censored_count == 0 and rss <= (EXACT_FIT_RTOL * max(scale, 1.0)) ** 2 * n:
        # Exact interpolation: the likelihood grows without bound as sigma -> 0.
        sigma = max(np.sqrt(rss / n), EXACT_FIT_RTOL * max(scale, 1.0))
        return _assemble(design, data, theta0, sigma, TOBIT, converged=True)

    sd0 = np.sqrt(rss / max(n - p, 1))
    starts = [lk.from_natural(NaturalParams(theta0, sd0)).to_vector()]
    if scale > 0:
        starts.append(np.append(np.zeros(p), 1.0 / scale))

    objective = lambda v: lk.log_likelihood(v, B, data)
    grad = lambda v: lk.gradient(v, B, data)
    result = None
    for attempt, start in enumerate(starts):
        result = maximize(objective, grad, start, config)
        if result.converged:
            break
        log.warning("fit attempt %d ended with %s (|grad| = %.3g)", attempt, result.termination.value, result.grad_norm)
    if not result.converged:
        raise NonConvergence(
            f"optimizer ended with {result.termination.value}, |grad|_inf = {result.grad_norm:.3g} "
            f"after {result.iterations} iterations",
            result=result,
        )

    natural = lk.to_natural(WorkingParams.from_vector(result.point))
    return _assemble(
        design, data, natural.theta, natural.sigma, TOBIT,
        converged=True, iterations=result.iterations, grad_norm=result.grad_norm,
        termination=result.termination.value, restarts=attempt,
    )


def fit_baseline(data: CensoredDataset, spec: SplineSpec = SplineSpec()) -> TobitFit:
    """Additive spline least squares on the observed responses.

    Censoring is ignored: censored rows enter at the limit value. This is a
    transparent stand-in comparator, not a published nonparametric method.
    ``sigma`` is the maximum likelihood residual scale ``sqrt(RSS / n)``.
    Least squares only needs one row more than there are columns.
    """
    _check_data(data, spec, spare_rows=1)
    design = build_design(data, spec)
    theta, rss = _ols(design.values, data.y_shifted)
    sigma = np.sqrt(rss / data.n)
    if not sigma > 0:
        sigma = EXACT_FIT_RTOL * max(float(np.std(data.y_shifted)), 1.0)
    return _assemble(design, data, theta, sigma, BASELINE, converged=True)


def predict(fit: TobitFit, x_new) -> np.ndarray:
    """Latent mean ``intercept + sum_j m_j(x_j)`` at new covariates.

    Covariates outside the training domain are clamped to its boundary.
    """
    x_new = np.asarray(x_new, dtype=float)
    if x_new.ndim == 1:
        x_new = x_new.reshape(-1, fit.d) if fit.d > 1 else x_new[:, None]
    if x_new.ndim != 2 or x_new.shape[1] != fit.d:
        raise InvalidArgument(f"expected {fit.d} covariate columns")
    if x_new.shape[0] == 0:
        return np.empty(0)
    rows = design_rows(fit.specs, fit.column_means, x_new)
    return rows @ fit.theta(shift=0.0)


def heldout_log_likelihood(fit: TobitFit, data: CensoredDataset) -> float:
    """Log-likelihood of ``data`` under a fitted model's parameters."""
    rows = design_rows(fit.specs, fit.column_means, data.x)
    params = lk.from_natural(NaturalParams(fit.theta(shift=data.c), fit.sigma))
    return lk.log_likelihood(params, rows, data)
