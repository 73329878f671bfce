"""Censored-Gaussian (Tobit) log-likelihood for a spline additive predictor.

The likelihood is evaluated in working coordinates ``gamma = theta / sigma``
and ``h = 1 / sigma``, where it is globally concave. With the detection
limit shifted to zero (``y' = y - c``) an observation contributes

* ``log h + log_phi(h * y' - B @ gamma)`` when it is above the limit, and
* ``log(1 - Phi(B @ gamma))`` when it is censored.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument
from .numeric_core import LOG_SQRT_2PI, _log_sf


@dataclass(frozen=True)
class CensoredDataset:
    """Covariates and responses left-censored at a known limit ``c``.

    Build instances with :meth:`from_observed`, which derives the
    censoring indicators from ``y`` and ``c``.
    """

    x: np.ndarray
    y: np.ndarray
    c: float
    delta: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        y = np.asarray(self.y, dtype=float).ravel()
        delta = np.asarray(self.delta, dtype=bool).ravel()
        if x.ndim != 2 or x.shape[0] != y.shape[0] or delta.shape != y.shape:
            raise InvalidArgument("x, y and delta must have matching row counts")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y)) and np.isfinite(self.c)):
            raise InvalidArgument("all values must be finite")
        if np.any(delta != (y > self.c)) or np.any(y[~delta] != self.c):
            raise InvalidArgument("delta must equal (y > c), with censored rows at y == c")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "c", float(self.c))

    @classmethod
    def from_observed(cls, x, y, c: float) -> "CensoredDataset":
        """Dataset from responses already floored at ``c``.

        Rows with ``y == c`` are censored. Values below ``c`` are rejected,
        since ``y = max(y*, c)`` can never fall under the limit.
        """
        y = np.asarray(y, dtype=float).ravel()
        if np.any(y < c):
            raise InvalidArgument(f"{int(np.sum(y < c))} responses lie below the detection limit {c}")
        return cls(x=x, y=y, c=float(c), delta=y > c)

    @classmethod
    def from_latent(cls, x, y_latent, c: float) -> "CensoredDataset":
        y = np.maximum(np.asarray(y_latent, dtype=float), c)
        return cls(x=x, y=y, c=float(c), delta=y > c)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def censored_count(self) -> int:
        return int(np.sum(~self.delta))

    @property
    def y_shifted(self) -> np.ndarray:
        return self.y - self.c

    def subset(self, rows) -> "CensoredDataset":
        return CensoredDataset(x=self.x[rows], y=self.y[rows], c=self.c, delta=self.delta[rows])

    def shifted(self, a: float) -> "CensoredDataset":
        return CensoredDataset(x=self.x, y=self.y + a, c=self.c + a, delta=self.delta)


@dataclass(frozen=True)
class NaturalParams:
    theta: np.ndarray
    sigma: float

    def __post_init__(self):
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise InvalidArgument("sigma must be positive")
        object.__setattr__(self, "theta", np.asarray(self.theta, dtype=float))


@dataclass(frozen=True)
class WorkingParams:
    gamma: np.ndarray
    h: float

    def __post_init__(self):
        if not (np.isfinite(self.h) and self.h > 0):
            raise InvalidArgument("h must be positive")
        object.__setattr__(self, "gamma", np.asarray(self.gamma, dtype=float))

    @classmethod
    def from_vector(cls, v) -> "WorkingParams":
        v = np.asarray(v, dtype=float)
        return cls(gamma=v[:-1], h=float(v[-1]))

    def to_vector(self) -> np.ndarray:
        return np.append(self.gamma, self.h)


def to_natural(params: WorkingParams) -> NaturalParams:
    return NaturalParams(theta=params.gamma / params.h, sigma=1.0 / params.h)


def from_natural(params: NaturalParams) -> WorkingParams:
    return WorkingParams(gamma=params.theta / params.sigma, h=1.0 / params.sigma)


def _unpack(params, design, data):
    B = np.asarray(getattr(design, "values", design), dtype=float)
    if isinstance(params, WorkingParams):
        gamma, h = params.gamma, params.h
    else:
        v = np.asarray(params, dtype=float)
        gamma, h = v[:-1], float(v[-1])
    if B.ndim != 2 or B.shape[1] != gamma.shape[0] or B.shape[0] != data.n:
        raise InvalidArgument(
            f"design {B.shape} does not match {gamma.shape[0]} coefficients and {data.n} rows"
        )
    return B, gamma, h


def log_likelihood(params, design, data: CensoredDataset) -> float:
    """Tobit log-likelihood in working coordinates.

    ``params`` is a :class:`WorkingParams` or a flat vector ``(gamma..., h)``.
    The ``-log sqrt(2 pi)`` constant of each uncensored density term is
    included. Returns ``-inf`` for ``h <= 0`` so that optimizers can treat
    it as an infeasible trial point.
    """
    B, gamma, h = _unpack(params, design, data)
    if not h > 0:
        return -np.inf
    z = B @ gamma
    d = data.delta
    r = h * data.y_shifted[d] - z[d]
    unc = d.sum() * np.log(h) + np.sum(-0.5 * r * r - LOG_SQRT_2PI)
    cen = np.sum(_log_sf(z[~d]))
    return float(unc + cen)


def gradient(params, design, data: CensoredDataset) -> np.ndarray:
    """Analytic gradient ``(d/dgamma, d/dh)`` of :func:`log_likelihood`."""
    B, gamma, h = _unpack(params, design, data)
    z = B @ gamma
    d = data.delta
    yp = data.y_shifted
    weights = np.empty_like(z)
    weights[d] = h * yp[d] - z[d]
    zc = z[~d]
    weights[~d] = -np.exp(-0.5 * zc * zc - LOG_SQRT_2PI - _log_sf(zc))
    g_gamma = B.T @ weights
    g_h = d.sum() / h - np.sum(weights[d] * yp[d])
    return np.append(g_gamma, g_h)


def natural_log_likelihood(theta, sigma, design, data: CensoredDataset) -> float:
    """The same log-likelihood written directly in ``(theta, sigma)``."""
    return log_likelihood(from_natural(NaturalParams(theta, sigma)), design, data)
