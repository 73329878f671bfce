"""B-spline bases and the centered additive design matrix."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateDesign, InsufficientData, InvalidArgument

RANK_TOL = 1e-10


@dataclass(frozen=True)
class SplineSpec:
    """B-spline configuration for one covariate.

    ``kappa`` counts basis functions before the first one is dropped for
    identifiability, so cubic splines with ``k`` interior knots have
    ``kappa = k + 4``. A ``None`` domain is learned from training data
    (min and max) by :func:`build_design`.
    """

    degree: int = 3
    interior_knots: int = 1
    domain_lo: Optional[float] = None
    domain_hi: Optional[float] = None

    def __post_init__(self):
        if self.degree < 0 or self.interior_knots < 0:
            raise InvalidArgument("degree and interior_knots must be nonnegative")
        lo, hi = self.domain_lo, self.domain_hi
        if (lo is None) != (hi is None):
            raise InvalidArgument("set both domain bounds or neither")
        if lo is not None and not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
            raise InvalidArgument(f"invalid domain [{lo}, {hi}]")

    @classmethod
    def from_kappa(cls, kappa: int, degree: int = 3, **kwargs) -> "SplineSpec":
        if kappa < degree + 1:
            raise InvalidArgument(f"kappa must be at least degree + 1 = {degree + 1}")
        return cls(degree=degree, interior_knots=kappa - degree - 1, **kwargs)

    @property
    def kappa(self) -> int:
        return self.degree + 1 + self.interior_knots

    @property
    def has_domain(self) -> bool:
        return self.domain_lo is not None

    @property
    def knots(self) -> np.ndarray:
        """Clamped knot vector on [0, 1] with equally spaced interior knots."""
        inner = np.linspace(0.0, 1.0, self.interior_knots + 2)
        return np.concatenate([np.zeros(self.degree), inner, np.ones(self.degree)])

    def with_domain(self, lo: float, hi: float) -> "SplineSpec":
        return replace(self, domain_lo=float(lo), domain_hi=float(hi))

    def to_unit(self, x) -> np.ndarray:
        """Affine map of ``x`` onto [0, 1], clamping values outside the domain."""
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)):
            raise InvalidArgument("covariate values must be finite")
        if not self.has_domain:
            return np.clip(x, 0.0, 1.0)
        u = (x - self.domain_lo) / (self.domain_hi - self.domain_lo)
        return np.clip(u, 0.0, 1.0)


def _cox_de_boor(u: np.ndarray, knots: np.ndarray, degree: int) -> np.ndarray:
    """Evaluate all basis functions at points ``u`` (1-d) by the recursion."""
    n_basis = len(knots) - degree - 1
    m = len(knots) - 1
    u = u[:, None]
    left, right = knots[:-1], knots[1:]
    basis = ((left <= u) & (u < right)).astype(float)
    # Right endpoint belongs to the last nonempty interval.
    last = np.nonzero(left < right)[0][-1]
    at_end = u[:, 0] >= knots[-1]
    basis[at_end, :] = 0.0
    basis[at_end, last] = 1.0

    for p in range(1, degree + 1):
        width = m - p
        nxt = np.zeros((u.shape[0], width))
        for i in range(width):
            d1 = knots[i + p] - knots[i]
            d2 = knots[i + p + 1] - knots[i + 1]
            if d1 > 0:
                nxt[:, i] += (u[:, 0] - knots[i]) / d1 * basis[:, i]
            if d2 > 0:
                nxt[:, i] += (knots[i + p + 1] - u[:, 0]) / d2 * basis[:, i + 1]
        basis = nxt
    return basis[:, :n_basis]


def eval_basis(spec: SplineSpec, x) -> np.ndarray:
    """B-spline basis values at ``x``.

    Parameters
    ----------
    spec : SplineSpec
        Basis configuration; ``x`` is mapped to [0, 1] through its domain.
    x : float or array_like
        Evaluation point(s). Values outside the domain are clamped.

    Returns
    -------
    numpy.ndarray
        Shape ``(kappa,)`` for scalar ``x``, otherwise ``(len(x), kappa)``.
    """
    u = spec.to_unit(x)
    scalar = u.ndim == 0
    vals = _cox_de_boor(np.atleast_1d(u).ravel(), spec.knots, spec.degree)
    return vals[0] if scalar else vals


@dataclass
class DesignMatrix:
    """Intercept plus one centered, drop-first spline block per covariate."""

    values: np.ndarray
    column_means: np.ndarray
    column_map: list
    specs: tuple

    @property
    def shape(self):
        return self.values.shape

    def block(self, j: int) -> slice:
        k = self.specs[j].kappa - 1
        start = 1 + sum(s.kappa - 1 for s in self.specs[:j])
        return slice(start, start + k)


def _raw_block(spec: SplineSpec, xj: np.ndarray) -> np.ndarray:
    return eval_basis(spec, np.asarray(xj, dtype=float).ravel())[:, 1:]


def design_rows(specs: Sequence[SplineSpec], column_means: np.ndarray, x) -> np.ndarray:
    """Design rows for new covariates using stored domains and centering."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != len(specs):
        raise InvalidArgument(f"expected {len(specs)} covariate columns, got {x.shape[1]}")
    blocks = [np.ones((x.shape[0], 1))]
    blocks += [_raw_block(s, x[:, j]) for j, s in enumerate(specs)]
    return np.hstack(blocks) - np.concatenate([[0.0], column_means])


def build_design(data, spec: SplineSpec) -> DesignMatrix:
    """Build the centered additive design for a dataset.

    ``data`` is a :class:`~tobit_additive.likelihood.CensoredDataset` or a
    plain ``(n, d)`` covariate array. The same ``spec`` is used for every
    covariate; when it has no domain, each covariate's min and max are
    learned and stored.
    """
    x = np.asarray(getattr(data, "x", data), dtype=float)
    if x.ndim != 2:
        raise InvalidArgument("covariates must be an (n, d) matrix")
    n, d = x.shape
    cols = 1 + d * (spec.kappa - 1)
    if n < cols:
        raise InsufficientData(f"{n} rows for {cols} design columns")

    specs = []
    for j in range(d):
        if spec.has_domain:
            specs.append(spec)
            continue
        lo, hi = float(np.min(x[:, j])), float(np.max(x[:, j]))
        if not lo < hi:
            raise DegenerateDesign(f"covariate {j} has fewer than 2 distinct values")
        specs.append(spec.with_domain(lo, hi))

    raw = np.hstack([_raw_block(s, x[:, j]) for j, s in enumerate(specs)])
    means = raw.mean(axis=0)
    values = np.hstack([np.ones((n, 1)), raw - means])
    column_map = [None] + [(j, b) for j, s in enumerate(specs) for b in range(1, s.kappa)]

    eig = np.linalg.eigvalsh(values.T @ values)
    if eig[0] <= RANK_TOL * eig[-1]:
        raise DegenerateDesign("design cross-product is numerically singular")
    return DesignMatrix(values=values, column_means=means, column_map=column_map, specs=tuple(specs))


def component_curve(fit, covariate_index: int, grid, center: bool = True) -> np.ndarray:
    """Fitted additive component on ``grid``.

    With ``center=True`` (the default) the curve is shifted to mean zero
    over the grid so that it can be compared with a centered truth. With
    ``center=False`` it is the raw contribution to the linear predictor,
    centered on the training rows only.
    """
    d = len(fit.specs)
    if not 0 <= covariate_index < d:
        raise InvalidArgument(f"covariate_index {covariate_index} out of range for {d} covariates")
    spec = fit.specs[covariate_index]
    offset = sum(s.kappa - 1 for s in fit.specs[:covariate_index])
    means = np.asarray(fit.column_means)[offset:offset + spec.kappa - 1]
    rows = _raw_block(spec, grid) - means
    curve = rows @ np.asarray(fit.theta_blocks[covariate_index], dtype=float)
    if center:
        curve = curve - curve.mean()
    return curve
