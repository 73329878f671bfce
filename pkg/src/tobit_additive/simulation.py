"""Monte Carlo study of the Tobit additive estimator.

Data follow ``Y* = m1(X1) + m2(X2) + noise_sd * eps`` with independent
Uniform[0, 1] covariates, ``m1(v) = v - 0.5`` and
``m2(v) = (v - 0.5)^2 - 1/12``, observed as ``Y = max(Y*, c)``. The limit
``c`` is the population quantile of ``Y*`` at the target censoring rate.

Replicate ``r`` of every scenario reads the random stream ``(seed, r)``
row by row, so scenarios that differ only in censoring rate share their
latent data, and the first 80 rows of an n = 160 replicate are the
n = 80 replicate (common random numbers).
"""

from __future__ import annotations

import functools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ExperimentFailure, FitError, InvalidArgument
from .estimator import BASELINE, TOBIT, fit, fit_baseline
from .likelihood import CensoredDataset
from .model_selection import DEFAULT_GRID, cv_select
from .numeric_core import RngStream, inverse_Phi
from .splines import SplineSpec, component_curve

log = logging.getLogger(__name__)

CALIBRATION_SEED = 20_240_601
CALIBRATION_STREAM = 1 << 63
DEFAULT_SEED = 7
MAX_FAILURE_FRACTION = 0.2

METHODS = {"tobit": TOBIT, "naive": BASELINE}


@dataclass(frozen=True)
class Scenario:
    n: int = 80
    cen: float = 0.05
    replicates: int = 50
    noise_sd: float = 0.2
    seed: int = DEFAULT_SEED
    grid_points: int = 50

    def __post_init__(self):
        if self.n <= 0 or self.replicates < 1 or self.grid_points < 2:
            raise InvalidArgument("n, replicates and grid_points must be positive")
        if not 0 <= self.cen < 1:
            raise InvalidArgument("cen must lie in [0, 1)")
        if not self.noise_sd >= 0:
            raise InvalidArgument("noise_sd must be nonnegative")

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.grid_points)


@dataclass
class ImseReport:
    """IMSE and pointwise bands of one method over one scenario's replicates.

    ``per_replicate`` has one row per successful replicate (in replicate
    order) and one column per component; ``bands`` maps the component index
    to arrays ``grid``, ``truth``, ``median``, ``q025`` and ``q975``.
    """

    scenario: Scenario
    method: str
    threshold: float
    imse_per_component: np.ndarray
    per_replicate: np.ndarray
    bands: dict
    failures: int = 0
    curves: np.ndarray = field(default=None, repr=False)


def m1(v):
    return np.asarray(v, dtype=float) - 0.5


def m2(v):
    return (np.asarray(v, dtype=float) - 0.5) ** 2 - 1.0 / 12.0


def true_components(grid):
    """True component functions on ``grid`` (values in [0, 1])."""
    grid = np.asarray(grid, dtype=float)
    if np.any((grid < 0) | (grid > 1)) or not np.all(np.isfinite(grid)):
        raise InvalidArgument("grid values must lie in [0, 1]")
    return m1(grid), m2(grid)


def _latent(u: np.ndarray, noise_sd: float):
    """Covariates and latent responses from an (n, 3) block of uniforms."""
    x = u[:, :2]
    y = m1(x[:, 0]) + m2(x[:, 1]) + noise_sd * inverse_Phi(u[:, 2])
    return x, y


@functools.lru_cache(maxsize=64)
def calibrate_threshold(cen: float, noise_sd: float = 0.2, oracle_draws: int = 1_000_000, seed: int = CALIBRATION_SEED) -> float:
    """Detection limit giving censoring rate ``cen``: a Monte Carlo quantile of Y*.

    ``cen = 0`` returns ``-inf`` (nothing is ever censored).
    """
    if not 0 <= cen < 1:
        raise InvalidArgument("cen must lie in [0, 1)")
    if cen == 0:
        return -np.inf
    _, y = _latent(RngStream(seed, CALIBRATION_STREAM).uniform((oracle_draws, 3)), noise_sd)
    return float(np.quantile(y, cen))


def simulate_replicate(scenario: Scenario, replicate_id: int) -> CensoredDataset:
    c = calibrate_threshold(scenario.cen, scenario.noise_sd)
    u = RngStream(scenario.seed, replicate_id).uniform((scenario.n, 3))
    x, y_latent = _latent(u, scenario.noise_sd)
    if not np.isfinite(c):
        # No censoring: place the limit strictly below every response.
        c = float(np.min(y_latent)) - 1.0
    return CensoredDataset.from_latent(x, y_latent, c)


def imse(estimated, truth) -> float:
    """Mean squared difference over the grid after centering both curves."""
    estimated = np.asarray(estimated, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if estimated.shape != truth.shape:
        raise InvalidArgument(f"length mismatch: {estimated.shape} vs {truth.shape}")
    diff = (estimated - estimated.mean()) - (truth - truth.mean())
    return float(np.mean(diff * diff))


def _fit_replicate(scenario: Scenario, replicate_id: int, methods: tuple, spec: SplineSpec, select_kappa: bool):
    """Curves for every method on one replicate; ``None`` marks a failed fit."""
    data = simulate_replicate(scenario, replicate_id)
    if select_kappa:
        try:
            domain = (spec.domain_lo, spec.domain_hi) if spec.has_domain else None
            chosen = cv_select(data, DEFAULT_GRID, seed=replicate_id, degree=spec.degree, domain=domain).chosen_kappa
            spec = SplineSpec.from_kappa(chosen, degree=spec.degree, domain_lo=spec.domain_lo, domain_hi=spec.domain_hi)
        except FitError as exc:
            log.info("replicate %d: kappa selection failed (%s), keeping kappa=%d", replicate_id, exc, spec.kappa)
    grid = scenario.grid
    out = {}
    for method in methods:
        try:
            model = fit(data, spec) if method == TOBIT else fit_baseline(data, spec)
        except FitError as exc:
            log.info("replicate %d, %s failed: %s", replicate_id, method, exc)
            out[method] = None
            continue
        out[method] = np.stack([component_curve(model, j, grid) for j in range(2)])
    return out


def _summarize(scenario, method, threshold, curves, failures) -> ImseReport:
    grid = scenario.grid
    truths = [t - t.mean() for t in true_components(grid)]
    per_rep = np.array([[imse(rep[j], truths[j]) for j in range(2)] for rep in curves])
    stack = np.stack(curves)
    bands = {}
    for j in range(2):
        # Quantiles of a sorted copy, so the result does not depend on replicate order.
        values = np.sort(stack[:, j, :], axis=0)
        q025, median, q975 = np.quantile(values, [0.025, 0.5, 0.975], axis=0)
        bands[j] = {"grid": grid, "truth": truths[j], "median": median, "q025": q025, "q975": q975}
    return ImseReport(
        scenario=scenario, method=method, threshold=threshold,
        imse_per_component=per_rep.mean(axis=0), per_replicate=per_rep,
        bands=bands, failures=failures, curves=stack,
    )


def run_experiment(
    scenario: Scenario,
    methods=("tobit", "naive"),
    spec: SplineSpec | None = None,
    select_kappa: bool = False,
    workers: int = 1,
) -> dict:
    """Fit every method on every replicate and aggregate IMSE and bands.

    Parameters
    ----------
    scenario : Scenario
        Simulation cell.
    methods : iterable of str
        Any of ``"tobit"`` and ``"naive"`` (or the full method labels).
    spec : SplineSpec, optional
        Basis for every fit; defaults to cubic splines with one interior
        knot, each covariate's domain learned from the replicate.
    select_kappa : bool
        Choose kappa per replicate by 5-fold cross-validation instead.
    workers : int
        Processes used for replicates. Results do not depend on it.

    Returns
    -------
    dict
        Method label to :class:`ImseReport`, in the order requested.

    Raises
    ------
    ExperimentFailure
        If more than 20% of a method's replicate fits fail.
    """
    labels = []
    for m in methods:
        label = METHODS.get(m, m)
        if label not in (TOBIT, BASELINE):
            raise InvalidArgument(f"unknown method {m!r}")
        if label not in labels:
            labels.append(label)
    labels = tuple(labels)
    spec = spec or SplineSpec(degree=3, interior_knots=1)
    threshold = calibrate_threshold(scenario.cen, scenario.noise_sd)

    ids = range(scenario.replicates)
    task = functools.partial(_fit_replicate, scenario, methods=labels, spec=spec, select_kappa=select_kappa)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(task, ids))
    else:
        results = [task(r) for r in ids]

    reports = {}
    for label in labels:
        curves = [res[label] for res in results if res[label] is not None]
        failures = scenario.replicates - len(curves)
        if failures > MAX_FAILURE_FRACTION * scenario.replicates:
            raise ExperimentFailure(f"{label}: {failures} of {scenario.replicates} replicate fits failed")
        reports[label] = _summarize(scenario, label, threshold, curves, failures)
    return reports
