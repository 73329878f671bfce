"""BFGS maximization with a strong Wolfe line search."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument, InvalidStart

_EPS = np.finfo(float).eps
MAX_LINE_SEARCH_TRIALS = 40
# Relative band within which two objective values count as equal.
NOISE_RTOL = 1e-11


class Termination(str, enum.Enum):
    GRADIENT_TOLERANCE = "GradientTolerance"
    MAX_ITERATIONS = "MaxIterations"
    LINE_SEARCH_FAILURE = "LineSearchFailure"


@dataclass(frozen=True)
class OptimizerConfig:
    grad_tol: float = 1e-8
    max_iter: int = 500
    c1: float = 1e-4
    c2: float = 0.9
    initial_step: float = 1.0

    def __post_init__(self):
        if not 0 < self.c1 < self.c2 < 1:
            raise InvalidArgument("line search requires 0 < c1 < c2 < 1")
        if self.max_iter < 1 or not self.grad_tol > 0 or not self.initial_step > 0:
            raise InvalidArgument("max_iter, grad_tol and initial_step must be positive")


@dataclass
class OptimizeResult:
    point: np.ndarray
    value: float
    grad_norm: float
    iterations: int
    converged: bool
    termination: Termination
    history: list = field(default_factory=list, repr=False)


class _LineSearchFailed(Exception):
    pass


class _Line:
    """Objective restricted to ``x + a * p``, negated for minimization."""

    def __init__(self, objective, gradient, x, p):
        self.objective, self.gradient = objective, gradient
        self.x, self.p = x, p
        self.trials = 0
        self.cache = {}

    def __call__(self, a):
        if a in self.cache:
            return self.cache[a]
        self.trials += 1
        if self.trials > MAX_LINE_SEARCH_TRIALS:
            raise _LineSearchFailed
        xa = self.x + a * self.p
        f = -float(self.objective(xa))
        if not np.isfinite(f):
            out = (np.inf, np.nan, None)
        else:
            g = -np.asarray(self.gradient(xa), dtype=float)
            out = (f, float(g @ self.p), g)
        self.cache[a] = out
        return out


def _cubic_min(a, fa, da, b, fb, db):
    """Minimizer of the cubic through two points with slopes, or None."""
    d1 = da + db - 3 * (fa - fb) / (a - b)
    rad = d1 * d1 - da * db
    if rad < 0:
        return None
    d2 = np.copysign(np.sqrt(rad), b - a)
    denom = db - da + 2 * d2
    if denom == 0:
        return None
    t = b - (b - a) * (db + d2 - d1) / denom
    return t if np.isfinite(t) else None


def _indistinct(f, f0):
    return abs(f - f0) <= NOISE_RTOL * (abs(f0) + 1.0)


def _worse(f, ref, f0, a, c1, d0):
    """Sufficient-decrease failure, judged by values only outside the noise band.

    Near the optimum the change in objective drops below the rounding
    error of the sum that produces it; slopes still carry information
    there, so value comparisons inside the band are ignored (approximate
    Wolfe conditions of Hager and Zhang).
    """
    if _indistinct(f, f0):
        return False
    return f > f0 + c1 * a * d0 or f >= ref


def _zoom(line, lo, hi, f0, d0, c1, c2):
    a_lo, f_lo, d_lo = lo
    a_hi, f_hi, d_hi = hi
    while True:
        width = a_hi - a_lo
        if abs(width) <= _EPS * max(abs(a_lo), abs(a_hi)):
            raise _LineSearchFailed
        trial = None
        if np.isfinite(f_hi) and np.isfinite(d_hi):
            trial = _cubic_min(a_lo, f_lo, d_lo, a_hi, f_hi, d_hi)
        lo_b, hi_b = sorted((a_lo + 0.1 * width, a_hi - 0.1 * width))
        if trial is None or not lo_b <= trial <= hi_b:
            trial = a_lo + 0.5 * width
        f, d, _ = line(trial)
        if _worse(f, f_lo, f0, trial, c1, d0):
            a_hi, f_hi, d_hi = trial, f, d
            continue
        if abs(d) <= -c2 * d0:
            return trial
        if d * (a_hi - a_lo) >= 0:
            a_hi, f_hi, d_hi = a_lo, f_lo, d_lo
        a_lo, f_lo, d_lo = trial, f, d


def _line_search(line, f0, d0, alpha, c1, c2):
    a_prev, f_prev, d_prev = 0.0, f0, d0
    a = alpha
    while True:
        f, d, _ = line(a)
        if _worse(f, f_prev if a_prev > 0 else np.inf, f0, a, c1, d0):
            return _zoom(line, (a_prev, f_prev, d_prev), (a, f, d), f0, d0, c1, c2)
        if abs(d) <= -c2 * d0:
            return a
        if d >= 0:
            return _zoom(line, (a, f, d), (a_prev, f_prev, d_prev), f0, d0, c1, c2)
        a_prev, f_prev, d_prev = a, f, d
        a *= 2.0


def _refine(line, a, f0, d0, c1, c2):
    """Try the slope-secant step; keep it only if it is better.

    The secant uses slopes only, so on quadratics it is the exact line
    minimizer free of the rounding in function values, which restores
    the finite termination of BFGS.
    """
    fa, da, _ = line.cache[a]
    if abs(da) <= 1e-12 * abs(d0) or line.trials >= MAX_LINE_SEARCH_TRIALS or da == d0:
        return a
    t = a * d0 / (d0 - da)
    if not 0 < t <= 16 * a or abs(t - a) <= 1e-6 * a:
        return a
    ft, dt, _ = line(t)
    better = ft < fa or (_indistinct(ft, fa) and abs(dt) < abs(da))
    if better and not _worse(ft, np.inf, f0, t, c1, d0) and abs(dt) <= -c2 * d0:
        return t
    return a


def maximize(objective, gradient, start, config: OptimizerConfig = OptimizerConfig()) -> OptimizeResult:
    """Maximize a smooth function with BFGS.

    Parameters
    ----------
    objective, gradient : callable
        Map a point (1-d array) to the objective value and its gradient.
        The objective may return ``-inf`` at infeasible points; the line
        search then backtracks.
    start : array_like
        Starting point; objective and gradient must be finite there.
    config : OptimizerConfig
        Tolerances and line search constants.

    Returns
    -------
    OptimizeResult
        ``converged`` is true only when the infinity norm of the gradient
        fell to ``config.grad_tol``. A line search that cannot satisfy the
        Wolfe conditions within 40 trials ends the run with
        ``Termination.LINE_SEARCH_FAILURE``.
    """
    x = np.array(start, dtype=float)
    f = -float(objective(x))
    g = -np.asarray(gradient(x), dtype=float)
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        raise InvalidStart("objective or gradient is not finite at the start point")

    n = x.size
    eye = np.eye(n)
    H = eye / max(1.0, np.linalg.norm(g))
    scaled = False
    history = [-f]
    k = 0
    gnorm = float(np.max(np.abs(g))) if n else 0.0
    termination = Termination.MAX_ITERATIONS

    while True:
        if gnorm <= config.grad_tol:
            termination = Termination.GRADIENT_TOLERANCE
            break
        if k >= config.max_iter:
            termination = Termination.MAX_ITERATIONS
            break
        p = -H @ g
        d0 = float(g @ p)
        if not d0 < 0:
            # Lost descent through accumulated error; restart curvature.
            H = eye / max(1.0, np.linalg.norm(g))
            scaled = False
            p = -H @ g
            d0 = float(g @ p)
        line = _Line(objective, gradient, x, p)
        try:
            a = _line_search(line, f, d0, config.initial_step, config.c1, config.c2)
            a = _refine(line, a, f, d0, config.c1, config.c2)
        except _LineSearchFailed:
            termination = Termination.LINE_SEARCH_FAILURE
            break
        f_new, _, g_new = line.cache[a]
        s = a * p
        y = g_new - g
        x = x + s
        f, g = f_new, g_new
        k += 1
        history.append(-f)
        gnorm = float(np.max(np.abs(g)))

        sy = float(s @ y)
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
            if not scaled:
                H = eye * (sy / float(y @ y))
                scaled = True
            rho = 1.0 / sy
            Hy = H @ y
            H = H - rho * (np.outer(s, Hy) + np.outer(Hy, s)) + (rho * rho * float(y @ Hy) + rho) * np.outer(s, s)

    converged = termination is Termination.GRADIENT_TOLERANCE
    return OptimizeResult(
        point=x, value=-f, grad_norm=gnorm, iterations=k,
        converged=converged, termination=termination, history=history,
    )
