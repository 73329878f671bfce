"""Independent reference computations used by the test suite."""

import itertools

import numpy as np
from scipy.stats import norm


def tobit_loglik_batch(points, B, yp, delta):
    """Censored-normal log-likelihood at many working-coordinate points.

    ``points`` has shape (m, cols + 1) with ``h`` last; uses scipy's normal
    log-density and log-survival directly.
    """
    gamma, h = points[:, :-1], points[:, -1]
    z = gamma @ B.T
    unc = np.log(h)[:, None] + norm.logpdf(h[:, None] * yp[None, :] - z)
    cen = norm.logsf(z)
    return np.where(delta[None, :], unc, cen).sum(axis=1)


def grid_argmax(B, yp, delta, lo, hi, step, chunk=200_000):
    """Exhaustive search of an axis-aligned box on a lattice of spacing ``step``."""
    axes = [np.arange(a, b + step / 2, step) for a, b in zip(lo, hi)]
    best_val, best = -np.inf, None
    lattice = itertools.product(*axes)
    while True:
        block = np.array(list(itertools.islice(lattice, chunk)))
        if block.size == 0:
            break
        vals = tobit_loglik_batch(block, B, yp, delta)
        i = int(np.argmax(vals))
        if vals[i] > best_val:
            best_val, best = vals[i], block[i]
    return best, best_val


def coarse_to_fine_argmax(B, yp, delta, center, half_width, final_step=1e-3, final_half=0.02):
    """Grid search that narrows a box around the best lattice point.

    The objective is concave, so each refinement keeps the maximizer inside
    the box; the last pass is an exhaustive lattice at ``final_step``.
    """
    center = np.asarray(center, dtype=float)
    half = np.asarray(half_width, dtype=float)
    while np.max(half) > final_half:
        step = half / 10
        axes = [np.arange(c - w, c + w + s / 2, s) for c, w, s in zip(center, half, step)]
        pts = np.array(list(itertools.product(*axes)))
        pts = pts[pts[:, -1] > 0]
        center = pts[np.argmax(tobit_loglik_batch(pts, B, yp, delta))]
        half = np.maximum(half / 5, final_half)
        if np.all(half == final_half):
            break
    lo, hi = center - final_half, center + final_half
    best, value = grid_argmax(B, yp, delta, lo, hi, final_step)
    # A maximizer on the box edge would mean the refinement lost the optimum.
    if np.any(best <= lo + final_step / 2) or np.any(best >= hi - final_step / 2):
        raise AssertionError(f"lattice maximum {best} lies on the search box boundary")
    return best, value


def ols(B, y):
    coef, *_ = np.linalg.lstsq(B, y, rcond=None)
    resid = y - B @ coef
    return coef, float(resid @ resid)
