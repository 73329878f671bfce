"""Gaussian kernels and deterministic random streams.

Every function accepts a scalar or an array and returns the same shape.
Scalars come back as Python floats.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

from .errors import InvalidArgument

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_SQRT2 = math.sqrt(2.0)

_MASK64 = (1 << 64) - 1
_TWO53 = float(1 << 53)


def _as_finite(z, name="z"):
    arr = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InvalidArgument(f"{name} must be finite")
    return arr


def _out(arr):
    return float(arr) if arr.ndim == 0 else arr


def log_phi(z):
    """Log of the standard normal density."""
    z = _as_finite(z)
    return _out(-0.5 * z * z - LOG_SQRT_2PI)


def log_one_minus_Phi(z):
    """Log of the standard normal upper tail, ``log(1 - Phi(z))``.

    For ``z >= 0`` the tail is written through the scaled complementary
    error function, ``1 - Phi(z) = erfcx(z/sqrt2) * exp(-z^2/2) / 2``, so
    no cancellation or underflow happens however far out ``z`` is. For
    ``z < 0`` the tail is close to one and ``log1p(-Phi(z))`` is exact.
    """
    z = _as_finite(z)
    return _out(_log_sf(z))


def _log_sf(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    zp = z[pos]
    out[pos] = np.log(0.5 * special.erfcx(zp / _SQRT2)) - 0.5 * zp * zp
    zn = z[~pos]
    out[~pos] = np.log1p(-0.5 * special.erfc(-zn / _SQRT2))
    return out


def mills_ratio(z):
    """Hazard of the standard normal, ``phi(z) / (1 - Phi(z))``, via logs."""
    z = _as_finite(z)
    return _out(np.exp(-0.5 * z * z - LOG_SQRT_2PI - _log_sf(z)))


def Phi(z):
    """Standard normal CDF."""
    z = _as_finite(z)
    return _out(special.ndtr(z))


def inverse_Phi(p):
    """Standard normal quantile function.

    Raises
    ------
    InvalidArgument
        If any ``p`` lies outside the open interval (0, 1).
    """
    p = np.asarray(p, dtype=float)
    if not np.all((p > 0.0) & (p < 1.0)):
        raise InvalidArgument("p must lie strictly between 0 and 1")
    return _out(special.ndtri(p))


class RngStream:
    """Counter-based random stream keyed by ``(seed, stream_id)``.

    Backed by Philox with the 128-bit key ``stream_id << 64 | seed``, so
    distinct stream ids never share a keystream and a given key yields the
    same bits on every platform. Normals are produced by inverting the
    normal CDF at open-interval uniforms, one uniform per normal.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        if not (0 <= seed <= _MASK64 and 0 <= stream_id <= _MASK64):
            raise InvalidArgument("seed and stream_id must be 64-bit unsigned integers")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        key = (self.stream_id << 64) | self.seed
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"

    def uniform(self, size=None):
        """Uniforms on the open interval (0, 1) with 53 random bits each."""
        k = self._gen.integers(0, 1 << 53, size=size, dtype=np.uint64)
        return (np.asarray(k, dtype=float) + 0.5) / _TWO53 if size is not None else (float(k) + 0.5) / _TWO53

    def normal(self, size=None):
        return inverse_Phi(self.uniform(size))

    def permutation(self, n: int) -> np.ndarray:
        """Uniform random permutation of ``range(n)`` (sort of uniform keys)."""
        return np.argsort(self.uniform(n), kind="stable")
