"""Scalar and vectorized measurement nonlinearities: clip, fold, sign.

All operators are pure, total on the reals and exact in double precision;
no tolerances are applied inside them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True)
class ClipLevel:
    """Saturation threshold, in the same units as the measurement values."""

    level: float

    def __post_init__(self):
        if not (self.level > 0.0):
            raise ConfigurationError(f"clip level must be positive, got {self.level}")


@dataclass(frozen=True)
class FoldBand:
    """Periodic band union_m [(a + 2m)*delta, (1 - a + 2m)*delta]."""

    a: float
    delta: float

    def __post_init__(self):
        if not (0.0 < self.a < 0.5):
            raise ConfigurationError(f"band parameter a must be in (0, 1/2), got {self.a}")
        if not (self.delta > 0.0):
            raise ConfigurationError(f"band scale delta must be positive, got {self.delta}")


def clip(x, level: ClipLevel):
    """Saturate x into [-level, level]; identity inside the interval."""
    lam = level.level
    return np.minimum(np.maximum(x, -lam), lam)


def fold(x, level: ClipLevel):
    """Centered modulo map 2L*(x/2L + 1/2 - floor(x/2L + 1/2) - 1/2).

    2L-periodic, identity on [-L, L), range [-L, L); the upper endpoint
    maps to -L (half-open fundamental domain).  Requires a finite level.
    """
    lam = level.level
    if not math.isfinite(lam):
        raise ConfigurationError("fold requires a finite level")
    y = np.asarray(x, dtype=np.float64) / (2.0 * lam) + 0.5
    out = 2.0 * lam * (y - np.floor(y) - 0.5)
    if np.isscalar(x) or np.ndim(x) == 0:
        return float(out)
    return out


def sign_q(x):
    """Quantize to {-1, +1}; ties at zero map to +1.

    The tie rule is a fixed convention so tests are deterministic; zero
    occurs with probability zero under every continuous ensemble.
    """
    arr = np.where(np.asarray(x) >= 0, 1.0, -1.0)
    if np.isscalar(x) or np.ndim(x) == 0:
        return int(arr)
    return arr


def in_omega(t, band: FoldBand):
    """Whether t lies in the band union_m [(a + 2m)*delta, (1 - a + 2m)*delta].

    Computed by the reduction (t/delta) mod 2, with closed endpoints.
    """
    r = np.mod(np.asarray(t, dtype=np.float64) / band.delta, 2.0)
    out = (r >= band.a) & (r <= 1.0 - band.a)
    if np.isscalar(t) or np.ndim(t) == 0:
        return bool(out)
    return out


_OPS = {"clip": clip, "fold": fold, "sign": lambda x, level: np.where(np.asarray(x) >= 0, 1.0, -1.0)}


def apply_elementwise(values, op: str, level: ClipLevel | None = None):
    """Apply one of {clip, fold, sign} elementwise; bit-identical to the scalar op."""
    if op not in _OPS:
        raise ConfigurationError(f"unknown operator {op!r}")
    arr = np.asarray(values, dtype=np.float64)
    if op == "sign":
        return _OPS[op](arr, None)
    if level is None:
        raise ConfigurationError(f"{op} requires a level")
    return np.asarray(_OPS[op](arr, level), dtype=np.float64)
