"""Measurement-vector ensembles and their one-dimensional marginal oracles.

Supported laws for the measurement row X in R^n:

* ``uniform_sphere``   - uniform on the sphere of radius sqrt(n)
* ``gaussian``         - standard normal, identity covariance
* ``rademacher``       - i.i.d. +-1 entries
* ``two_subsphere``    - uniform on sqrt(n)*(S^{n-1} and {x_1 = 0}) or
                         sqrt(n)*(S^{n-1} and {x_2 = 0}), a fair coin each
* ``atom_plus_sphere`` - a fixed point of norm sqrt(n) with mass 1/2,
                         otherwise uniform on the sqrt(n) sphere

Sampling is chunked and counter-seeded (see :mod:`clipfold.mc`), so a
matrix regenerates bit-exactly from its seed regardless of thread count.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import ConfigurationError, DegenerateInputError
from .mc import MonteCarloEstimate, chunk_rng, chunk_spans, mc_mean

ENSEMBLE_KINDS = ("uniform_sphere", "gaussian", "rademacher", "two_subsphere", "atom_plus_sphere")

# Nodes for the marginal quadrature; well above the accuracy needed for
# any tolerance asserted downstream.
_QUAD_NODES = 4096


@dataclass(frozen=True)
class MeasurementEnsemble:
    """Descriptor of the law of one measurement row."""

    kind: str
    n: int
    atom_axis: int = 0

    def __post_init__(self):
        if self.kind not in ENSEMBLE_KINDS:
            raise ConfigurationError(f"unknown ensemble kind {self.kind!r}")
        if self.n < 1:
            raise ConfigurationError(f"dimension must be >= 1, got {self.n}")
        if self.kind == "two_subsphere" and self.n < 3:
            raise ConfigurationError("two_subsphere requires n >= 3")
        if self.kind == "atom_plus_sphere" and not (0 <= self.atom_axis < self.n):
            raise ConfigurationError("atom_axis out of range")

    @property
    def atom_point(self) -> np.ndarray:
        """The fixed atom, sqrt(n) times a coordinate direction."""
        p = np.zeros(self.n)
        p[self.atom_axis] = np.sqrt(self.n)
        return p

    def to_mapping(self) -> dict:
        d = {"ensemble": self.kind, "n": self.n}
        if self.kind == "atom_plus_sphere":
            d["atom_axis"] = self.atom_axis
        return d


@dataclass(frozen=True)
class MeasurementMatrix:
    """m sampled rows plus the seed and descriptor that produced them."""

    rows: np.ndarray
    seed: int
    ensemble: MeasurementEnsemble

    @property
    def m(self) -> int:
        return self.rows.shape[0]

    @property
    def n(self) -> int:
        return self.rows.shape[1]


def _unit_rows(g: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    # A numerically zero Gaussian row has probability ~0; resampling would
    # break stream alignment, so guard with a tiny floor instead.
    norms[norms == 0.0] = 1.0
    return g / norms


def _sample_chunk(ensemble: MeasurementEnsemble, rng: np.random.Generator, k: int) -> np.ndarray:
    n = ensemble.n
    root_n = np.sqrt(n)
    if ensemble.kind == "gaussian":
        return rng.standard_normal((k, n))
    if ensemble.kind == "rademacher":
        return rng.integers(0, 2, size=(k, n)).astype(np.float64) * 2.0 - 1.0
    if ensemble.kind == "uniform_sphere":
        return root_n * _unit_rows(rng.standard_normal((k, n)))
    if ensemble.kind == "two_subsphere":
        coin = rng.integers(0, 2, size=k)
        sub = root_n * _unit_rows(rng.standard_normal((k, n - 1)))
        out = np.zeros((k, n))
        first = coin == 0
        out[first, 1:] = sub[first]
        cols = [0] + list(range(2, n))
        out[np.ix_(~first, cols)] = sub[~first]
        return out
    if ensemble.kind == "atom_plus_sphere":
        coin = rng.integers(0, 2, size=k)
        sphere = root_n * _unit_rows(rng.standard_normal((k, n)))
        out = np.where(coin[:, None] == 1, ensemble.atom_point[None, :], sphere)
        return out
    raise ConfigurationError(f"unknown ensemble kind {ensemble.kind!r}")


def sample_rows(ensemble: MeasurementEnsemble, m: int, seed: int) -> np.ndarray:
    """m i.i.d. rows as an (m, n) array, deterministic given the seed."""
    if m < 0:
        raise ConfigurationError(f"row count must be >= 0, got {m}")
    out = np.empty((m, ensemble.n))
    for idx, start, size in chunk_spans(m):
        out[start : start + size] = _sample_chunk(ensemble, chunk_rng(seed, idx), size)
    return out


def sample_matrix(ensemble: MeasurementEnsemble, m: int, seed: int) -> MeasurementMatrix:
    return MeasurementMatrix(rows=sample_rows(ensemble, m, seed), seed=int(seed), ensemble=ensemble)


@lru_cache(maxsize=1)
def _leggauss_nodes() -> tuple[np.ndarray, np.ndarray]:
    return leggauss(_QUAD_NODES)


def _coord_mass(limits: np.ndarray, n: int) -> np.ndarray:
    """Unnormalized mass of the coordinate density on [-1, arcsin-limit].

    The first coordinate t of a uniform point on S^{n-1} has density
    proportional to (1 - t^2)^((n-3)/2) on [-1, 1].  Substituting
    t = sin(phi) gives the smooth integrand cos(phi)^(n-2), so mapping the
    Gauss-Legendre rule onto [-pi/2, limit] converges spectrally for every
    n >= 2, including the n = 2 endpoint singularity.
    """
    x, w = _leggauss_nodes()
    lo = -0.5 * np.pi
    out = np.empty_like(limits)
    for start in range(0, limits.size, 4096):
        lim = limits.flat[start : start + 4096]
        half = 0.5 * (lim - lo)
        phi = (lo + half)[:, None] + half[:, None] * x[None, :]
        out.flat[start : start + 4096] = np.sum(np.cos(phi) ** (n - 2) * w[None, :], axis=1) * half
    return out


@lru_cache(maxsize=64)
def _coord_normalization(n: int) -> float:
    """Total mass of the coordinate density, computed numerically.

    Deliberately not taken from a closed form; tests pin this value
    against both Monte Carlo and the Beta-function expression.
    """
    return float(_coord_mass(np.array([0.5 * np.pi]), n)[0])


def sphere_coord_cdf(t, n: int):
    """CDF of the first coordinate of a uniform point on the unit sphere S^{n-1}."""
    if n < 2:
        raise ConfigurationError("sphere marginal requires n >= 2")
    tt = np.clip(np.atleast_1d(np.asarray(t, dtype=np.float64)), -1.0, 1.0)
    out = _coord_mass(np.arcsin(tt), n) / _coord_normalization(n)
    if np.isscalar(t) or np.ndim(t) == 0:
        return float(out[0])
    return out.reshape(np.shape(t))


def sphere_marginal_cdf(s, n: int):
    """P(<X, u> <= s) for X uniform on sqrt(n) S^{n-1} and any unit u."""
    return sphere_coord_cdf(np.asarray(s, dtype=np.float64) / np.sqrt(n), n)


def sphere_small_ball(delta: float, n: int) -> float:
    """Quadrature value of P(|<X, u>| <= delta) for the uniform sphere ensemble."""
    return float(sphere_marginal_cdf(delta, n) - sphere_marginal_cdf(-delta, n))


@dataclass(frozen=True)
class SmallBallProb:
    """Monte Carlo small-ball estimate, with the quadrature value when available."""

    mc: MonteCarloEstimate
    quadrature: float | None = None


def small_ball_prob(
    ensemble: MeasurementEnsemble,
    u: np.ndarray,
    delta: float,
    n_mc: int,
    seed: int,
    threads: int = 1,
) -> SmallBallProb:
    """Monte Carlo estimate of P(|<X, u>| <= delta) along a unit direction."""
    if n_mc <= 0:
        raise ConfigurationError(f"n_mc must be positive, got {n_mc}")
    u = np.asarray(u, dtype=np.float64)
    if abs(np.linalg.norm(u) - 1.0) > 1e-9:
        raise DegenerateInputError("direction must be a unit vector")

    def sampler(rng, size):
        rows = _sample_chunk(ensemble, rng, size)
        return (np.abs(rows @ u) <= delta).astype(np.float64)

    est = mc_mean(sampler, n_mc, seed, threads=threads)
    quad = sphere_small_ball(delta, ensemble.n) if ensemble.kind == "uniform_sphere" else None
    return SmallBallProb(mc=est, quadrature=quad)
