"""Probability oracles and empirical-process experiments.

Covers the indicator events driving the stability lower bounds, a
quadrature oracle for the Gaussian wedge probability, uniform deviations
over strip classes, frame-bound checks and small-ball certification of an
ensemble over directions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .ensembles import MeasurementEnsemble, MeasurementMatrix, _sample_chunk, sphere_small_ball
from .errors import ConfigurationError, DegenerateInputError, NumericError
from .mc import MonteCarloEstimate, chunk_rng, mc_mean, subseed
from .nonlinear import FoldBand, in_omega
from .search import perturbation_descent
from .signal_sets import SignalSet, sample_batch

EVENT_KINDS = (
    "clip_pair",   # |<X,u>| <= level/2  and  |<X,(u-v)/||u-v||>| >= L
    "strip",       # |<X,u>| <= level  and  |<X,v>| <= level  and  |<X,w>| >= theta
    "wedge",       # <X,u> <= -level  and  <X,v> >= level
    "omega",       # <X,u-v> in the fold band at scale level
    "band",        # |<X,u>| <= delta
    "band_exceed", # |<X,u>| <= delta  and  |<X,v>| > level
    "band_within", # |<X,u>| <= delta  and  |<X,v>| <= level
)


@dataclass(frozen=True)
class EventSpec:
    """A measurable event about one measurement row."""

    kind: str
    u: np.ndarray | None = None
    v: np.ndarray | None = None
    w: np.ndarray | None = None
    level: float | None = None
    L: float | None = None
    theta: float | None = None
    a: float | None = None
    delta: float | None = None

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise ConfigurationError(f"unknown event kind {self.kind!r}")

    def indicator(self, rows: np.ndarray) -> np.ndarray:
        if self.kind == "clip_pair":
            d = self.u - self.v
            dist = np.linalg.norm(d)
            if dist == 0.0:
                raise DegenerateInputError("clip_pair event requires distinct u, v")
            return (np.abs(rows @ self.u) <= self.level / 2.0) & (np.abs(rows @ (d / dist)) >= self.L)
        if self.kind == "strip":
            return (
                (np.abs(rows @ self.u) <= self.level)
                & (np.abs(rows @ self.v) <= self.level)
                & (np.abs(rows @ self.w) >= self.theta)
            )
        if self.kind == "wedge":
            return ((rows @ self.u) <= -self.level) & ((rows @ self.v) >= self.level)
        if self.kind == "omega":
            return in_omega(rows @ (self.u - self.v), FoldBand(self.a, self.level))
        if self.kind == "band":
            return np.abs(rows @ self.u) <= self.delta
        if self.kind == "band_exceed":
            return (np.abs(rows @ self.u) <= self.delta) & (np.abs(rows @ self.v) > self.level)
        return (np.abs(rows @ self.u) <= self.delta) & (np.abs(rows @ self.v) <= self.level)


def event_prob(ensemble: MeasurementEnsemble, spec: EventSpec, n_mc: int, seed: int, threads: int = 1) -> MonteCarloEstimate:
    """Monte Carlo indicator mean with its binomial standard error."""

    def sampler(rng, size):
        return spec.indicator(_sample_chunk(ensemble, rng, size)).astype(np.float64)

    return mc_mean(sampler, n_mc, seed, threads=threads)


def gaussian_wedge_prob(dist: float, lam: float, quad_nodes: int = 256) -> float:
    """P(A <= -lam, B >= lam) for standard normal (A, B) with correlation
    1 - dist^2 / 2, the large-n oracle for the wedge event on the sphere.

    Rotating to the (sum, difference) axes makes the integrand a product
    of a Gaussian and a tail factor with no cancellation at small dist;
    the remaining one-dimensional integral is evaluated by Gauss-Legendre
    quadrature, refined until two successive node counts agree to 1e-8.
    """
    if not (0.0 < dist <= 2.0):
        raise ConfigurationError(f"pair distance must be in (0, 2], got {dist}")
    if quad_nodes < 64:
        raise ConfigurationError("quadrature needs at least 64 nodes")
    rho = 1.0 - dist * dist / 2.0
    if rho <= -1.0 + 1e-14:
        # Degenerate perfectly anticorrelated pair: B = -A.
        return float(ndtr(-lam))
    # P = sqrt(2/pi) * int_0^inf exp(-r^2/2) * Qbar((sqrt2*lam + sqrt(1+rho) r)/sqrt(1-rho)) dr
    s_plus = np.sqrt(1.0 + rho)
    s_minus = np.sqrt(1.0 - rho)
    upper = 12.0  # exp(-72) is below double precision resolution

    def value(nodes: int) -> float:
        x, w = np.polynomial.legendre.leggauss(nodes)
        r = 0.5 * upper * (x + 1.0)
        wr = 0.5 * upper * w
        tail = 1.0 - ndtr((np.sqrt(2.0) * lam + s_plus * r) / s_minus)
        return float(np.sqrt(2.0 / np.pi) * np.sum(wr * np.exp(-0.5 * r * r) * tail))

    prev = value(quad_nodes)
    for mult in (2, 4, 8, 16):
        cur = value(quad_nodes * mult)
        if abs(cur - prev) <= 1e-8:
            return cur
        prev = cur
    raise NumericError("wedge quadrature did not converge to 1e-8 under refinement")


def reference_band_prob(ensemble: MeasurementEnsemble, w: np.ndarray, alpha: float, n_mc: int, seed: int) -> float:
    """High-precision reference for P(|<X, w>| <= alpha) along a unit direction.

    Exact quadrature for the uniform sphere, the normal CDF for the
    Gaussian ensemble, and 10x-oversampled Monte Carlo otherwise.
    """
    if ensemble.kind == "uniform_sphere":
        return sphere_small_ball(alpha, ensemble.n)
    if ensemble.kind == "gaussian":
        return float(ndtr(alpha) - ndtr(-alpha))
    spec = EventSpec("band", u=np.asarray(w, dtype=np.float64), delta=alpha)
    return event_prob(ensemble, spec, 10 * n_mc, seed).estimate


@dataclass(frozen=True)
class DeviationCurve:
    """Mean sup-deviation of empirical strip frequencies per sample size."""

    m_grid: np.ndarray
    mean_sup_dev: np.ndarray
    trials: int
    n_class: int
    seed: int


def uniform_deviation_halfspaces(
    ensemble: MeasurementEnsemble,
    n: int,
    m_grid,
    n_class: int,
    trials: int,
    seed: int,
) -> DeviationCurve:
    """Sup over random strip classes of |empirical - reference|, averaged
    over trials, for each sample size in the grid."""
    if ensemble.n != n:
        raise ConfigurationError("ensemble dimension mismatch")
    if n > 10:
        raise ConfigurationError("reference probabilities are only tractable for n <= 10")
    m_grid = np.asarray(sorted(int(m) for m in m_grid))
    sup_devs = np.zeros((len(m_grid), trials))
    for t in range(trials):
        rng = chunk_rng(subseed(seed, 0, t), 0)
        dirs = sample_batch(SignalSet("sphere", n), rng, n_class)
        alphas = 0.1 + 0.9 * rng.random(n_class)
        refs = np.array(
            [reference_band_prob(ensemble, dirs[k], alphas[k], 100_000, subseed(seed, 1, t, k)) for k in range(n_class)]
        )
        for i, m in enumerate(m_grid):
            rows = _sample_chunk(ensemble, chunk_rng(subseed(seed, 2, t, i), 0), m)
            emp = (np.abs(rows @ dirs.T) <= alphas[None, :]).mean(axis=0)
            sup_devs[i, t] = float(np.max(np.abs(emp - refs)))
    return DeviationCurve(
        m_grid=m_grid,
        mean_sup_dev=sup_devs.mean(axis=1),
        trials=trials,
        n_class=n_class,
        seed=int(seed),
    )


@dataclass(frozen=True)
class FrameBoundResult:
    """Maximum Rayleigh quotient of (1/m) X^T X over probes and exactly."""

    random_max: float
    top_quotient: float
    power_iterations: int


def frame_bound_check(X: MeasurementMatrix, n_dirs: int, seed: int) -> FrameBoundResult:
    """Max over sampled directions of (1/m) sum <X_i, w>^2 / ||w||^2, plus
    the exact top value by power iteration (tolerance 1e-10)."""
    if X.m < 1:
        raise DegenerateInputError("frame bound requires at least one row")
    rng = chunk_rng(subseed(seed, 0), 0)
    dirs = sample_batch(SignalSet("sphere", X.n), rng, max(1, n_dirs))
    quots = np.sum((X.rows @ dirs.T) ** 2, axis=0) / X.m
    random_max = float(np.max(quots))

    w = dirs[int(np.argmax(quots))].copy()
    prev = 0.0
    for it in range(1, 10_001):
        w2 = X.rows.T @ (X.rows @ w) / X.m
        nrm = float(np.linalg.norm(w2))
        if nrm == 0.0:
            return FrameBoundResult(random_max=random_max, top_quotient=0.0, power_iterations=it)
        w = w2 / nrm
        if abs(nrm - prev) <= 1e-10 * max(1.0, nrm):
            return FrameBoundResult(random_max=random_max, top_quotient=nrm, power_iterations=it)
        prev = nrm
    raise NumericError("power iteration did not converge in 10^4 steps")


@dataclass(frozen=True)
class SmallBallCertificate:
    """Direction-extremized small-ball estimates for an ensemble."""

    sup_estimate: float
    inf_estimate: float
    sup_direction: np.ndarray
    inf_direction: np.ndarray
    std_error: float
    n_mc: int
    seed: int


RESTARTS = 50


def certify_small_ball(
    ensemble: MeasurementEnsemble,
    delta: float,
    n_mc: int,
    n_dirs: int,
    seed: int,
) -> SmallBallCertificate:
    """Heuristic extrema of P(|<X, u>| <= delta) over unit directions.

    Starts from random directions plus every coordinate axis (degenerate
    ensembles concentrate on coordinate hyperplanes, so the axes are
    mandatory probes), then refines each extremum with perturbation
    descent from the 50 most extreme starts.  The extrema are over a
    continuum, so the outputs are estimates, not certified bounds.
    """
    if n_dirs < 1:
        raise ConfigurationError("need at least one probe direction")
    n = ensemble.n
    rng = chunk_rng(subseed(seed, 0), 0)
    dirs = sample_batch(SignalSet("sphere", n), rng, n_dirs)
    dirs = np.vstack([dirs, np.eye(n)])

    probe_n = max(2_000, n_mc // 50)
    rows_probe = _sample_chunk(ensemble, chunk_rng(subseed(seed, 1), 0), probe_n)

    def probe(u: np.ndarray) -> float:
        return float((np.abs(rows_probe @ u) <= delta).mean())

    probs = (np.abs(rows_probe @ dirs.T) <= delta).mean(axis=0)

    def repair(z: np.ndarray) -> np.ndarray | None:
        nrm = float(np.linalg.norm(z))
        return None if nrm == 0.0 else z / nrm

    def extremize(order: np.ndarray, sign: float, branch: int) -> np.ndarray:
        best_u, best_val = None, np.inf
        for cell, k in enumerate(order[:RESTARTS]):
            u0 = dirs[int(k)]
            u, val, _ = perturbation_descent(
                u0, sign * probe(u0), lambda u: sign * probe(u), repair, subseed(seed, branch, cell)
            )
            if val < best_val:
                best_u, best_val = u, val
        return best_u

    u_sup = extremize(np.argsort(-probs), -1.0, 2)
    u_inf = extremize(np.argsort(probs), 1.0, 3)

    def final(u: np.ndarray) -> MonteCarloEstimate:
        def sampler(r, size):
            return (np.abs(_sample_chunk(ensemble, r, size) @ u) <= delta).astype(np.float64)

        return mc_mean(sampler, n_mc, subseed(seed, 4), threads=1)

    sup_est = final(u_sup)
    inf_est = final(u_inf)
    return SmallBallCertificate(
        sup_estimate=sup_est.estimate,
        inf_estimate=inf_est.estimate,
        sup_direction=u_sup,
        inf_direction=u_inf,
        std_error=max(sup_est.std_error, inf_est.std_error),
        n_mc=n_mc,
        seed=int(seed),
    )
