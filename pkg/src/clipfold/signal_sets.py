"""Constraint sets for signal pairs: ball, sphere, sparse and effectively
sparse variants, with samplers, membership tests, pair generators and
random greedy nets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, StrategyError
from .mc import chunk_rng

SET_KINDS = ("ball", "sphere", "sparse_ball", "sparse_sphere", "eff_sparse_sphere")
SPARSE_KINDS = ("sparse_ball", "sparse_sphere", "eff_sparse_sphere")
SPHERE_KINDS = ("sphere", "sparse_sphere", "eff_sparse_sphere")

PAIR_FLOOR = 1e-8  # non-degeneracy floor on ||u - v||; keeps normalized functionals finite


@dataclass(frozen=True)
class SignalSet:
    """Descriptor of the constraint set the signal pair is drawn from."""

    kind: str
    n: int
    s: int | None = None

    def __post_init__(self):
        if self.kind not in SET_KINDS:
            raise ConfigurationError(f"unknown signal set kind {self.kind!r}")
        if self.n < 1:
            raise ConfigurationError(f"dimension must be >= 1, got {self.n}")
        if self.kind in SPARSE_KINDS:
            if self.s is None or not (1 <= self.s <= self.n):
                raise ConfigurationError(f"sparsity must satisfy 1 <= s <= n, got {self.s}")

    @property
    def on_sphere(self) -> bool:
        return self.kind in SPHERE_KINDS

    def to_mapping(self) -> dict:
        d = {"set": self.kind, "n": self.n}
        if self.s is not None:
            d["s"] = self.s
        return d


@dataclass(frozen=True)
class PairStrategy:
    """How candidate pairs (u, v) are generated for the adversarial search."""

    kind: str  # independent | nearby | colinear | antipodal
    eta: float | None = None  # nearby: perturbation scale
    eps: float | None = None  # colinear: v = (1 - eps) u

    def __post_init__(self):
        if self.kind not in ("independent", "nearby", "colinear", "antipodal"):
            raise ConfigurationError(f"unknown pair strategy {self.kind!r}")
        if self.kind == "nearby" and not (self.eta is not None and self.eta > 0):
            raise ConfigurationError("nearby strategy requires eta > 0")
        if self.kind == "colinear" and not (self.eps is not None and 0 < self.eps < 1):
            raise ConfigurationError("colinear strategy requires eps in (0, 1)")

    @property
    def label(self) -> str:
        if self.kind == "nearby":
            return f"nearby({self.eta:g})"
        if self.kind == "colinear":
            return f"colinear({self.eps:g})"
        return self.kind


def membership(sset: SignalSet, x: np.ndarray, tol: float = 1e-9) -> bool:
    """True iff every defining inequality of the set holds within tol."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (sset.n,):
        raise ConfigurationError(f"dimension mismatch: set has n={sset.n}, vector has shape {x.shape}")
    l2 = float(np.linalg.norm(x))
    if sset.kind == "ball":
        return l2 <= 1.0 + tol
    if sset.kind == "sphere":
        return abs(l2 - 1.0) <= tol
    if sset.kind == "sparse_ball":
        return l2 <= 1.0 + tol and _sparsity_ok(x, sset.s, tol)
    if sset.kind == "sparse_sphere":
        return abs(l2 - 1.0) <= tol and _sparsity_ok(x, sset.s, tol)
    # effectively sparse on the sphere: l1 <= sqrt(s) * l2
    return abs(l2 - 1.0) <= tol and float(np.abs(x).sum()) <= np.sqrt(sset.s) * l2 + tol


def _sparsity_ok(x: np.ndarray, s: int, tol: float) -> bool:
    return int(np.count_nonzero(np.abs(x) > tol)) <= s


def project(sset: SignalSet, x: np.ndarray) -> np.ndarray:
    """Map an arbitrary vector onto (a member of) the set.

    Exact metric projection for ball/sphere/sparse kinds; for the
    effectively sparse sphere the l1 ratio constraint is enforced by a
    soft-threshold/renormalize sweep (bisection on the threshold), which
    lands on the set but is not the metric projection.
    """
    x = np.asarray(x, dtype=np.float64).copy()
    if sset.kind in ("sparse_ball", "sparse_sphere"):
        keep = np.argsort(np.abs(x))[-sset.s :]
        mask = np.zeros_like(x)
        mask[keep] = 1.0
        x = x * mask
    norm = float(np.linalg.norm(x))
    if norm == 0.0:
        x = np.zeros(sset.n)
        x[0] = 1.0
        norm = 1.0
    if sset.kind in ("ball", "sparse_ball"):
        return x / max(1.0, norm)
    x = x / norm
    if sset.kind == "eff_sparse_sphere":
        x = _enforce_l1_ratio(x, np.sqrt(sset.s))
    return x


def _enforce_l1_ratio(x: np.ndarray, ratio: float) -> np.ndarray:
    """Soft-threshold and renormalize until ||x||_1 <= ratio (unit x)."""
    if np.abs(x).sum() <= ratio:
        return x
    lo, hi = 0.0, float(np.abs(x).max())
    for _ in range(60):
        t = 0.5 * (lo + hi)
        y = np.sign(x) * np.maximum(np.abs(x) - t, 0.0)
        nrm = np.linalg.norm(y)
        if nrm == 0.0:
            hi = t
            continue
        y = y / nrm
        if np.abs(y).sum() > ratio:
            lo = t
        else:
            hi = t
    y = np.sign(x) * np.maximum(np.abs(x) - hi, 0.0)
    nrm = np.linalg.norm(y)
    if nrm == 0.0:  # fully thresholded; fall back to the largest coordinate
        y = np.zeros_like(x)
        y[int(np.argmax(np.abs(x)))] = 1.0
        return y
    return y / nrm


def _sample_with_rng(sset: SignalSet, rng: np.random.Generator, boundary_biased: bool = False) -> np.ndarray:
    n = sset.n
    if sset.kind == "ball":
        g = rng.standard_normal(n)
        g /= np.linalg.norm(g)
        r = rng.random() ** (1.0 / n)
        return r * g
    if sset.kind == "sphere":
        g = rng.standard_normal(n)
        return g / np.linalg.norm(g)
    if sset.kind in ("sparse_ball", "sparse_sphere"):
        support = rng.choice(n, size=sset.s, replace=False)
        coeff = rng.standard_normal(sset.s)
        x = np.zeros(n)
        x[support] = coeff
        x /= np.linalg.norm(x)
        if sset.kind == "sparse_ball":
            x *= rng.random() ** (1.0 / sset.s)
        return x
    # eff_sparse_sphere: s-sparse unit vectors are always members; the
    # boundary-biased mode mixes in flat +-1/sqrt(s) patterns, which sit
    # exactly on the l1/l2 = sqrt(s) boundary where worst cases live.
    support = rng.choice(n, size=sset.s, replace=False)
    x = np.zeros(n)
    if boundary_biased and rng.random() < 0.5:
        x[support] = rng.choice([-1.0, 1.0], size=sset.s) / np.sqrt(sset.s)
    else:
        coeff = rng.standard_normal(sset.s)
        x[support] = coeff / np.linalg.norm(coeff)
    return x


def sample_point(sset: SignalSet, seed: int, boundary_biased: bool = False) -> np.ndarray:
    return _sample_with_rng(sset, chunk_rng(seed, 0), boundary_biased=boundary_biased)


def _unit(rows: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(rows, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return rows / norms


def _sparse_mask(rng: np.random.Generator, count: int, n: int, s: int) -> np.ndarray:
    order = rng.random((count, n)).argsort(axis=1)
    mask = np.zeros((count, n), dtype=bool)
    np.put_along_axis(mask, order[:, :s], True, axis=1)
    return mask


def sample_batch(sset: SignalSet, rng: np.random.Generator, count: int, boundary_biased: bool = False) -> np.ndarray:
    """Vectorized sampler; row i matches the distribution of sample_point."""
    n = sset.n
    if sset.kind == "ball":
        g = _unit(rng.standard_normal((count, n)))
        r = rng.random(count) ** (1.0 / n)
        return g * r[:, None]
    if sset.kind == "sphere":
        return _unit(rng.standard_normal((count, n)))
    mask = _sparse_mask(rng, count, n, sset.s)
    x = rng.standard_normal((count, n)) * mask
    x = _unit(x)
    if sset.kind == "sparse_ball":
        x *= (rng.random(count) ** (1.0 / sset.s))[:, None]
    elif sset.kind == "eff_sparse_sphere" and boundary_biased:
        flat = np.where(mask, np.where(rng.random((count, n)) < 0.5, 1.0, -1.0), 0.0) / np.sqrt(sset.s)
        use_flat = rng.random(count) < 0.5
        x = np.where(use_flat[:, None], flat, x)
    return x


def project_batch(sset: SignalSet, rows: np.ndarray) -> np.ndarray:
    """Row-wise version of :func:`project`."""
    rows = np.asarray(rows, dtype=np.float64)
    if sset.kind in ("sparse_ball", "sparse_sphere"):
        keep = np.argsort(np.abs(rows), axis=1)[:, -sset.s :]
        mask = np.zeros_like(rows)
        np.put_along_axis(mask, keep, 1.0, axis=1)
        rows = rows * mask
    if sset.kind in ("ball", "sparse_ball"):
        norms = np.linalg.norm(rows, axis=1, keepdims=True)
        return rows / np.maximum(1.0, norms)
    out = _unit(rows)
    if sset.kind == "eff_sparse_sphere":
        ratio = np.sqrt(sset.s)
        bad = np.abs(out).sum(axis=1) > ratio
        for i in np.nonzero(bad)[0]:
            out[i] = _enforce_l1_ratio(out[i], ratio)
    return out


def _pair_with_rng(sset: SignalSet, strategy: PairStrategy, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    for _ in range(64):
        u = _sample_with_rng(sset, rng)
        if strategy.kind == "independent":
            v = _sample_with_rng(sset, rng)
        elif strategy.kind == "antipodal":
            v = -u
        elif strategy.kind == "nearby":
            # scaled by 1/sqrt(n) so eta is the typical pair distance in
            # every dimension
            v = project(sset, u + strategy.eta / np.sqrt(sset.n) * rng.standard_normal(sset.n))
        else:  # colinear
            if sset.on_sphere:
                raise StrategyError("colinear pairs leave sphere-constrained sets; use nearby instead")
            v = (1.0 - strategy.eps) * u
        if np.linalg.norm(u - v) >= PAIR_FLOOR:
            return u, v
    raise StrategyError(f"could not generate a non-degenerate pair with {strategy.label}")


def sample_pair(sset: SignalSet, strategy: PairStrategy, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """A pair (u, v) in the set with ||u - v|| >= 1e-8, resampling as needed."""
    return _pair_with_rng(sset, strategy, chunk_rng(seed, 0))


@dataclass(frozen=True)
class NetResult:
    """A separated subset built greedily; ``complete`` is False when the
    global sampling budget ran out before the rejection rule fired."""

    points: np.ndarray  # (k, n)
    epsilon: float
    complete: bool


def build_net(sset: SignalSet, epsilon: float, seed: int, max_points: int, total_budget: int | None = None) -> NetResult:
    """Greedy random net: keep sampled points that are >= epsilon from all
    kept points, stopping after ``max_points`` consecutive rejections.

    The result is an epsilon-separated set, hence an empirical 2*epsilon
    cover of the sampled region.  Feasible only at small dimension
    (n * log(1/epsilon) <= 40 enforced).
    """
    if not (0.0 < epsilon <= 2.0):
        raise ConfigurationError(f"net radius must be in (0, 2], got {epsilon}")
    if sset.n * max(0.0, np.log(1.0 / epsilon)) > 40.0:
        raise ConfigurationError("net construction infeasible at this dimension/radius")
    if total_budget is None:
        total_budget = 200 * max_points
    rng = chunk_rng(seed, 0)
    kept: list[np.ndarray] = []
    rejects = 0
    drawn = 0
    complete = False
    while drawn < total_budget:
        x = _sample_with_rng(sset, rng)
        drawn += 1
        if kept and float(np.min(np.linalg.norm(np.asarray(kept) - x, axis=1))) < epsilon:
            rejects += 1
            if rejects >= max_points:
                complete = True
                break
            continue
        kept.append(x)
        rejects = 0
    return NetResult(points=np.asarray(kept).reshape(len(kept), sset.n), epsilon=float(epsilon), complete=complete)
