"""Registered operator invariants, runnable as a batch suite.

Each property draws its trials from a seeded stream, checks a single
algebraic guarantee of the clip/fold/sign operators and reports the first
counterexample when one exists.  Operator overrides let tests verify that
a deliberately broken operator is caught (mutation testing); the suite
itself always runs the real operators.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigurationError
from .mc import chunk_rng, subseed
from .nonlinear import ClipLevel, clip, fold, sign_q

# Slack for comparisons whose exact versions hold with equality in real
# arithmetic; double rounding can undershoot by a few ulp.
_FP_SLACK = 1e-9


@dataclass(frozen=True)
class PropertyResult:
    name: str
    passed: bool
    trials: int
    counterexample: dict | None = None

    def row(self) -> dict:
        return {
            "property": self.name,
            "passed": self.passed,
            "trials": self.trials,
            "counterexample": self.counterexample,
        }


def _first_failure(mask: np.ndarray, **arrays) -> dict | None:
    bad = np.nonzero(~mask)[0]
    if bad.size == 0:
        return None
    i = int(bad[0])
    return {k: float(v[i]) for k, v in arrays.items()}


def _fold_op(overrides: dict | None):
    return (overrides or {}).get("fold", fold)


def _clip_op(overrides: dict | None):
    return (overrides or {}).get("clip", clip)


def check_clip_lipschitz(trials: int, seed: int, overrides: dict | None = None) -> PropertyResult:
    """clip is monotone nondecreasing and 1-Lipschitz."""
    rng = chunk_rng(subseed(seed, 0), 0)
    op = _clip_op(overrides)
    s = 10.0 * rng.standard_normal(trials)
    t = 10.0 * rng.standard_normal(trials)
    lam = np.exp(rng.uniform(np.log(1e-3), np.log(10.0), trials))
    if op is clip:
        cs = np.minimum(np.maximum(s, -lam), lam)
        ct = np.minimum(np.maximum(t, -lam), lam)
    else:
        cs = np.array([op(float(a), ClipLevel(float(l))) for a, l in zip(s, lam)])
        ct = np.array([op(float(a), ClipLevel(float(l))) for a, l in zip(t, lam)])
    lips = np.abs(cs - ct) <= np.abs(s - t) + _FP_SLACK
    mono = np.where(s >= t, cs >= ct - _FP_SLACK, ct >= cs - _FP_SLACK)
    ok = lips & mono
    return PropertyResult("clip_lipschitz", bool(ok.all()), trials, _first_failure(ok, s=s, t=t, level=lam))


def _fold_many(op, x: np.ndarray, lam: np.ndarray) -> np.ndarray:
    if op is fold:
        y = x / (2.0 * lam) + 0.5
        return 2.0 * lam * (y - np.floor(y) - 0.5)
    return np.array([op(float(a), ClipLevel(float(l))) for a, l in zip(x, lam)])


def check_fold_periodicity(trials: int, seed: int, overrides: dict | None = None) -> PropertyResult:
    """fold(x + 2*level) == fold(x) to 1e-12 relative."""
    rng = chunk_rng(subseed(seed, 1), 0)
    op = _fold_op(overrides)
    lam = np.exp(rng.uniform(np.log(1e-2), np.log(10.0), trials))
    x = 8.0 * lam * (rng.random(trials) - 0.5)
    f1 = _fold_many(op, x, lam)
    f2 = _fold_many(op, x + 2.0 * lam, lam)
    ok = np.abs(f1 - f2) <= 1e-12 * np.maximum(lam, np.abs(f1))
    return PropertyResult("fold_periodicity", bool(ok.all()), trials, _first_failure(ok, x=x, level=lam))


def check_fold_expansion(trials: int, seed: int, overrides: dict | None = None) -> PropertyResult:
    """|fold(s) - fold(t)| >= |s - t| whenever |s - t| <= level."""
    rng = chunk_rng(subseed(seed, 2), 0)
    op = _fold_op(overrides)
    lam = np.exp(rng.uniform(np.log(1e-2), np.log(10.0), trials))
    s = 6.0 * lam * (rng.random(trials) - 0.5)
    t = s + lam * rng.uniform(-1.0, 1.0, trials)
    fs = _fold_many(op, s, lam)
    ft = _fold_many(op, t, lam)
    ok = np.abs(fs - ft) >= np.abs(s - t) - _FP_SLACK * (1.0 + lam)
    return PropertyResult("fold_expansion", bool(ok.all()), trials, _first_failure(ok, s=s, t=t, level=lam))


def check_fold_band_gap(trials: int, seed: int, overrides: dict | None = None) -> PropertyResult:
    """If s - t lies in the band at scale level then |fold(s) - fold(t)| >= a*level."""
    rng = chunk_rng(subseed(seed, 3), 0)
    op = _fold_op(overrides)
    lam = np.exp(rng.uniform(np.log(1e-2), np.log(10.0), trials))
    a = rng.uniform(0.05, 0.45, trials)
    s = 6.0 * lam * (rng.random(trials) - 0.5)
    t = s - 6.0 * lam * (rng.random(trials) - 0.5)
    fs = _fold_many(op, s, lam)
    ft = _fold_many(op, t, lam)
    # Vectorized band membership: (s - t)/level mod 2 inside [a, 1 - a].
    r = np.mod((s - t) / lam, 2.0)
    in_band = (r >= a) & (r <= 1.0 - a)
    gap_ok = np.abs(fs - ft) >= a * lam - _FP_SLACK * (1.0 + lam)
    ok = np.where(in_band, gap_ok, True)
    result = _first_failure(ok, s=s, t=t, a=a, level=lam)
    return PropertyResult("fold_band_gap", bool(ok.all()), trials, result)


def check_clip_pair_separation(trials: int, seed: int, overrides: dict | None = None) -> PropertyResult:
    """Hypotheses: 4L <= level <= 1, u, v in the unit ball, |<x,u>| <= level/2
    and |<x, u-v>| >= L ||u-v||.  Conclusion: the clipped measurements of u
    and v differ by at least L ||u-v||."""
    n = 10
    op = _clip_op(overrides)
    rng = chunk_rng(subseed(seed, 4), 0)
    kept = 0
    batch = max(4 * trials, 1024)
    first_bad: dict | None = None
    all_ok = True
    while kept < trials:
        lam = rng.uniform(1e-3, 1.0, batch)
        L = lam / 4.0 * rng.random(batch)
        u = rng.standard_normal((batch, n))
        u *= (rng.random(batch) ** (1.0 / n) / np.linalg.norm(u, axis=1))[:, None]
        v = rng.standard_normal((batch, n))
        v *= (rng.random(batch) ** (1.0 / n) / np.linalg.norm(v, axis=1))[:, None]
        x = rng.standard_normal((batch, n))
        xu = np.einsum("ij,ij->i", x, u)
        xv = np.einsum("ij,ij->i", x, v)
        dist = np.linalg.norm(u - v, axis=1)
        hyp = (np.abs(xu) <= lam / 2.0) & (np.abs(xu - xv) >= L * dist) & (dist > 0)
        if not np.any(hyp):
            continue
        xu, xv, lam, L, dist = xu[hyp], xv[hyp], lam[hyp], L[hyp], dist[hyp]
        take = min(trials - kept, len(xu))
        xu, xv, lam, L, dist = xu[:take], xv[:take], lam[:take], L[:take], dist[:take]
        if op is clip:
            cu = np.minimum(np.maximum(xu, -lam), lam)
            cv = np.minimum(np.maximum(xv, -lam), lam)
        else:
            cu = np.array([op(float(a), ClipLevel(float(l))) for a, l in zip(xu, lam)])
            cv = np.array([op(float(a), ClipLevel(float(l))) for a, l in zip(xv, lam)])
        ok = np.abs(cu - cv) >= L * dist - _FP_SLACK
        if not ok.all():
            all_ok = False
            if first_bad is None:
                first_bad = _first_failure(ok, xu=xu, xv=xv, level=lam, L=L, dist=dist)
        kept += take
    return PropertyResult("clip_pair_separation", all_ok, trials, first_bad)


def check_sign_consistency(trials: int, seed: int, overrides: dict | None = None) -> PropertyResult:
    """sign_q(x) * x >= 0 everywhere and sign_q(0) == +1."""
    rng = chunk_rng(subseed(seed, 5), 0)
    x = 100.0 * rng.standard_normal(trials)
    s = sign_q(x)
    ok = s * x >= 0.0
    passed = bool(ok.all()) and sign_q(0.0) == 1
    return PropertyResult("sign_consistency", passed, trials, _first_failure(ok, x=x))


PROPERTIES: dict[str, Callable[..., PropertyResult]] = {
    "clip_lipschitz": check_clip_lipschitz,
    "fold_periodicity": check_fold_periodicity,
    "fold_expansion": check_fold_expansion,
    "fold_band_gap": check_fold_band_gap,
    "clip_pair_separation": check_clip_pair_separation,
    "sign_consistency": check_sign_consistency,
}


def fold_reflect_top(x: float, level: ClipLevel) -> float:
    """Deliberately broken fold used by mutation tests: overshoot past the
    upper threshold reflects back instead of wrapping, closing the range
    at +level.  Pairs straddling the threshold collapse together, so the
    expansion property must catch this."""
    lam = level.level
    y = fold(x, ClipLevel(2.0 * lam))  # centered into [-2 lam, 2 lam)
    return float(np.where(np.abs(y) <= lam, y, np.sign(y) * (2.0 * lam - np.abs(y))))


MUTATIONS: dict[str, dict] = {
    "none": {},
    "fold_reflect_top": {"fold": fold_reflect_top},
}


def run_suite(trials: int, seed: int, mutate: str = "none") -> list[PropertyResult]:
    """Run every registered property; failures are data, not exceptions."""
    if mutate not in MUTATIONS:
        raise ConfigurationError(f"unknown mutation {mutate!r}")
    overrides = MUTATIONS[mutate]
    return [fn(trials, seed, overrides) for fn in PROPERTIES.values()]
