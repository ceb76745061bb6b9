"""Deterministic Monte Carlo plumbing.

Every stochastic routine in this package draws from counter-based Philox
streams keyed by ``(seed, chunk_index)``.  Work is split into fixed-size
chunks and partial results are reduced in chunk order, so estimates are
bit-identical for any thread count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

# Fixed chunk size; changing it changes the sample stream, so it is a
# package constant rather than a knob.
CHUNK_SIZE = 1 << 16


def chunk_rng(seed: int, chunk_index: int) -> np.random.Generator:
    """Generator for one chunk of the stream keyed by (seed, chunk_index)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence((int(seed), int(chunk_index)))))


def subseed(master: int, *path: int) -> int:
    """Derive an independent 63-bit seed from a master seed and an index path."""
    ss = np.random.SeedSequence((int(master),) + tuple(int(p) for p in path))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> 1)


def chunk_spans(total: int) -> list[tuple[int, int, int]]:
    """(chunk_index, start, size) triples covering ``range(total)``."""
    spans = []
    start = 0
    idx = 0
    while start < total:
        size = min(CHUNK_SIZE, total - start)
        spans.append((idx, start, size))
        start += size
        idx += 1
    return spans


@dataclass(frozen=True)
class MonteCarloEstimate:
    """A Monte Carlo estimate bundled with its uncertainty and provenance."""

    estimate: float
    std_error: float
    n_samples: int
    seed: int

    def agrees_with(self, value: float, n_sigma: float = 3.0) -> bool:
        return abs(self.estimate - value) <= n_sigma * max(self.std_error, 1e-300)


def mc_mean(
    sampler: Callable[[np.random.Generator, int], np.ndarray],
    n_samples: int,
    seed: int,
    threads: int = 1,
) -> MonteCarloEstimate:
    """Mean of ``sampler(rng, size)`` values over a chunked deterministic stream.

    ``sampler`` must return a float array of length ``size``; indicator
    arrays give binomial standard errors as a special case of the sample
    standard deviation.
    """
    if n_samples <= 0:
        raise ValueError("n_samples must be positive")
    spans = chunk_spans(n_samples)

    def one(span):
        idx, _, size = span
        vals = np.asarray(sampler(chunk_rng(seed, idx), size), dtype=np.float64)
        return float(vals.sum()), float(np.square(vals).sum())

    if threads > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(one, spans))
    else:
        partials = [one(s) for s in spans]

    # Reduction in chunk order keeps the result independent of scheduling.
    s1 = 0.0
    s2 = 0.0
    for a, b in partials:
        s1 += a
        s2 += b
    mean = s1 / n_samples
    var = max(s2 / n_samples - mean * mean, 0.0)
    se = float(np.sqrt(var / n_samples))
    return MonteCarloEstimate(estimate=float(mean), std_error=se, n_samples=n_samples, seed=int(seed))
