"""Derivative-free perturbation descent.

The objectives built from clip/fold are piecewise smooth with kinks at the
saturation boundaries, so refinement uses Gaussian steps with a shrinking
radius instead of gradients.  The engine is shared by the worst-pair
search and by the small-ball direction certification.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .mc import chunk_rng

STAGES = 20
PROBES_PER_STAGE = 8
INIT_RADIUS = 0.25
SHRINK = 0.62


def perturbation_descent(
    start: np.ndarray,
    value: float,
    evaluate: Callable[[np.ndarray], float],
    repair: Callable[[np.ndarray], np.ndarray | None],
    seed: int,
    stages: int = STAGES,
    probes: int = PROBES_PER_STAGE,
    init_radius: float = INIT_RADIUS,
) -> tuple[np.ndarray, float, int]:
    """Minimize ``evaluate`` from ``start``, accepting only decreases.

    ``repair`` maps a perturbed raw vector back onto the feasible set and
    may return None to discard an irreparable candidate.  Returns the best
    point, its value and the number of evaluations spent.
    """
    rng = chunk_rng(seed, 0)
    best = np.array(start, dtype=np.float64)
    best_val = float(value)
    evals = 0
    radius = init_radius
    for _ in range(stages):
        for _ in range(probes):
            cand = repair(best + radius * rng.standard_normal(best.shape))
            if cand is None:
                continue
            val = evaluate(cand)
            evals += 1
            if val < best_val:
                best, best_val = cand, val
        radius *= SHRINK
    return best, best_val, evals
