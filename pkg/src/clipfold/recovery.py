"""Demonstration solvers: consistent declipping by cyclic projections and
a one-bit direction estimator.

These turn the stability estimates into actual reconstructions.  The
declipper is a plain projections-onto-convex-sets loop: hyperplanes for
the interior measurements, half-spaces for the saturated ones, and the
signal-norm ball.  Cyclic projections are Fejer monotone, which the tests
exploit as an invariant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ensembles import MeasurementMatrix
from .errors import DegenerateInputError
from .nonlinear import ClipLevel, clip


@dataclass(frozen=True)
class ClippedObservation:
    """Clipped measurements with their saturation flags.

    Flag -1/+1 marks a value saturated at -level/+level exactly; flag 0
    marks an interior value with |value| < level.
    """

    values: np.ndarray
    level: ClipLevel
    saturation_flags: np.ndarray


def observe_clipped(X: MeasurementMatrix, u: np.ndarray, level: ClipLevel) -> ClippedObservation:
    """Clip the exact measurements of u and record which rows saturated."""
    t = X.rows @ np.asarray(u, dtype=np.float64)
    lam = level.level
    flags = np.zeros(X.m, dtype=np.int8)
    flags[t >= lam] = 1
    flags[t <= -lam] = -1
    values = clip(t, level)
    # Saturated entries are pinned to the level exactly so the flag
    # invariant (flag != 0  =>  value == +-level) holds bit-for-bit.
    values = np.where(flags == 1, lam, np.where(flags == -1, -lam, values))
    return ClippedObservation(values=values, level=level, saturation_flags=flags)


@dataclass(frozen=True)
class DeclipResult:
    x_hat: np.ndarray
    converged: bool
    residual: float
    sweeps: int
    trace: list[np.ndarray] | None = None


def _max_violation(X: MeasurementMatrix, obs: ClippedObservation, x: np.ndarray, radius: float) -> float:
    t = X.rows @ x
    lam = obs.level.level
    flags = obs.saturation_flags
    res = 0.0
    interior = flags == 0
    if np.any(interior):
        res = float(np.max(np.abs(t[interior] - obs.values[interior])))
    if np.any(flags == 1):
        res = max(res, float(np.max(lam - t[flags == 1], initial=0.0)))
    if np.any(flags == -1):
        res = max(res, float(np.max(t[flags == -1] + lam, initial=0.0)))
    return max(res, float(np.linalg.norm(x)) - radius)


def declip_pocs(
    X: MeasurementMatrix,
    obs: ClippedObservation,
    iters: int = 500,
    tol: float = 1e-9,
    radius: float = 1.0,
    x0: np.ndarray | None = None,
    trace: bool = False,
) -> DeclipResult:
    """Cyclic projections onto the measurement constraints and the ball.

    Interior rows project onto their hyperplanes (Kaczmarz steps),
    saturated rows onto their half-spaces, then the iterate is pulled back
    into the radius ball.  Stops when a full sweep moves the iterate less
    than ``tol`` or after ``iters`` sweeps.  Non-convergence is reported
    through the flag, never as an exception.
    """
    if X.m < 1:
        raise DegenerateInputError("declipping requires at least one measurement")
    lam = obs.level.level
    rows = X.rows
    row_sq = np.einsum("ij,ij->i", rows, rows)
    row_sq = np.where(row_sq == 0.0, 1.0, row_sq)
    flags = obs.saturation_flags
    x = np.zeros(X.n) if x0 is None else np.asarray(x0, dtype=np.float64).copy()
    history = [x.copy()] if trace else None
    stalled = False
    sweeps = 0
    for sweeps in range(1, iters + 1):
        x_prev = x.copy()
        for i in range(X.m):
            t = float(rows[i] @ x)
            if flags[i] == 0:
                x += (obs.values[i] - t) / row_sq[i] * rows[i]
            elif flags[i] == 1 and t < lam:
                x += (lam - t) / row_sq[i] * rows[i]
            elif flags[i] == -1 and t > -lam:
                x += (-lam - t) / row_sq[i] * rows[i]
        nrm = float(np.linalg.norm(x))
        if nrm > radius:
            x *= radius / nrm
        if history is not None:
            history.append(x.copy())
        if float(np.linalg.norm(x - x_prev)) < tol:
            stalled = True
            break
    residual = _max_violation(X, obs, x, radius)
    return DeclipResult(
        x_hat=x,
        converged=stalled and residual <= tol,
        residual=residual,
        sweeps=sweeps,
        trace=history,
    )


def one_bit_estimate(X: MeasurementMatrix, signs: np.ndarray) -> np.ndarray:
    """Normalized sign-weighted row average, the standard one-bit direction
    estimator."""
    if X.m < 1:
        raise DegenerateInputError("one-bit estimate requires at least one row")
    signs = np.asarray(signs, dtype=np.float64)
    if signs.shape != (X.m,) or not np.all(np.abs(signs) == 1.0):
        raise DegenerateInputError("signs must be a +-1 vector of length m")
    agg = X.rows.T @ signs
    nrm = float(np.linalg.norm(agg))
    if nrm == 0.0:
        raise DegenerateInputError("sign-weighted aggregate vanished; estimate undefined")
    return agg / nrm
