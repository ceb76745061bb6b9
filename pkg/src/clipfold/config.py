"""Experiment configuration: a flat key=value text format plus a JSON
alternative, and constructors for the descriptors an experiment needs."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .ensembles import ENSEMBLE_KINDS, MeasurementEnsemble
from .errors import ConfigurationError
from .nonlinear import ClipLevel
from .signal_sets import SET_KINDS, SignalSet
from .stability import StabilityFunctional

EXPERIMENT_KINDS = ("lambda_sweep", "sample_complexity", "property_suite", "recovery_bench", "certify")
M_RULES = ("explicit", "lam_inv_log", "linear_n")

DEFAULTS = {
    "experiment": "lambda_sweep",
    "ensemble": "uniform_sphere",
    "set": "ball",
    "nonlinearity": "clip",
    "normalization": "squared",
    "n": 20,
    "s": None,
    "lambda_grid": "logspace:0.05:0.5:8",
    "m_rule": "lam_inv_log",
    # Constant in front of the sample-size rules; a calibrated default,
    # recorded here because no principled value exists for it.
    "m_const": 10.0,
    "m_list": None,
    "budget": 20000,
    "n_mc": 100000,
    "seed": 1,
    "sharpness": False,
    "m": 2000,
    "n_u": 1000,
    "trials": 50,
    "delta": 0.01,
    "n_dirs": 64,
    # Strip-event threshold, frozen after a one-time calibration.
    "theta": 0.1,
    "pocs_iters": 400,
    "pocs_tol": 1e-6,
    "signal_radius": 0.9,
    "level": 0.3,
    "mutate": "none",
    "threads": 1,
    "out": "out",
}

_BOOL_STRINGS = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}


def parse_config_text(text: str) -> dict:
    """Flat key = value lines; '#' starts a comment; no sections."""
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def load_config(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"config file not found: {path}")
    text = path.read_text()
    if path.suffix.lower() == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"invalid JSON config: {e}") from e
        if not isinstance(data, dict):
            raise ConfigurationError("JSON config must be an object")
        return data
    return parse_config_text(text)


def _coerce(key: str, value, target):
    if value is None or target is None:
        return value
    if isinstance(target, bool):
        if isinstance(value, bool):
            return value
        v = str(value).lower()
        if v not in _BOOL_STRINGS:
            raise ConfigurationError(f"{key}: expected a boolean, got {value!r}")
        return _BOOL_STRINGS[v]
    if isinstance(target, int):
        try:
            return int(value)
        except (TypeError, ValueError) as e:
            raise ConfigurationError(f"{key}: expected an integer, got {value!r}") from e
    if isinstance(target, float):
        try:
            return float(value)
        except (TypeError, ValueError) as e:
            raise ConfigurationError(f"{key}: expected a number, got {value!r}") from e
    return str(value)


def parse_lambda_grid(spec) -> np.ndarray:
    """Either 'logspace:lo:hi:k' or an explicit comma list; must be
    positive and strictly ascending."""
    if isinstance(spec, (list, tuple, np.ndarray)):
        grid = np.asarray([float(x) for x in spec])
    else:
        s = str(spec).strip()
        if s.startswith("logspace:"):
            parts = s.split(":")
            if len(parts) != 4:
                raise ConfigurationError(f"bad lambda grid {spec!r}")
            lo, hi, k = float(parts[1]), float(parts[2]), int(parts[3])
            if not (0 < lo < hi) or k < 2:
                raise ConfigurationError(f"bad lambda grid bounds {spec!r}")
            grid = np.geomspace(lo, hi, k)
        else:
            grid = np.asarray([float(x) for x in s.split(",") if x.strip()])
    if grid.size == 0 or np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ConfigurationError("lambda grid must be positive and strictly ascending")
    return grid


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything an experiment run needs, in one validated record."""

    experiment: str
    ensemble: MeasurementEnsemble
    signal_set: SignalSet
    nonlinearity: str
    normalization: str
    lambda_grid: np.ndarray
    m_rule: str
    m_const: float
    m_list: tuple[int, ...] | None
    budget: int
    n_mc: int
    seed: int
    sharpness: bool
    m: int
    n_u: int
    trials: int
    delta: float
    n_dirs: int
    theta: float
    pocs_iters: int
    pocs_tol: float
    signal_radius: float
    level: float
    mutate: str
    threads: int
    out: str
    raw: dict = field(repr=False, default_factory=dict)

    def functional(self, lam: float) -> StabilityFunctional:
        level = None if self.nonlinearity == "sign" else ClipLevel(float(lam))
        return StabilityFunctional(self.nonlinearity, level, self.normalization)

    def m_for(self, lam: float, index: int) -> int:
        return evaluate_m_rule(self.m_rule, self.m_const, lam, self.signal_set, self.m_list, index)

    def config_hash(self) -> str:
        canon = {k: self.raw[k] for k in sorted(self.raw)}
        return hashlib.sha256(json.dumps(canon, sort_keys=True, default=str).encode()).hexdigest()[:16]


def effective_dimension(sset: SignalSet) -> float:
    """n for dense sets; s * log(e n / s) for the sparse kinds."""
    if sset.kind in ("ball", "sphere"):
        return float(sset.n)
    return sset.s * math.log(math.e * sset.n / sset.s)


def evaluate_m_rule(
    rule: str,
    const: float,
    lam: float,
    sset: SignalSet,
    m_list: tuple[int, ...] | None,
    index: int,
) -> int:
    """Sample count for one grid point; formula rules use the natural log
    and an integer ceiling."""
    if rule == "explicit":
        if m_list is None or index >= len(m_list):
            raise ConfigurationError("explicit m rule requires an m_list entry per grid point")
        return int(m_list[index])
    d = effective_dimension(sset)
    if rule == "lam_inv_log":
        return max(1, int(math.ceil(const * (1.0 / lam) * math.log(1.0 / lam) * d)))
    if rule == "linear_n":
        return max(1, int(math.ceil(const * math.log(1.0 / lam) * d)))
    raise ConfigurationError(f"unknown m rule {rule!r}")


def build_config(mapping: dict) -> ExperimentConfig:
    merged = dict(DEFAULTS)
    unknown = set(mapping) - set(DEFAULTS) - {"atom_axis"}
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
    merged.update(mapping)

    coerced = {}
    for key, default in DEFAULTS.items():
        coerced[key] = _coerce(key, merged[key], default)

    experiment = coerced["experiment"]
    if experiment not in EXPERIMENT_KINDS:
        raise ConfigurationError(f"unknown experiment {experiment!r}")
    if coerced["ensemble"] not in ENSEMBLE_KINDS:
        raise ConfigurationError(f"unknown ensemble {coerced['ensemble']!r}")
    if coerced["set"] not in SET_KINDS:
        raise ConfigurationError(f"unknown signal set {coerced['set']!r}")
    if coerced["m_rule"] not in M_RULES:
        raise ConfigurationError(f"unknown m rule {coerced['m_rule']!r}")
    if coerced["nonlinearity"] not in ("clip", "fold", "sign"):
        raise ConfigurationError(f"unknown nonlinearity {coerced['nonlinearity']!r}")
    if coerced["normalization"] not in ("squared", "distance"):
        raise ConfigurationError(f"unknown normalization {coerced['normalization']!r}")
    for key in ("budget", "n_mc", "n_u", "trials", "n_dirs", "pocs_iters", "m", "threads"):
        if coerced[key] < 1:
            raise ConfigurationError(f"{key} must be >= 1")

    n = coerced["n"]
    s = None if merged["s"] in (None, "", "none") else int(merged["s"])
    atom_axis = int(merged.get("atom_axis", 0))
    ensemble = MeasurementEnsemble(coerced["ensemble"], n, atom_axis=atom_axis)
    sset = SignalSet(coerced["set"], n, s)
    grid = parse_lambda_grid(merged["lambda_grid"])
    m_list = None
    if merged["m_list"] not in (None, "", "none"):
        raw_list = merged["m_list"]
        items = raw_list if isinstance(raw_list, (list, tuple)) else str(raw_list).split(",")
        m_list = tuple(int(x) for x in items)

    return ExperimentConfig(
        experiment=experiment,
        ensemble=ensemble,
        signal_set=sset,
        nonlinearity=coerced["nonlinearity"],
        normalization=coerced["normalization"],
        lambda_grid=grid,
        m_rule=coerced["m_rule"],
        m_const=coerced["m_const"],
        m_list=m_list,
        budget=coerced["budget"],
        n_mc=coerced["n_mc"],
        seed=coerced["seed"],
        sharpness=coerced["sharpness"],
        m=coerced["m"],
        n_u=coerced["n_u"],
        trials=coerced["trials"],
        delta=coerced["delta"],
        n_dirs=coerced["n_dirs"],
        theta=coerced["theta"],
        pocs_iters=coerced["pocs_iters"],
        pocs_tol=coerced["pocs_tol"],
        signal_radius=coerced["signal_radius"],
        level=coerced["level"],
        mutate=coerced["mutate"],
        threads=coerced["threads"],
        out=coerced["out"],
        raw={k: merged[k] for k in sorted(merged) if merged[k] is not None},
    )


def config_from_file(path: str | Path, overrides: dict | None = None) -> ExperimentConfig:
    mapping = load_config(path)
    if overrides:
        mapping.update({k: v for k, v in overrides.items() if v is not None})
    return build_config(mapping)
