"""clipfold: stability of recovery from clipped, folded and one-bit
random linear measurements, with a config-driven experiment CLI."""

__version__ = "0.1.0"

from .ensembles import (
    MeasurementEnsemble,
    MeasurementMatrix,
    sample_matrix,
    small_ball_prob,
    sphere_marginal_cdf,
)
from .nonlinear import ClipLevel, FoldBand, apply_elementwise, clip, fold, in_omega, sign_q
from .probability import (
    EventSpec,
    certify_small_ball,
    event_prob,
    frame_bound_check,
    gaussian_wedge_prob,
    uniform_deviation_halfspaces,
)
from .recovery import ClippedObservation, declip_pocs, observe_clipped, one_bit_estimate
from .signal_sets import PairStrategy, SignalSet, build_net, membership, sample_pair, sample_point
from .stability import (
    StabilityEstimate,
    StabilityFunctional,
    colinear_limit_value,
    expected_sharpness_scan,
    functional_value,
    worst_pair_search,
)

__all__ = [
    "ClipLevel",
    "ClippedObservation",
    "EventSpec",
    "FoldBand",
    "MeasurementEnsemble",
    "MeasurementMatrix",
    "PairStrategy",
    "SignalSet",
    "StabilityEstimate",
    "StabilityFunctional",
    "apply_elementwise",
    "build_net",
    "certify_small_ball",
    "clip",
    "colinear_limit_value",
    "declip_pocs",
    "event_prob",
    "expected_sharpness_scan",
    "fold",
    "frame_bound_check",
    "functional_value",
    "gaussian_wedge_prob",
    "in_omega",
    "membership",
    "observe_clipped",
    "one_bit_estimate",
    "sample_matrix",
    "sample_pair",
    "sample_point",
    "sign_q",
    "small_ball_prob",
    "sphere_marginal_cdf",
    "uniform_deviation_halfspaces",
    "worst_pair_search",
]
