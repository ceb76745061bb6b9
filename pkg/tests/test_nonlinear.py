"""Scalar operator semantics and their algebraic invariants."""

import numpy as np
import pytest

from clipfold.errors import ConfigurationError
from clipfold.nonlinear import ClipLevel, FoldBand, apply_elementwise, clip, fold, in_omega, sign_q
from clipfold.properties import (
    MUTATIONS,
    check_clip_lipschitz,
    check_clip_pair_separation,
    check_fold_band_gap,
    check_fold_expansion,
    check_fold_periodicity,
    check_sign_consistency,
    fold_reflect_top,
    run_suite,
)

TRIALS = 200_000  # full 10^6 runs live in the acceptance suite


class TestClip:
    def test_identity_region(self):
        assert clip(0.5, ClipLevel(1.0)) == 0.5

    def test_upper_saturation(self):
        assert clip(2.0, ClipLevel(1.0)) == 1.0

    def test_lower_saturation(self):
        assert clip(-3.0, ClipLevel(0.5)) == -0.5

    def test_rejects_nonpositive_level(self):
        with pytest.raises(ConfigurationError):
            ClipLevel(0.0)
        with pytest.raises(ConfigurationError):
            ClipLevel(-1.0)

    def test_range(self):
        rng = np.random.default_rng(0)
        x = 50.0 * rng.standard_normal(1000)
        y = clip(x, ClipLevel(0.7))
        assert np.all(np.abs(y) <= 0.7)


class TestFold:
    def test_identity_region(self):
        assert fold(0.3, ClipLevel(1.0)) == pytest.approx(0.3, rel=1e-15)

    def test_wraps_past_threshold(self):
        # direct evaluation of the formula: floor(1.5/2 + 1/2) = 1
        assert fold(1.5, ClipLevel(1.0)) == -0.5

    def test_boundary_maps_to_minus_level(self):
        # half-open fundamental domain [-level, level)
        assert fold(1.0, ClipLevel(1.0)) == -1.0

    def test_range_half_open(self):
        rng = np.random.default_rng(1)
        x = 100.0 * rng.standard_normal(1000)
        y = fold(x, ClipLevel(0.3))
        assert np.all(y >= -0.3) and np.all(y < 0.3)

    def test_periodicity_spot(self):
        lam = ClipLevel(0.7)
        for x in (-3.1, 0.05, 12.7):
            assert fold(x + 1.4, lam) == pytest.approx(fold(x, lam), abs=1e-12)

    def test_requires_finite_level(self):
        with pytest.raises(ConfigurationError):
            fold(1.0, ClipLevel(np.inf))


class TestSignQ:
    def test_positive(self):
        assert sign_q(2.7) == 1

    def test_negative(self):
        assert sign_q(-0.1) == -1

    def test_tie_rule(self):
        assert sign_q(0) == 1

    def test_product_nonnegative(self):
        x = np.linspace(-5, 5, 101)
        assert np.all(sign_q(x) * x >= 0)


class TestInOmega:
    def test_base_interval(self):
        assert in_omega(0.5, FoldBand(0.25, 1.0)) is True

    def test_gap(self):
        assert in_omega(0.9, FoldBand(0.25, 1.0)) is False

    def test_shifted_interval(self):
        # interval [(0.25 + 2) * 1, (0.75 + 2) * 1] = [2.25, 2.75]
        assert in_omega(2.5, FoldBand(0.25, 1.0)) is True

    def test_closed_endpoints(self):
        band = FoldBand(0.25, 1.0)
        assert in_omega(0.25, band) and in_omega(0.75, band)

    def test_parameter_validation(self):
        with pytest.raises(ConfigurationError):
            FoldBand(0.5, 1.0)
        with pytest.raises(ConfigurationError):
            FoldBand(0.25, 0.0)


class TestApplyElementwise:
    def test_clip_vector(self):
        out = apply_elementwise([0.5, 2.0], "clip", ClipLevel(1.0))
        np.testing.assert_array_equal(out, [0.5, 1.0])

    def test_empty(self):
        assert apply_elementwise([], "clip", ClipLevel(1.0)).size == 0

    def test_fold_vector(self):
        np.testing.assert_allclose(apply_elementwise([1.5], "fold", ClipLevel(1.0)), [-0.5])

    def test_matches_scalar_bitwise(self):
        rng = np.random.default_rng(2)
        xs = 10.0 * rng.standard_normal(256)
        lam = ClipLevel(0.9)
        for op, scalar in (("clip", clip), ("fold", fold), ("sign", sign_q)):
            vec = apply_elementwise(xs, op, lam)
            ref = np.array([scalar(float(x), lam) if op != "sign" else float(sign_q(float(x))) for x in xs])
            np.testing.assert_array_equal(vec, ref)

    def test_unknown_op(self):
        with pytest.raises(ConfigurationError):
            apply_elementwise([1.0], "square", ClipLevel(1.0))


class TestOperatorProperties:
    """Randomized invariants at a reduced trial count; the acceptance
    suite repeats them at 10^6 trials."""

    def test_clip_lipschitz(self):
        assert check_clip_lipschitz(TRIALS, 7).passed

    def test_fold_periodicity(self):
        assert check_fold_periodicity(TRIALS, 7).passed

    def test_fold_expansion(self):
        assert check_fold_expansion(TRIALS, 7).passed

    def test_fold_band_gap(self):
        assert check_fold_band_gap(TRIALS, 7).passed

    def test_clip_pair_separation(self):
        assert check_clip_pair_separation(50_000, 7).passed

    def test_sign_consistency(self):
        assert check_sign_consistency(TRIALS, 7).passed


class TestMutationDetection:
    """A deliberately broken fold boundary must be caught with a witness."""

    def test_reflected_fold_differs(self):
        lam = ClipLevel(1.0)
        assert fold_reflect_top(1.2, lam) == pytest.approx(0.8)
        assert fold(1.2, lam) == pytest.approx(-0.8)

    def test_expansion_catches_broken_fold(self):
        results = {r.name: r for r in run_suite(20_000, 3, mutate="fold_reflect_top")}
        assert not results["fold_expansion"].passed
        ce = results["fold_expansion"].counterexample
        assert ce is not None and {"s", "t", "level"} <= set(ce)
        # the witness is a genuine violation
        s, t, lam = ce["s"], ce["t"], ce["level"]
        broken = MUTATIONS["fold_reflect_top"]["fold"]
        level = ClipLevel(lam)
        assert abs(s - t) <= lam
        assert abs(broken(s, level) - broken(t, level)) < abs(s - t)

    def test_clean_suite_passes(self):
        assert all(r.passed for r in run_suite(20_000, 3))
