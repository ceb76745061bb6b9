"""Clipped observation model, POCS declipping and the one-bit estimator."""

import numpy as np
import pytest

from clipfold.ensembles import MeasurementEnsemble, MeasurementMatrix, sample_matrix
from clipfold.errors import DegenerateInputError
from clipfold.mc import chunk_rng
from clipfold.nonlinear import ClipLevel
from clipfold.recovery import declip_pocs, observe_clipped, one_bit_estimate
from clipfold.signal_sets import SignalSet, sample_batch


def matrix(rows):
    rows = np.asarray(rows, dtype=np.float64)
    return MeasurementMatrix(rows, 0, MeasurementEnsemble("gaussian", rows.shape[1]))


class TestObserveClipped:
    def test_no_saturation(self):
        rng = np.random.default_rng(0)
        X = matrix(rng.standard_normal((10, 4)))
        u = rng.standard_normal(4) / 10
        lam = float(np.abs(X.rows @ u).max()) + 1.0
        obs = observe_clipped(X, u, ClipLevel(lam))
        assert np.all(obs.saturation_flags == 0)
        np.testing.assert_array_equal(obs.values, X.rows @ u)

    def test_zero_signal(self):
        X = matrix(np.eye(3))
        obs = observe_clipped(X, np.zeros(3), ClipLevel(0.5))
        assert np.all(obs.values == 0) and np.all(obs.saturation_flags == 0)

    def test_hand_instance(self):
        X = matrix([[1.0, 0.0], [0.0, 1.0]])
        obs = observe_clipped(X, np.array([1.0, 0.0]), ClipLevel(0.5))
        np.testing.assert_array_equal(obs.values, [0.5, 0.0])
        np.testing.assert_array_equal(obs.saturation_flags, [1, 0])

    def test_flag_value_invariant(self):
        rng = np.random.default_rng(1)
        X = matrix(rng.standard_normal((200, 5)))
        u = rng.standard_normal(5)
        obs = observe_clipped(X, u, ClipLevel(0.3))
        interior = obs.saturation_flags == 0
        assert np.all(np.abs(obs.values[interior]) < 0.3)
        assert np.all(obs.values[obs.saturation_flags == 1] == 0.3)
        assert np.all(obs.values[obs.saturation_flags == -1] == -0.3)


class TestDeclipPocs:
    def test_consistent_determined_system(self):
        # no saturation and full rank: plain Kaczmarz on a consistent system
        rng = np.random.default_rng(2)
        n = 8
        X = matrix(rng.standard_normal((3 * n, n)))
        u = rng.standard_normal(n)
        u *= 0.8 / np.linalg.norm(u)
        lam = float(np.abs(X.rows @ u).max()) + 0.5
        obs = observe_clipped(X, u, ClipLevel(lam))
        res = declip_pocs(X, obs, iters=1000, tol=1e-12)
        assert np.linalg.norm(res.x_hat - u) <= 1e-6
        assert res.sweeps <= 1000

    def test_feasibility_only_instance(self):
        # a single saturated row: any feasible point is acceptable
        n = 4
        X = matrix([np.sqrt(n) * np.eye(n)[0]])
        values = np.array([0.5])
        obs = type(observe_clipped(X, np.zeros(n), ClipLevel(0.5)))(
            values=values, level=ClipLevel(0.5), saturation_flags=np.array([1], dtype=np.int8)
        )
        res = declip_pocs(X, obs, iters=100, tol=1e-12)
        assert res.residual <= 1e-12
        assert float(X.rows[0] @ res.x_hat) >= 0.5 - 1e-12
        assert res.converged

    def test_reclipping_consistency(self):
        rng = np.random.default_rng(3)
        X = sample_matrix(MeasurementEnsemble("uniform_sphere", 10), 300, 5)
        u = rng.standard_normal(10)
        u *= 0.85 / np.linalg.norm(u)
        lam = ClipLevel(0.4)
        obs = observe_clipped(X, u, lam)
        res = declip_pocs(X, obs, iters=400, tol=1e-8)
        reobs = observe_clipped(X, res.x_hat, lam)
        interior = obs.saturation_flags == 0
        assert np.max(np.abs(reobs.values[interior] - obs.values[interior])) <= max(res.residual, 1e-8) * 1.01

    def test_fejer_monotonicity(self):
        rng = np.random.default_rng(4)
        X = sample_matrix(MeasurementEnsemble("uniform_sphere", 6), 120, 7)
        u = rng.standard_normal(6)
        u *= 0.7 / np.linalg.norm(u)
        obs = observe_clipped(X, u, ClipLevel(0.3))
        res = declip_pocs(X, obs, iters=200, tol=1e-10, trace=True)
        dists = [np.linalg.norm(x - u) for x in res.trace]
        assert all(b <= a + 1e-10 for a, b in zip(dists, dists[1:]))

    def test_nonconvergence_is_flagged_not_raised(self):
        rng = np.random.default_rng(5)
        X = matrix(rng.standard_normal((50, 50)))
        u = rng.standard_normal(50)
        u *= 0.9 / np.linalg.norm(u)
        obs = observe_clipped(X, u, ClipLevel(0.05))
        res = declip_pocs(X, obs, iters=2, tol=1e-14)
        assert res.converged is False

    def test_empty_rejected(self):
        X = matrix(np.zeros((0, 3)))
        obs = observe_clipped(matrix(np.eye(3)), np.zeros(3), ClipLevel(1.0))
        with pytest.raises(DegenerateInputError):
            declip_pocs(X, obs)

    def test_recovery_quality_midscale(self):
        # one slice of the recovery bench: relative error well under 5%
        n = 12
        lam = 0.3
        m = 480
        X = sample_matrix(MeasurementEnsemble("uniform_sphere", n), m, 11)
        rng = chunk_rng(12, 0)
        u = 0.9 * sample_batch(SignalSet("ball", n), rng, 1)[0]
        obs = observe_clipped(X, u, ClipLevel(lam))
        res = declip_pocs(X, obs, iters=400, tol=1e-8)
        assert np.linalg.norm(res.x_hat - u) / np.linalg.norm(u) <= 0.05


class TestOneBit:
    def test_single_row(self):
        n = 5
        X = matrix([np.sqrt(n) * np.eye(n)[0]])
        est = one_bit_estimate(X, np.array([1.0]))
        np.testing.assert_allclose(est, np.eye(n)[0])

    def test_global_sign_flip_negates(self):
        X = sample_matrix(MeasurementEnsemble("uniform_sphere", 6), 50, 13)
        rng = np.random.default_rng(6)
        signs = np.where(rng.random(50) < 0.5, 1.0, -1.0)
        a = one_bit_estimate(X, signs)
        b = one_bit_estimate(X, -signs)
        np.testing.assert_allclose(a, -b)

    def test_angle_accuracy(self):
        n = 20
        rng = np.random.default_rng(7)
        angles = []
        for seed in range(50):
            X = sample_matrix(MeasurementEnsemble("uniform_sphere", n), 5000, seed)
            u = rng.standard_normal(n)
            u /= np.linalg.norm(u)
            signs = np.where(X.rows @ u >= 0, 1.0, -1.0)
            est = one_bit_estimate(X, signs)
            angles.append(np.arccos(np.clip(est @ u, -1, 1)))
        assert float(np.mean(angles)) <= 0.15

    def test_degenerate_aggregate(self):
        X = matrix([[1.0, 0.0], [-1.0, 0.0]])
        with pytest.raises(DegenerateInputError):
            one_bit_estimate(X, np.array([1.0, 1.0]))

    def test_bad_signs_rejected(self):
        X = matrix(np.eye(3))
        with pytest.raises(DegenerateInputError):
            one_bit_estimate(X, np.array([1.0, 0.5, -1.0]))
