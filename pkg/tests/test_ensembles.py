"""Sampler support invariants, determinism, and marginal oracles."""

import numpy as np
import pytest
from scipy.special import gammaln

from clipfold.ensembles import (
    MeasurementEnsemble,
    _coord_normalization,
    sample_matrix,
    small_ball_prob,
    sphere_marginal_cdf,
    sphere_small_ball,
)
from clipfold.errors import ConfigurationError, DegenerateInputError


class TestDescriptors:
    def test_rejects_unknown_kind(self):
        with pytest.raises(ConfigurationError):
            MeasurementEnsemble("lognormal", 5)

    def test_two_subsphere_needs_n3(self):
        with pytest.raises(ConfigurationError):
            MeasurementEnsemble("two_subsphere", 2)

    def test_rejects_bad_dimension(self):
        with pytest.raises(ConfigurationError):
            MeasurementEnsemble("gaussian", 0)


class TestSupports:
    def test_uniform_sphere_norms(self):
        X = sample_matrix(MeasurementEnsemble("uniform_sphere", 5), 3, 42)
        np.testing.assert_allclose(np.linalg.norm(X.rows, axis=1), np.sqrt(5), rtol=1e-9)

    def test_rademacher_entries(self):
        X = sample_matrix(MeasurementEnsemble("rademacher", 4), 2, 1)
        assert set(np.unique(X.rows)) <= {-1.0, 1.0}

    def test_two_subsphere_support(self):
        X = sample_matrix(MeasurementEnsemble("two_subsphere", 6), 500, 3)
        np.testing.assert_allclose(np.linalg.norm(X.rows, axis=1), np.sqrt(6), rtol=1e-9)
        on_first = X.rows[:, 0] == 0.0
        on_second = X.rows[:, 1] == 0.0
        assert np.all(on_first | on_second)
        # fair coin between the two hyperplane spheres
        assert 0.4 < on_first.mean() < 0.6

    def test_atom_plus_sphere_support(self):
        ens = MeasurementEnsemble("atom_plus_sphere", 5)
        X = sample_matrix(ens, 400, 9)
        np.testing.assert_allclose(np.linalg.norm(X.rows, axis=1), np.sqrt(5), rtol=1e-9)
        atom_hits = np.all(X.rows == ens.atom_point[None, :], axis=1)
        assert 0.4 < atom_hits.mean() < 0.6

    def test_empty_matrix_allowed(self):
        X = sample_matrix(MeasurementEnsemble("gaussian", 3), 0, 0)
        assert X.rows.shape == (0, 3)

    def test_negative_m_rejected(self):
        with pytest.raises(ConfigurationError):
            sample_matrix(MeasurementEnsemble("gaussian", 3), -1, 0)


class TestDeterminism:
    @pytest.mark.parametrize("kind", ["uniform_sphere", "gaussian", "rademacher", "two_subsphere", "atom_plus_sphere"])
    def test_seed_reproduces_bit_exactly(self, kind):
        ens = MeasurementEnsemble(kind, 5)
        a = sample_matrix(ens, 1000, 77).rows
        b = sample_matrix(ens, 1000, 77).rows
        np.testing.assert_array_equal(a, b)

    def test_chunking_invariance_of_prefix(self):
        # rows beyond one chunk continue the stream without disturbing it
        ens = MeasurementEnsemble("gaussian", 2)
        short = sample_matrix(ens, 100, 5).rows
        long = sample_matrix(ens, 70000, 5).rows
        np.testing.assert_array_equal(short, long[:100])


class TestIsotropy:
    def test_sphere_second_moment(self):
        # E <X, e1>^2 = 1 for the sqrt(n)-sphere law
        X = sample_matrix(MeasurementEnsemble("uniform_sphere", 3), 1_000_000, 7)
        m2 = float(np.mean(X.rows[:, 0] ** 2))
        assert m2 == pytest.approx(1.0, abs=0.01)


class TestSphereMarginal:
    def test_support_bound(self):
        assert sphere_marginal_cdf(np.sqrt(7), 7) == pytest.approx(1.0, abs=1e-12)
        assert sphere_marginal_cdf(-np.sqrt(7), 7) == pytest.approx(0.0, abs=1e-12)

    def test_n3_is_linear(self):
        # at n = 3 the coordinate is uniform, so the central band has
        # probability 0.9/sqrt(3)
        val = sphere_small_ball(0.9, 3)
        assert val == pytest.approx(0.9 / np.sqrt(3), abs=1e-9)

    def test_needs_n2(self):
        with pytest.raises(ConfigurationError):
            sphere_marginal_cdf(0.0, 1)

    def test_normalization_matches_beta_function(self):
        # resolved constant: total mass of (1 - t^2)^((n-3)/2) equals
        # B(1/2, (n-1)/2) = sqrt(pi) Gamma((n-1)/2) / Gamma(n/2)
        for n in (2, 3, 5, 10, 50):
            closed = np.exp(0.5 * np.log(np.pi) + gammaln((n - 1) / 2) - gammaln(n / 2))
            assert _coord_normalization(n) == pytest.approx(closed, rel=1e-12)

    def test_quadrature_matches_monte_carlo_cdf(self):
        n = 10
        X = sample_matrix(MeasurementEnsemble("uniform_sphere", n), 1_000_000, 11)
        t = np.sort(X.rows[:, 0])
        grid = np.linspace(-np.sqrt(n), np.sqrt(n), 201)
        emp = np.searchsorted(t, grid, side="right") / t.size
        quad = sphere_marginal_cdf(grid, n)
        assert float(np.max(np.abs(emp - quad))) <= 0.01


class TestSmallBall:
    def test_full_band(self):
        ens = MeasurementEnsemble("uniform_sphere", 4)
        u = np.array([1.0, 0, 0, 0])
        res = small_ball_prob(ens, u, 2.0, 1000, 3)
        assert res.mc.estimate == 1.0
        assert res.quadrature == pytest.approx(1.0, abs=1e-12)

    def test_exact_value_n3(self):
        ens = MeasurementEnsemble("uniform_sphere", 3)
        u = np.array([1.0, 0, 0])
        res = small_ball_prob(ens, u, 0.9, 1_000_000, 5)
        assert res.mc.agrees_with(0.9 / np.sqrt(3))
        assert res.mc.std_error < 0.002

    def test_rotation_invariance(self):
        ens = MeasurementEnsemble("uniform_sphere", 8)
        rng = np.random.default_rng(0)
        u = rng.standard_normal(8)
        u /= np.linalg.norm(u)
        e1 = np.zeros(8)
        e1[0] = 1.0
        a = small_ball_prob(ens, e1, 0.5, 200_000, 21)
        b = small_ball_prob(ens, u, 0.5, 200_000, 22)
        assert abs(a.mc.estimate - b.mc.estimate) <= 2 * (a.mc.std_error + b.mc.std_error)

    def test_two_subsphere_hyperplane_mass(self):
        # half the mass sits on {x_1 = 0}, so every band along e1 has
        # probability >= 1/2 no matter how thin
        ens = MeasurementEnsemble("two_subsphere", 6)
        e1 = np.zeros(6)
        e1[0] = 1.0
        res = small_ball_prob(ens, e1, 1e-9, 100_000, 4)
        assert res.mc.estimate >= 0.5 - 3 * res.mc.std_error

    def test_atom_direction_sees_no_atom(self):
        # along the atom direction the atom sits at distance sqrt(n), so
        # only the spherical half contributes: P <= c * delta
        n = 8
        ens = MeasurementEnsemble("atom_plus_sphere", n)
        u = ens.atom_point / np.sqrt(n)
        res = small_ball_prob(ens, u, 0.01, 400_000, 6)
        assert res.mc.estimate <= 0.01

    def test_validates_inputs(self):
        ens = MeasurementEnsemble("gaussian", 3)
        with pytest.raises(ConfigurationError):
            small_ball_prob(ens, np.array([1.0, 0, 0]), 0.1, 0, 1)
        with pytest.raises(DegenerateInputError):
            small_ball_prob(ens, np.array([2.0, 0, 0]), 0.1, 10, 1)

    def test_estimate_determinism(self):
        ens = MeasurementEnsemble("gaussian", 4)
        u = np.array([0.5, 0.5, 0.5, 0.5])
        r1 = small_ball_prob(ens, u, 0.3, 50_000, 9)
        r2 = small_ball_prob(ens, u, 0.3, 50_000, 9)
        assert r1.mc.estimate == r2.mc.estimate


class TestSmallBallProportionality:
    def test_ratio_bracket_small_n(self):
        # central-band probability divided by half-width stays inside a
        # fixed bracket and decays monotonically in the width
        n = 5
        alphas = np.array([0.05, 0.1, 0.2, 0.5, 1.0])
        ratios = np.array([sphere_small_ball(a, n) / a for a in alphas])
        assert np.all(ratios >= 0.4) and np.all(ratios <= 1.0)
        assert ratios.max() / ratios.min() <= 3.0
        assert np.all(np.diff(ratios) <= 1e-12)
