"""Chunk-seeded stream determinism and reduction invariance."""

import numpy as np
import pytest

from clipfold.mc import CHUNK_SIZE, MonteCarloEstimate, chunk_rng, chunk_spans, mc_mean, subseed


class TestStreams:
    def test_chunk_rng_reproducible(self):
        a = chunk_rng(42, 3).standard_normal(10)
        b = chunk_rng(42, 3).standard_normal(10)
        np.testing.assert_array_equal(a, b)

    def test_chunks_independent(self):
        a = chunk_rng(42, 0).standard_normal(10)
        b = chunk_rng(42, 1).standard_normal(10)
        assert not np.allclose(a, b)

    def test_subseed_path_sensitivity(self):
        assert subseed(1, 2, 3) != subseed(1, 3, 2)
        assert subseed(1, 2, 3) == subseed(1, 2, 3)

    def test_spans_cover_exactly(self):
        total = 2 * CHUNK_SIZE + 17
        spans = chunk_spans(total)
        assert spans[0][1] == 0
        assert sum(size for _, _, size in spans) == total
        assert [idx for idx, _, _ in spans] == list(range(len(spans)))


class TestMcMean:
    def test_indicator_mean_and_se(self):
        est = mc_mean(lambda rng, size: (rng.random(size) < 0.3).astype(float), 200_000, 5)
        assert est.estimate == pytest.approx(0.3, abs=0.01)
        assert est.std_error == pytest.approx(np.sqrt(0.3 * 0.7 / 200_000), rel=0.05)

    def test_threads_do_not_change_result(self):
        def sampler(rng, size):
            return rng.standard_normal(size) ** 2

        a = mc_mean(sampler, 300_000, 9, threads=1)
        b = mc_mean(sampler, 300_000, 9, threads=4)
        assert a.estimate == b.estimate
        assert a.std_error == b.std_error

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            mc_mean(lambda rng, size: np.zeros(size), 0, 1)

    def test_agrees_with_helper(self):
        est = MonteCarloEstimate(0.5, 0.01, 100, 1)
        assert est.agrees_with(0.52)
        assert not est.agrees_with(0.56)
