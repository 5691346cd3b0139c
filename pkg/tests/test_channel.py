import csv

import numpy as np
import pytest

from ehncs.channel import (PiTildeStats, estimate_pitilde_stats, receive,
                           sample_channel, save_samples_csv)
from ehncs.numerics import InputDomainError


class TestSampleChannel:
    def test_shapes_and_cached_svd(self):
        draw = sample_channel(np.random.default_rng(0), N_c=2, N_s=3, K=2)
        assert draw.H.shape == (2, 3)
        assert draw.Pi_K.shape == (2,)
        assert np.all(np.diff(draw.Pi_K) <= 0)
        assert np.abs(draw.svd.reconstruct() - draw.H).max() < 1e-10

    def test_k_too_large(self):
        with pytest.raises(InputDomainError):
            sample_channel(np.random.default_rng(0), N_c=2, N_s=3, K=3)

    def test_unit_variance_entries(self):
        rng = np.random.default_rng(1)
        draws = [sample_channel(rng, 4, 4, 4).H for _ in range(500)]
        flat = np.concatenate([d.ravel() for d in draws])
        assert abs(np.mean(np.abs(flat) ** 2) - 1.0) < 0.05


class TestReceive:
    def test_noiseless_is_linear_map(self):
        rng = np.random.default_rng(2)
        draw = sample_channel(rng, 2, 3, 2)
        F = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
        q = np.array([0.3, -0.7])
        y = receive(draw, F, q, rng, noiseless=True)
        assert np.allclose(y, draw.H @ F @ q)

    def test_noise_is_unit_variance(self):
        rng = np.random.default_rng(3)
        draw = sample_channel(rng, 2, 3, 2)
        F = np.zeros((3, 2))
        ys = np.array([receive(draw, F, np.zeros(2), rng) for _ in range(4000)])
        assert abs(np.mean(np.abs(ys) ** 2) - 1.0) < 0.05


class TestPiTildeStats:
    def test_hand_case_equal_singular_values(self):
        # Pi = diag(2, 2): t = 1/2 + 1/2 = 1, both samples equal 2
        s = np.array([2.0, 2.0])
        t = (1.0 / s).sum()
        stats = PiTildeStats(s / t)
        assert stats.prob_below(2.0) == 0.0
        assert stats.prob_below(2.0 + 1e-12) == 1.0
        assert stats.inv_mean_above(0.0) == pytest.approx(0.5)

    def test_hand_case_three_samples(self):
        stats = PiTildeStats(np.array([1.0, 2.0, 4.0]))
        assert stats.prob_below(2.0) == pytest.approx(1.0 / 3.0)
        assert stats.inv_mean_above(2.0) == pytest.approx((0.5 + 0.25) / 2.0)
        assert np.isnan(stats.inv_mean_above(5.0))

    def test_quantile_grid(self):
        stats = PiTildeStats(np.linspace(1.0, 2.0, 100))
        q = stats.quantiles(10)
        assert len(q) == 10
        assert np.all(np.diff(q) >= 0)

    def test_empty_rejected(self):
        with pytest.raises(InputDomainError):
            PiTildeStats(np.array([]))


class TestEstimateStats:
    def test_sample_count_and_positivity(self):
        stats = estimate_pitilde_stats(np.random.default_rng(4), N_c=2, N_s=3,
                                       K=2, n_samples=2000)
        assert stats.samples.size + 2 * stats.n_excluded == 2 * 2000
        assert np.all(stats.samples > 0)

    def test_scalar_channel_reduces_to_square(self):
        # K = 1: pi_tilde = sigma / (1/sigma) = sigma^2 = |h|^2
        rng = np.random.default_rng(5)
        stats = estimate_pitilde_stats(rng, N_c=1, N_s=1, K=1, n_samples=3000)
        # |h|^2 is Exp(1): mean 1
        assert abs(stats.samples.mean() - 1.0) < 0.06

    def test_save_csv_roundtrip(self, tmp_path):
        stats = PiTildeStats(np.array([0.5, 1.5]))
        path = tmp_path / "samples.csv"
        save_samples_csv(stats, path)
        with open(path) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["pi_tilde"]
        assert [float(r[0]) for r in rows[1:]] == [0.5, 1.5]
