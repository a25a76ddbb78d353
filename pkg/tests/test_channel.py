import numpy as np
import pytest
from scipy.special import ndtr

from harqnp.channel import (BiAwgnChannel, bit_flip_prob, channel_llr, hard_quantize,
                            log_likelihood, modulate, prefix_log_likelihoods, snr_to_sigma,
                            transmit)


class TestSnr:
    def test_zero_db(self):
        assert snr_to_sigma(0.0) == pytest.approx(np.sqrt(0.5))

    def test_five_db(self):
        assert snr_to_sigma(5.0) == pytest.approx(0.39764, abs=1e-5)

    def test_monotone(self):
        sigmas = [snr_to_sigma(s) for s in np.linspace(-5, 30, 50)]
        assert np.all(np.diff(sigmas) < 0)

    def test_conventions(self):
        assert BiAwgnChannel.from_snr(3.0, "EbN0", rate=0.5).sigma == pytest.approx(snr_to_sigma(3.0 - 10 * np.log10(2)))
        assert BiAwgnChannel.from_snr(20.0, "power").sigma == pytest.approx(0.1)
        with pytest.raises(ValueError):
            BiAwgnChannel.from_snr(1.0, "bogus")

    def test_positive_sigma(self):
        with pytest.raises(ValueError):
            BiAwgnChannel(0.0)


class TestModulation:
    def test_map(self):
        np.testing.assert_array_equal(modulate([0, 0, 0]), [1, 1, 1])
        np.testing.assert_array_equal(modulate([1, 0, 1]), [-1, 1, -1])

    def test_noiseless(self, rng):
        x = modulate([1, 0, 1, 1])
        np.testing.assert_allclose(transmit(x, BiAwgnChannel(1e-12), rng), x, atol=1e-9)

    def test_noise_moments(self, rng):
        ch = BiAwgnChannel(0.7)
        x = modulate(np.zeros(10**6, dtype=np.uint8))
        e = transmit(x, ch, rng) - x
        assert abs(e.mean()) < 4 * ch.sigma / 1000
        assert e.var() == pytest.approx(ch.variance, rel=0.01)


class TestLlr:
    def test_zero(self):
        assert channel_llr(0.0, BiAwgnChannel(1.0)) == 0.0

    def test_direct(self):
        assert channel_llr(1.0, BiAwgnChannel(np.sqrt(0.5))) == pytest.approx(-4.0)

    def test_hard_quantize(self):
        np.testing.assert_array_equal(hard_quantize([0.3, -0.2]), [0, 1])
        assert hard_quantize(0.0) == 0

    def test_llr_sign_agrees_with_hard_decision(self, rng):
        y = rng.standard_normal(100)
        np.testing.assert_array_equal(channel_llr(y, BiAwgnChannel(1.0)) > 0, hard_quantize(y) == 1)


class TestFlipProbability:
    def test_limits(self):
        assert bit_flip_prob(BiAwgnChannel(1e-3)) == 0.0
        assert bit_flip_prob(BiAwgnChannel(1.0)) == pytest.approx(0.15866, abs=1e-5)

    def test_five_db(self):
        ch = BiAwgnChannel.from_snr(5.0)
        assert bit_flip_prob(ch) == pytest.approx(ndtr(-2.5149), rel=1e-3)

    def test_empirical(self, rng):
        ch = BiAwgnChannel(0.8)
        n = 10**6
        flips = hard_quantize(transmit(modulate(np.zeros(n, dtype=np.uint8)), ch, rng)).mean()
        v = bit_flip_prob(ch)
        assert abs(flips - v) <= 3 * np.sqrt(v * (1 - v) / n)


class TestLikelihood:
    def test_zero_residual(self):
        ch = BiAwgnChannel(0.6)
        c = np.array([1, 0, 1, 1, 0], dtype=np.uint8)
        expected = 5 * np.log(1 / (ch.sigma * np.sqrt(2 * np.pi)))
        assert log_likelihood(modulate(c), c, ch) == pytest.approx(expected)

    def test_pairwise_difference_is_llr_sum(self, rng):
        ch = BiAwgnChannel(0.9)
        y = rng.standard_normal(6)
        c = rng.integers(0, 2, 6, dtype=np.uint8)
        c2 = c ^ rng.integers(0, 2, 6, dtype=np.uint8)
        lam = channel_llr(y, ch)
        # flipping bit k from 0 to 1 adds lam_k
        diff = np.sum(np.where(c2 != c, np.where(c2 == 1, lam, -lam), 0.0))
        assert log_likelihood(y, c2, ch) - log_likelihood(y, c, ch) == pytest.approx(diff)

    def test_prefix_matrix(self, hamming, rng):
        ch = BiAwgnChannel(0.8)
        Y = rng.standard_normal((5, 4))
        ll = prefix_log_likelihoods(Y, hamming.codebook, ch)
        direct = np.array([[log_likelihood(y, c, ch) for c in hamming.codebook] for y in Y])
        np.testing.assert_allclose(ll, direct)

    def test_too_long(self):
        with pytest.raises(ValueError):
            log_likelihood(np.zeros(4), np.zeros(3, dtype=np.uint8), BiAwgnChannel(1.0))
