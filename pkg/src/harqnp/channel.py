"""Binary-input AWGN channel with BPSK mapping 0 -> +1, 1 -> -1."""

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

_LOG_SQRT_2PI = 0.5 * np.log(2 * np.pi)


def snr_to_sigma(snr_db):
    """Noise std for unit-energy BPSK at ``snr_db`` taken as Es/N0 with N0 = 2 sigma^2."""
    return float(np.sqrt(1.0 / (2.0 * 10 ** (snr_db / 10.0))))


@dataclass(frozen=True)
class BiAwgnChannel:
    sigma: float
    snr_db: float = None
    convention: str = "EsN0"

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    @classmethod
    def from_snr(cls, snr_db, convention="EsN0", rate=1.0):
        """Channel at ``snr_db`` under a named convention.

        ``"EsN0"`` uses :func:`snr_to_sigma`; ``"EbN0"`` converts with
        ``Es/N0 = rate * Eb/N0``; ``"power"`` reads the SNR as ``1 / sigma^2``.
        """
        if convention == "power":
            return cls(float(10 ** (-snr_db / 20.0)), snr_db, convention)
        if convention == "EsN0":
            es_db = snr_db
        elif convention == "EbN0":
            es_db = snr_db + 10 * np.log10(rate)
        else:
            raise ValueError(f"unknown SNR convention {convention!r}")
        return cls(snr_to_sigma(es_db), snr_db, convention)

    @property
    def variance(self):
        return self.sigma**2

    @property
    def bits_per_use(self):
        return 1


def modulate(bits):
    return 1.0 - 2.0 * np.asarray(bits, dtype=float)


def transmit(x, channel, rng):
    x = np.asarray(x, dtype=float)
    return x + channel.sigma * rng.standard_normal(x.shape)


def channel_llr(y, channel):
    """``log P(y | b=1) / P(y | b=0)``; negative values favour bit 0."""
    return -2.0 * np.asarray(y, dtype=float) / channel.variance


def hard_quantize(y):
    """Bit 0 for ``y >= 0``, else bit 1."""
    return (np.asarray(y) < 0).astype(np.uint8)


def bit_flip_prob(channel):
    """Crossover probability of the hard-quantized channel, ``Q(1/sigma)``."""
    return float(ndtr(-1.0 / channel.sigma))


def log_likelihood(y, c, channel):
    """Log-density of ``y`` given the first ``len(y)`` symbols of codeword(s) ``c``.

    ``y`` may be ``(..., p)`` and ``c`` either a single word or a stack of
    words; broadcasting follows numpy rules on the leading axes.
    """
    y = np.asarray(y, dtype=float)
    p = y.shape[-1]
    c = np.asarray(c)
    if c.shape[-1] < p:
        raise ValueError("received vector longer than codeword")
    x = modulate(c[..., :p])
    resid = y - x
    return -0.5 * (resid**2).sum(axis=-1) / channel.variance - p * (np.log(channel.sigma) + _LOG_SQRT_2PI)


def prefix_log_likelihoods(Y, codebook, channel):
    """Matrix of prefix log-likelihoods, ``out[t, j] = log P(Y[t] | codebook[j])``.

    Uses one matrix product; since every BPSK word has the same norm only the
    correlation term varies across codewords.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    p = Y.shape[1]
    X = modulate(codebook[:, :p])
    const = -0.5 * ((Y**2).sum(axis=1, keepdims=True) + p) / channel.variance \
        - p * (np.log(channel.sigma) + _LOG_SQRT_2PI)
    return const + (Y @ X.T) / channel.variance
