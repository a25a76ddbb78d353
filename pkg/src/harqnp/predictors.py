"""Decodability test statistics computed from a received prefix ``y_p``.

Larger values always mean "more likely decodable". Density-ratio statistics
are returned in the log domain, with ``-inf`` for a zero ratio.

Every statistic has a single-observation function (``stat_*``) and, where
campaigns need throughput, a batch evaluator class that precomputes the
per-``(code, p)`` structures once.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logsumexp

from . import gf2
from .channel import channel_llr, hard_quantize, modulate, prefix_log_likelihoods
from .codes import CosetTooLarge, enumerate_coset, prefix_parity
from .decoders import SumProductParams, SyndromeDecoder, break_ties, sum_product
from .mvn import QmcParams
from .oracle import MlPrefixOracle, terror_prob

KINDS = ("np_exact", "np_coset", "np_quant", "np_kde", "llr_mean", "subcode",
         "mi_full", "mi_valid", "decode_based")

#: stable names used in trial records
RECORD_FIELDS = {
    "np_exact": "t_np", "np_coset": "t_np_coset", "np_quant": "t_np_quant",
    "np_kde": "t_np_kde", "llr_mean": "t_llr", "subcode": "t_subcode",
    "mi_full": "t_mi_full", "mi_valid": "t_mi_valid", "decode_based": "z_decode",
}

TRUNCATION_NATS = 40.0


@dataclass(frozen=True)
class TestStatistic:
    value: float
    kind: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown statistic kind {self.kind!r}")
        if np.isnan(self.value) or self.value == np.inf:
            raise ValueError(f"statistic must be finite or -inf, got {self.value}")
        if self.kind == "decode_based" and self.value not in (0, 1):
            raise ValueError("decode-based statistics are 0 or 1")


# ---------------------------------------------------------------------------
# Randomized threshold test
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RandomizedThreshold:
    """Accept above ``c``; accept with probability ``tau`` at exactly ``c``."""

    c: float
    tau: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError("tau must lie in [0, 1]")


def apply_test(stat, threshold, rng):
    """Decision bit of the randomized threshold test."""
    value = stat.value if isinstance(stat, TestStatistic) else float(stat)
    if value > threshold.c:
        return 1
    if value < threshold.c:
        return 0
    return int(rng.random() < threshold.tau)


def apply_test_batch(values, threshold, rng):
    values = np.asarray(values, dtype=float)
    ties = values == threshold.c
    draw = rng.random(values.shape) < threshold.tau
    return ((values > threshold.c) | (ties & draw)).astype(np.int8)


# ---------------------------------------------------------------------------
# Bit-error-estimate statistics
# ---------------------------------------------------------------------------

def llr_mean_batch(llrs):
    """Inverse mean of ``1 / (1 + exp|L|)`` along the last axis."""
    pe = expit(-np.abs(np.asarray(llrs, dtype=float)))
    mean = pe.mean(axis=-1)
    with np.errstate(divide="ignore"):
        return np.where(mean > 0, 1.0 / mean, np.finfo(float).max)


def stat_llr_mean(llrs):
    llrs = np.asarray(llrs, dtype=float)
    if llrs.size == 0:
        raise ValueError("llrs must be nonempty")
    return TestStatistic(float(llr_mean_batch(llrs)), "llr_mean")


def subcode_parity(parity, p):
    """Rows of ``parity`` supported on the first ``p`` columns, cut to those columns."""
    parity = gf2.as_bits(parity)
    inside = ~parity[:, p:].any(axis=1)
    return parity[inside, :p]


def subcode_batch(llrs, parity_prefix, iterations, clamp=30.0):
    """Bit-error statistic on sum-product posteriors after ``iterations`` rounds."""
    llrs = np.atleast_2d(np.asarray(llrs, dtype=float))
    if parity_prefix.shape[0] == 0:
        return llr_mean_batch(llrs)
    params = SumProductParams(iterations, early_stop_on_zero_syndrome=False, clamp=clamp)
    post, _, _ = sum_product(llrs, parity_prefix, params)
    return llr_mean_batch(post)


def stat_subcode(llrs, parity_prefix, iterations=5):
    return TestStatistic(float(subcode_batch(llrs, parity_prefix, iterations)[0]), "subcode")


# ---------------------------------------------------------------------------
# Information density
# ---------------------------------------------------------------------------

def mi_batch(ll, valid):
    """Maximal prefix information density over all codewords and over ``valid``.

    ``ll`` holds prefix log-likelihoods of every codeword (rows are trials);
    the reference density is the uniform mixture over the full codebook.
    """
    ll = np.atleast_2d(ll)
    log_mix = logsumexp(ll, axis=1) - np.log(ll.shape[1])
    return ll.max(axis=1) - log_mix, ll[:, valid].max(axis=1) - log_mix


def stat_mi(y_p, code, channel, messages=None):
    """``max_i log p(y_p | c_i) / p_x(y_p)`` with ``i`` over ``messages`` (default all)."""
    ll = prefix_log_likelihoods(np.asarray(y_p, dtype=float)[None], code.codebook, channel)
    valid = messages.valid if messages is not None else np.arange(code.size)
    full, sub = mi_batch(ll, valid)
    kind = "mi_full" if messages is None or len(messages) == code.size else "mi_valid"
    return TestStatistic(float(sub[0] if kind == "mi_valid" else full[0]), kind)


# ---------------------------------------------------------------------------
# Density ratio (most powerful) statistics
# ---------------------------------------------------------------------------

def log_np_ratio(ll_valid, pd_given, pd_uncond):
    """``log sum_i e^{ll_i} P(i|y_p, c_i) / P(i|c_i) - log sum_i e^{ll_i}`` per row."""
    ll_valid = np.atleast_2d(ll_valid)
    with np.errstate(divide="ignore"):
        num = ll_valid + np.log(pd_given) - np.log(pd_uncond)
    return logsumexp(num, axis=1) - logsumexp(ll_valid, axis=1)


def stat_np(y_p, code, messages, channel, pd_oracle, pd_uncond, truncation=TRUNCATION_NATS):
    """Log density ratio of success-conditioned to unconditional prefix law.

    Parameters
    ----------
    pd_oracle : callable
        ``pd_oracle(y_p, candidates, ll)`` returning ``P(D = i | y_p, c_i)`` for
        each candidate message index; ``ll`` is the full prefix log-likelihood
        vector.
    pd_uncond : float or callable
        ``P(D = i | c_i)``; a callable is queried per candidate.
    truncation : float
        Valid codewords whose prefix likelihood falls this many nats below
        the best are skipped in the numerator.
    """
    y_p = np.asarray(y_p, dtype=float)
    ll = prefix_log_likelihoods(y_p[None], code.codebook, channel)[0]
    valid = messages.valid
    llv = ll[valid]
    keep = valid[llv >= llv.max() - truncation]
    pd = np.asarray(pd_oracle(y_p, keep, ll), dtype=float)
    unc = np.array([pd_uncond(i) for i in keep]) if callable(pd_uncond) else pd_uncond
    with np.errstate(divide="ignore"):
        num = logsumexp(ll[keep] + np.log(pd) - np.log(unc))
    return TestStatistic(float(num - logsumexp(llv)), "np_exact")


class MlNpStatistic:
    """Batch log density ratio for ML decoding on the AWGN channel."""

    def __init__(self, code, messages, p, channel, p_success, qmc_params=QmcParams(),
                 seed=0, truncation=TRUNCATION_NATS):
        self.valid = messages.valid
        self.p_success = p_success
        self.truncation = truncation
        self.oracle = MlPrefixOracle(code, p, channel, qmc_params, seed)

    def __call__(self, ll):
        """``ll``: prefix log-likelihoods of every codeword, one row per trial."""
        ll = np.atleast_2d(ll)
        out = np.empty(ll.shape[0])
        for t, row in enumerate(ll):
            llv = row[self.valid]
            keep = self.valid[llv >= llv.max() - self.truncation]
            keep = keep[self.oracle.winners(row, keep)]
            if keep.size == 0:
                out[t] = -np.inf
                continue
            pd, _ = self.oracle(row, keep)
            with np.errstate(divide="ignore"):
                out[t] = logsumexp(row[keep] + np.log(pd)) - np.log(self.p_success) - logsumexp(llv)
        return out


def hamming_to_codewords(hard, words):
    """Hamming distances between rows of ``hard`` and rows of ``words``."""
    h = np.asarray(hard, dtype=np.int32)
    w = np.asarray(words, dtype=np.int32)
    return h.sum(axis=1)[:, None] + w.sum(axis=1)[None, :] - 2 * (h @ w.T)


class BdNpStatistic:
    """Batch log density ratio for ``t``-error hard-decision decoding.

    The success probability given the prefix depends on ``y_p`` only through
    the Hamming distance between its hard decisions and each codeword prefix.
    """

    def __init__(self, code, messages, p, t, v, p_success):
        self.words = code.codebook[messages.valid, :p]
        self.p, self.t, self.r, self.v = p, t, code.n - p, v
        self.p_success = p_success

    def __call__(self, ll_valid, y_p):
        d = hamming_to_codewords(hard_quantize(y_p), self.words)
        pd = terror_prob(d, self.t, self.r, self.v)
        return log_np_ratio(ll_valid, pd, self.p_success)


class CosetStatistic:
    """Log density ratio for ``t``-error decoding through the syndrome coset.

    Each member ``e`` of the coset selected by the hard-decision syndrome is
    weighted by its posterior ``exp(-sum_k e_k |L_k|)``, normalized over the
    coset, and by the success probability ``P(at most t - |e| suffix errors)``.
    Members heavier than ``min(t, weight_cap)`` contribute nothing.
    """

    def __init__(self, parity_prefix, t, r, v, p_success, weight_cap=None, max_patterns=1 << 16):
        H = gf2.as_bits(parity_prefix)
        self.H = H
        self.p = H.shape[1]
        self.t, self.r, self.v = t, r, v
        self.p_success = p_success
        self.cap = t if weight_cap is None else min(t, weight_cap)
        base = enumerate_coset(H, np.zeros(H.shape[0], dtype=np.uint8), max_patterns)
        self._span = base.patterns
        rows = H.shape[0]
        if rows > 20:
            raise CosetTooLarge(f"syndrome table of 2**{rows} entries")
        self._reps = _syndrome_representatives(H)

    def __call__(self, llrs):
        llrs = np.atleast_2d(np.asarray(llrs, dtype=float))
        hard = (llrs > 0).astype(np.uint8)
        keys = gf2.bits_to_int(gf2.matvec(self.H, hard)) if self.H.shape[0] else np.zeros(len(llrs), int)
        out = np.empty(llrs.shape[0])
        mag = np.abs(llrs)
        for t in range(llrs.shape[0]):
            members = self._span ^ self._reps[keys[t]]
            logw = -(members @ mag[t])
            weight = members.sum(axis=1)
            light = weight <= self.cap
            if not light.any():
                out[t] = -np.inf
                continue
            with np.errstate(divide="ignore"):
                num = logsumexp(logw[light] + np.log(terror_prob(weight[light], self.t, self.r, self.v)))
            out[t] = num - logsumexp(logw) - np.log(self.p_success)
        return out


def _syndrome_representatives(H):
    """Row ``s`` is a pattern with syndrome ``s``; ``H`` must have full row rank."""
    rows, p = H.shape
    if gf2.rank(H) != rows:
        raise ValueError("parity matrix must have full row rank")
    # pivot columns of H are independent, so this square block is invertible
    _, pivots = gf2.rref(H)
    square = H[:, pivots]
    inverse = np.array([gf2.solve(square, e) for e in np.eye(rows, dtype=np.uint8)]).T
    syndromes = gf2.int_to_bits(np.arange(1 << rows), rows)
    reps = np.zeros((1 << rows, p), dtype=np.uint8)
    if rows:
        reps[:, pivots] = gf2.matvec(inverse, syndromes)
    return reps


def stat_np_coset(y_p, parity_prefix, t, v, channel, p_success, r, weight_cap=None,
                  max_patterns=1 << 16):
    """Single-observation version of :class:`CosetStatistic`."""
    llrs = channel_llr(y_p, channel)
    stat = CosetStatistic(parity_prefix, t, r, v, p_success, weight_cap, max_patterns)
    return TestStatistic(float(stat(llrs[None])[0]), "np_coset")


class QuantizedNpStatistic:
    """Density ratio of the hard-decision prefix alone.

    The success probability of a ``t``-error decoder given only the hard
    prefix is ``P(at most t - w suffix errors)`` with ``w`` the coset-leader
    weight, so the statistic takes at most ``t + 2`` distinct values.
    """

    def __init__(self, parity_prefix, t, r, v, p_success):
        self.decoder = SyndromeDecoder(parity_prefix, t, ambiguous="first")
        self.t, self.r, self.v = t, r, v
        self.p_success = p_success

    def leader_weights(self, hard):
        return self.decoder.leader_weight[self.decoder.keys(hard)]

    def __call__(self, hard):
        w = self.leader_weights(hard)
        pd = np.where(w >= 0, terror_prob(np.maximum(w, 0), self.t, self.r, self.v), 0.0)
        with np.errstate(divide="ignore"):
            return np.log(pd) - np.log(self.p_success)


def stat_np_quant(y_p, parity_prefix, t, v, p_success, r):
    stat = QuantizedNpStatistic(parity_prefix, t, r, v, p_success)
    return TestStatistic(float(stat(hard_quantize(y_p)[None])[0]), "np_quant")


class KdeNpStatistic:
    """Density ratio with the success-conditioned part estimated from samples.

    With a :class:`~harqnp.kde.KdeModel` the numerator averages the
    single-component density estimate over the sign flips mapping each valid
    codeword onto the all-zero one. With a
    :class:`~harqnp.kde.SuccessRegression` each valid codeword's exact prefix
    likelihood is weighted by the estimated success probability at its
    flipped prefix. Codewords more than ``truncation`` nats below the best
    are skipped.
    """

    def __init__(self, kde, code, messages, truncation=TRUNCATION_NATS):
        self.kde = kde
        self.p = kde.dim
        self.x_valid = modulate(code.codebook[messages.valid, : self.p])
        self.m = len(messages)
        self.truncation = truncation
        self.regression = hasattr(kde, "log_ratio")

    def __call__(self, ll_valid, y_p):
        ll_valid = np.atleast_2d(ll_valid)
        y_p = np.atleast_2d(y_p)
        keep = ll_valid >= ll_valid.max(axis=1, keepdims=True) - self.truncation
        tr, ci = np.nonzero(keep)
        z = y_p[tr] * self.x_valid[ci]
        if self.regression:
            terms = ll_valid[tr, ci] + self.kde.log_ratio(z)
        else:
            terms = self.kde.log_density(z)
        num = np.full(ll_valid.shape[0], -np.inf)
        np.logaddexp.at(num, tr, terms)
        return num - logsumexp(ll_valid, axis=1)


def stat_np_kde(y_p, kde, code, messages, channel):
    y_p = np.asarray(y_p, dtype=float)
    llv = prefix_log_likelihoods(y_p[None], code.codebook[messages.valid], channel)
    return TestStatistic(float(KdeNpStatistic(kde, code, messages)(llv, y_p[None])[0]), "np_kde")


# ---------------------------------------------------------------------------
# Decoding-based prediction
# ---------------------------------------------------------------------------

class PrefixMlDecoder:
    """ML over the full codebook using the first ``p`` symbols."""

    def __init__(self, code, channel, p):
        self.book = code.codebook
        self.channel = channel
        self.p = p
        self.failure = code.size

    def __call__(self, Y_p, rng):
        scores = prefix_log_likelihoods(Y_p, self.book, self.channel)
        index, _ = break_ties(scores, rng)
        return index


class PrefixSyndromeDecoder:
    """Coset-leader decoding of the hard prefix in the valid-message prefix code.

    Accepts when the coset leader has weight at most ``t`` and returns a
    valid message whose prefix is the corrected word.
    """

    def __init__(self, code, messages, p, t):
        self.p = p
        self.failure = code.size
        self.decoder = SyndromeDecoder(prefix_parity(code, messages, p), t, ambiguous="first")
        keys = gf2.bits_to_int(code.codebook[messages.valid, :p]) if p else np.zeros(len(messages), int)
        self._lookup = dict(zip(keys.tolist()[::-1], messages.valid.tolist()[::-1]))

    def __call__(self, Y_p, rng=None):
        words, ok = self.decoder.decode(hard_quantize(Y_p))
        keys = gf2.bits_to_int(words)
        return np.array([self._lookup.get(int(k), self.failure) if good else self.failure
                         for k, good in zip(keys, ok)], dtype=np.int64)


class PrefixSumProductDecoder:
    """Sum-product on the full graph with zero LLRs at unreceived positions."""

    def __init__(self, code, channel, p, params=SumProductParams()):
        self.code = code
        self.channel = channel
        self.p = p
        self.params = params
        self.failure = code.size

    def __call__(self, Y_p, rng=None):
        Y_p = np.atleast_2d(Y_p)
        llrs = np.zeros((Y_p.shape[0], self.code.n))
        llrs[:, : self.p] = channel_llr(Y_p, self.channel)
        post, _, ok = sum_product(llrs, self.code.parity, self.params)
        words = (post > 0).astype(np.uint8)
        return np.where(ok, self.code.message_of(words), self.failure)


def decode_based_batch(Y_p, subdecoder, messages, rng):
    return messages.contains(subdecoder(Y_p, rng)).astype(np.int8)


def stat_decode_based(y_p, subdecoder, messages, rng=None):
    out = decode_based_batch(np.atleast_2d(np.asarray(y_p, dtype=float)), subdecoder, messages, rng)
    return TestStatistic(int(out[0]), "decode_based")
