"""Conditional correct-decoding probabilities ``P(D = i | y_p, c_i)``.

Routes: a Gaussian orthant probability for ML on the AWGN channel, exact
enumeration for ML on discrete channels, a binomial tail for bounded-distance
decoding, and nested Monte Carlo for any decoder.
"""

from dataclasses import dataclass
from itertools import product
from threading import Lock

import numpy as np
from scipy.stats import binom

from . import gf2
from .channel import modulate, prefix_log_likelihoods
from .mvn import DimensionTooLarge, OracleEstimate, OrthantIntegrator, QmcParams, mvn_cdf

ROUTES = ("enumeration", "gaussian_cdf", "binomial_tail", "nested_mc")


def mc_estimate(successes, trials, route="nested_mc"):
    """Success fraction with a Laplace-smoothed binomial standard error.

    Smoothing keeps the error positive at 0 and ``trials`` successes, so a
    Monte-Carlo estimate is never mistaken for an exact one.
    """
    smoothed = (successes + 1.0) / (trials + 2.0)
    se = np.sqrt(smoothed * (1.0 - smoothed) / trials)
    return OracleEstimate(successes / trials, float(se), route)


# ---------------------------------------------------------------------------
# ML on the AWGN channel
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CollapsedGaussian:
    """Constraint rows of the ML success event grouped by their suffix part.

    Group ``g`` holds the codewords ``j`` whose suffix differs from that of
    ``c_i`` by ``patterns[g]``. The success event is ``W_g < u_g`` for all
    nonzero patterns, where ``W ~ N(0, covariance)`` and

        u_g = offsets[g] + sigma^2 * (ll_i - max_{j in g} ll_j),

    plus the deterministic condition that ``c_i`` strictly beats every other
    codeword sharing its suffix on the prefix alone.
    """

    i: int
    p: int
    sigma: float
    patterns: np.ndarray
    members: tuple
    same_suffix: np.ndarray
    offsets: np.ndarray
    covariance: np.ndarray
    codebook: np.ndarray

    @property
    def reduced_B_r(self):
        """Suffix rows ``c_j - c_i`` in modulated form, one per group."""
        return -2.0 * self.patterns * modulate(self.codebook[self.i, self.p:])

    def prefix_ll(self, y_p):
        """Prefix log-likelihoods of all codewords, up to a common constant."""
        return modulate(self.codebook[:, : self.p]) @ np.asarray(y_p, dtype=float) / self.sigma**2

    @property
    def group_count(self):
        return len(self.patterns) + (1 if self.same_suffix.size else 0)

    def bounds(self, ll):
        """Upper bounds and the deterministic gate for prefix log-likelihoods ``ll``."""
        ll = np.asarray(ll, dtype=float)
        lli = ll[self.i]
        gate = bool(self.same_suffix.size == 0 or lli > ll[self.same_suffix].max())
        upper = np.array([self.offsets[g] + self.sigma**2 * (lli - ll[m].max())
                          for g, m in enumerate(self.members)])
        return upper, gate


def _suffix_ids(codebook, p):
    r = codebook.shape[1] - p
    return gf2.bits_to_int(codebook[:, p:]) if r else np.zeros(codebook.shape[0], dtype=np.int64)


def _pattern_geometry(codebook, p, sigma):
    """Distinct nonzero suffix patterns of the (linear) code and their Gaussian law."""
    r = codebook.shape[1] - p
    ids = np.unique(_suffix_ids(codebook, p))
    ids = ids[ids != 0]
    E = gf2.int_to_bits(ids, r).astype(float) if r else np.zeros((0, 0))
    offsets = 2.0 * E.sum(axis=1)
    cov = 4.0 * sigma**2 * (E @ E.T)
    return ids, E, offsets, cov


def collapse_rows(code, i, p, channel):
    """Group the ``2**k - 1`` pairwise constraints of ML success for ``c_i``.

    Rows with equal suffix parts share a slope, so only the tightest one in
    each group matters; which one that is depends on ``y_p`` and is resolved
    in :meth:`CollapsedGaussian.bounds`.
    """
    book = code.codebook
    if not 0 <= p <= code.n:
        raise ValueError(f"p={p} outside [0, {code.n}]")
    sid = _suffix_ids(book, p)
    ids, E, offsets, cov = _pattern_geometry(book, p, channel.sigma)
    diff = sid ^ sid[i]
    others = np.arange(book.shape[0]) != i
    members = tuple(np.flatnonzero(diff == e) for e in ids)
    same = np.flatnonzero((diff == 0) & others)
    return CollapsedGaussian(i, p, channel.sigma, E, members, same, offsets, cov, book)


def pd_ml_awgn(y_p, i, collapsed, qmc_params=QmcParams()):
    """Probability that ML decodes ``i`` given prefix ``y_p`` and sent ``c_i``.

    Raises :class:`~harqnp.mvn.DimensionTooLarge` past the dimension cap.
    """
    if collapsed.i != i:
        raise ValueError("collapsed rows were built for a different codeword")
    y_p = np.asarray(y_p, dtype=float)
    if y_p.size != collapsed.p:
        raise ValueError(f"y_p has length {y_p.size}, expected {collapsed.p}")
    ll = collapsed.prefix_ll(y_p)
    upper, gate = collapsed.bounds(ll)
    if not gate:
        return OracleEstimate(0.0, 0.0, "gaussian_cdf")
    return mvn_cdf(upper, collapsed.covariance, qmc_params)


class MlPrefixOracle:
    """Batched ML success probabilities for every codeword at one prefix length.

    The grouping of constraints is the same for every ``i`` of a linear code,
    so one orthant integrator (fixed pivots and QMC points) serves all
    queries and results do not depend on how queries are batched.
    """

    def __init__(self, code, p, channel, qmc_params=QmcParams(), seed=0):
        self.code = code
        self.p = p
        self.sigma = channel.sigma
        book = code.codebook
        self.r = code.n - p
        if self.r > 20:
            raise DimensionTooLarge(f"suffix length {self.r} too long for class tables")
        self.sid = _suffix_ids(book, p)
        self.ids, _, self.offsets, cov = _pattern_geometry(book, p, channel.sigma)
        # suffix classes are cosets of one subgroup, hence of equal size
        order = np.argsort(self.sid, kind="stable")
        self._class_ids = np.unique(self.sid)
        self._members = order.reshape(self._class_ids.size, -1)
        self.integrator = OrthantIntegrator(cov, qmc_params, seed) if self.ids.size else None

    def class_maxima(self, ll):
        """Best and second-best log-likelihood per suffix class, and the argmax.

        Arrays are indexed by suffix id; absent classes hold ``-inf`` and ``-1``.
        """
        vals = ll[self._members]
        col = vals.argmax(axis=1)
        rows = np.arange(vals.shape[0])
        top = vals[rows, col]
        vals[rows, col] = -np.inf
        size = 1 << self.r
        best = np.full(size, -np.inf)
        second = np.full(size, -np.inf)
        arg = np.full(size, -1, dtype=np.int64)
        best[self._class_ids] = top
        second[self._class_ids] = vals.max(axis=1, initial=-np.inf)
        arg[self._class_ids] = self._members[rows, col]
        return best, second, arg

    def winners(self, ll, candidates):
        """Mask of candidates that strictly beat their own suffix class on the prefix."""
        best, second, arg = self.class_maxima(ll)
        s = self.sid[candidates]
        return (arg[s] == candidates) & (ll[candidates] > second[s])

    def __call__(self, ll, candidates):
        """``P(D = i | y_p, c_i)`` and standard errors for each candidate ``i``.

        ``ll`` holds the prefix log-likelihoods of all ``2**k`` codewords.
        """
        ll = np.asarray(ll, dtype=float)
        candidates = np.asarray(candidates, dtype=np.int64)
        best, second, arg = self.class_maxima(ll)
        s = self.sid[candidates]
        gate = (arg[s] == candidates) & (ll[candidates] > second[s])
        vals = np.zeros(candidates.size)
        ses = np.zeros(candidates.size)
        live = np.flatnonzero(gate)
        if live.size == 0:
            return vals, ses
        if self.integrator is None:
            vals[live] = 1.0
            return vals, ses
        sc = s[live][:, None] ^ self.ids[None, :]
        upper = self.offsets[None, :] + self.sigma**2 * (ll[candidates[live]][:, None] - best[sc])
        vals[live], ses[live] = self.integrator(upper)
        return vals, ses


# ---------------------------------------------------------------------------
# ML on discrete channels
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DiscreteChannel:
    """Memoryless channel with binary input and transition rows ``W[x, y]``."""

    transition: np.ndarray

    def __post_init__(self):
        W = np.asarray(self.transition, dtype=float)
        if W.ndim != 2 or W.shape[0] != 2 or not np.allclose(W.sum(axis=1), 1.0) or (W < 0).any():
            raise ValueError("transition must be a 2 x B row-stochastic matrix")
        object.__setattr__(self, "transition", W)

    @classmethod
    def bsc(cls, v):
        return cls(np.array([[1 - v, v], [v, 1 - v]]))

    @property
    def outputs(self):
        return self.transition.shape[1]

    def log_prob(self, bits, outputs):
        """``sum_k log W[bits_k, outputs_k]`` along the last axis."""
        with np.errstate(divide="ignore"):
            logW = np.log(self.transition)
        return logW[np.asarray(bits), np.asarray(outputs)].sum(axis=-1)


def _tie_weighted_wins(scores, i, atol):
    """Weight ``1/(l+1)`` if ``i`` is among ``l+1`` co-maximal entries, else 0 (per row)."""
    best = scores.max(axis=-1, keepdims=True)
    with np.errstate(invalid="ignore"):
        at_max = np.isclose(scores, best, rtol=0.0, atol=atol) | (scores == best)
    wins = at_max[..., i]
    return np.where(wins, 1.0 / at_max.sum(axis=-1), 0.0)


def pd_ml_enumerate(y_p, i, code, channel, budget=1 << 22, atol=1e-9):
    """Exact ML success probability on a discrete channel by enumerating suffixes.

    ``y_p`` holds output symbol indices. Codewords tied at the maximal
    likelihood share the decision uniformly.
    """
    y_p = np.asarray(y_p, dtype=np.int64)
    p = y_p.size
    r = code.n - p
    book = code.codebook
    n_out = channel.outputs ** r
    if n_out * book.shape[0] > budget:
        raise ValueError(f"enumeration of {n_out} suffixes x {book.shape[0]} codewords exceeds budget")
    ll_p = channel.log_prob(book[:, :p], y_p[None, :]) if p else np.zeros(book.shape[0])
    suffixes = np.array(list(product(range(channel.outputs), repeat=r)), dtype=np.int64).reshape(n_out, r)
    if r:
        ll_r = channel.log_prob(book[None, :, p:], suffixes[:, None, :])
        prob = np.exp(channel.log_prob(book[i, p:][None, :], suffixes))
    else:
        ll_r = np.zeros((1, book.shape[0]))
        prob = np.ones(1)
    scores = ll_p[None, :] + ll_r
    weight = _tie_weighted_wins(np.where(np.isfinite(scores), scores, -1e300), i, atol)
    # outcomes impossible under c_i carry zero probability
    value = float(np.clip((prob * weight).sum(), 0.0, 1.0))
    return OracleEstimate(value, 0.0, "enumeration")


# ---------------------------------------------------------------------------
# Bounded-distance decoding
# ---------------------------------------------------------------------------

def terror_prob(d_hamming, t, r, v):
    """Vectorized ``P(at most t - d errors among r bits)``; zero when ``d > t``."""
    d = np.asarray(d_hamming)
    k = np.asarray(t) - d
    with np.errstate(invalid="ignore"):
        out = binom.cdf(k, r, v)
    return np.where(k < 0, 0.0, out)


def pd_terror(d_hamming, t, r, v):
    """Success probability of a ``t``-error decoder given ``d_hamming`` prefix errors.

    The remaining ``r`` bits flip independently with probability ``v``.
    """
    if d_hamming > t:
        return OracleEstimate(0.0, 0.0, "binomial_tail")
    value = float(terror_prob(d_hamming, t, r, v))
    return OracleEstimate(min(max(value, 0.0), 1.0), 0.0, "binomial_tail")


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------

def pd_nested_mc(y_p, i, decoder, code, channel, n_inner, rng):
    """Success fraction of ``decoder`` over ``n_inner`` suffix noise draws.

    ``decoder(Y, rng)`` maps full-length received rows to message indices.
    """
    if n_inner < 1:
        raise ValueError("n_inner must be at least 1")
    y_p = np.asarray(y_p, dtype=float)
    p = y_p.size
    x_r = modulate(code.codebook[i, p:])
    Y = np.empty((n_inner, code.n))
    Y[:, :p] = y_p
    Y[:, p:] = x_r + channel.sigma * rng.standard_normal((n_inner, code.n - p))
    hits = int((decoder(Y, rng) == i).sum())
    return mc_estimate(hits, n_inner)


class UnconditionalCache:
    """Write-once map from ``(code, decoder, channel, i)`` keys to estimates.

    Concurrent fillers may compute the same entry twice; the first stored
    value wins so readers always see one consistent estimate.
    """

    def __init__(self):
        self._data = {}
        self._lock = Lock()

    def get(self, key):
        return self._data.get(key)

    def put(self, key, value):
        with self._lock:
            return self._data.setdefault(key, value)

    def __len__(self):
        return len(self._data)


_DEFAULT_CACHE = UnconditionalCache()


def _code_fingerprint(code):
    return (code.n, code.k, code.parity.tobytes())


def pd_unconditional(i, decoder, code, channel, n_samples, rng, cache=_DEFAULT_CACHE,
                     symmetric=True, batch=4096):
    """Monte-Carlo estimate of ``P(D = i | c_i)`` at full length.

    With ``symmetric`` (linear code, decoder commuting with codeword
    translation) the estimate for message 0 serves every ``i``.
    """
    if n_samples < 10_000:
        raise ValueError("n_samples must be at least 10**4")
    target = 0 if symmetric else i
    key = (_code_fingerprint(code), decoder.key, channel.sigma, target, n_samples)
    hit = cache.get(key) if cache is not None else None
    if hit is not None:
        return hit
    x = modulate(code.codebook[target])
    hits = 0
    for start in range(0, n_samples, batch):
        m = min(batch, n_samples - start)
        Y = x + channel.sigma * rng.standard_normal((m, code.n))
        hits += int((decoder(Y, rng) == target).sum())
    est = mc_estimate(hits, n_samples)
    return cache.put(key, est) if cache is not None else est


__all__ = [
    "OracleEstimate", "CollapsedGaussian", "collapse_rows", "pd_ml_awgn", "MlPrefixOracle",
    "DiscreteChannel", "pd_ml_enumerate", "pd_terror", "terror_prob", "pd_nested_mc",
    "pd_unconditional", "UnconditionalCache", "mc_estimate", "prefix_log_likelihoods",
]
