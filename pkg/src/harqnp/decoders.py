"""Maximum-likelihood, bounded-distance and sum-product decoders.

Failure outputs use the sentinel index ``2**k``, which is never a valid message.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import logsumexp

from . import gf2
from .channel import channel_llr, hard_quantize, prefix_log_likelihoods


@dataclass(frozen=True, eq=False)
class DecodeResult:
    message_index: int
    is_valid: bool
    tie_count: int = 1
    posterior_llrs: np.ndarray = None
    iterations: int = None


@dataclass(frozen=True)
class SumProductParams:
    max_iterations: int = 20
    early_stop_on_zero_syndrome: bool = True
    clamp: float = 30.0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


def _validity(index, messages):
    return bool(messages.contains(index)) if messages is not None else True


# ---------------------------------------------------------------------------
# Maximum likelihood
# ---------------------------------------------------------------------------

def break_ties(scores, rng, atol=0.0):
    """Row-wise argmax with uniform random tie-breaking.

    Returns ``(index, tie_count)`` arrays. ``rng`` is a single generator or a
    sequence with one generator per row; it is only consulted on ties.
    """
    scores = np.atleast_2d(scores)
    best = scores.max(axis=1, keepdims=True)
    at_max = scores >= best - atol
    counts = at_max.sum(axis=1)
    index = scores.argmax(axis=1)
    for t in np.flatnonzero(counts > 1):
        gen = rng[t] if isinstance(rng, (list, tuple)) else rng
        choices = np.flatnonzero(at_max[t])
        index[t] = choices[gen.integers(choices.size)]
    return index, counts


def ml_decode(y, code, channel, rng, messages=None):
    """ML decision over all ``2**k`` codewords scoring the first ``len(y)`` symbols."""
    y = np.asarray(y, dtype=float)
    if y.shape[-1] > code.n:
        raise ValueError("received vector longer than the code")
    scores = prefix_log_likelihoods(y[None], code.codebook, channel)
    index, counts = break_ties(scores, rng)
    i = int(index[0])
    return DecodeResult(i, _validity(i, messages), int(counts[0]))


# ---------------------------------------------------------------------------
# Hard-decision decoders
# ---------------------------------------------------------------------------

@lru_cache(maxsize=32)
def _min_distance_cached(book_bytes, shape):
    book = np.frombuffer(book_bytes, dtype=np.uint8).reshape(shape)
    w = book.sum(axis=1)
    w = w[w > 0]
    return int(w.min()) if w.size else shape[1] + 1


def minimum_distance(codebook):
    """Minimum Hamming weight over the nonzero rows of a linear codebook."""
    book = np.ascontiguousarray(codebook, dtype=np.uint8)
    return _min_distance_cached(book.tobytes(), book.shape)


def bounded_distance_decode(hard_bits, code, t, messages=None, check_distance=True):
    """Return the unique codeword within Hamming distance ``t``, else a failure.

    ``hard_bits`` may be a prefix; only its positions are compared. Zero or
    several codewords inside the ball both count as a failure.
    """
    hard_bits = gf2.as_bits(hard_bits).reshape(-1)
    book = code.codebook
    if check_distance and 2 * t + 1 > minimum_distance(book):
        raise ValueError(f"t={t} exceeds the correction radius of the code")
    dist = (book[:, : hard_bits.size] != hard_bits).sum(axis=1)
    inside = np.flatnonzero(dist <= t)
    if inside.size != 1:
        return DecodeResult(code.size, False)
    i = int(inside[0])
    return DecodeResult(i, _validity(i, messages))


class SyndromeDecoder:
    """Coset-leader table decoder correcting up to ``t`` errors.

    ``parity`` is any parity-check matrix of the target code. Syndromes whose
    lightest coset members exceed weight ``t`` are failures. When several
    members tie for the lightest, ``ambiguous="fail"`` declares a failure and
    ``ambiguous="first"`` corrects with the first in lexicographic order.
    """

    def __init__(self, parity, t, ambiguous="fail"):
        from .codes import low_weight_patterns

        if ambiguous not in ("fail", "first"):
            raise ValueError("ambiguous must be 'fail' or 'first'")
        self.parity = gf2.row_basis(parity) if np.asarray(parity).any() else \
            np.zeros((0, np.asarray(parity).shape[1]), dtype=np.uint8)
        self.t = t
        self.ambiguous = ambiguous
        rows, n = self.parity.shape
        if rows > 24:
            raise MemoryError("syndrome table would exceed 2**24 entries")
        self.n = n
        patterns = low_weight_patterns(n, t)
        weights = patterns.sum(axis=1)
        keys = gf2.bits_to_int(gf2.matvec(self.parity, patterns)) if rows else np.zeros(len(patterns), int)
        table = np.full(2**rows, -1, dtype=np.int64)
        leader_weight = np.full(2**rows, np.iinfo(np.int64).max, dtype=np.int64)
        ties = np.zeros(2**rows, dtype=bool)
        for idx, (key, w) in enumerate(zip(keys, weights)):
            if w < leader_weight[key]:
                leader_weight[key] = w
                table[key] = idx
            elif w == leader_weight[key]:
                ties[key] = True
        if ambiguous == "fail":
            table[ties] = -1
        self._patterns = patterns
        self._table = table
        self.leader_weight = np.where(leader_weight == np.iinfo(np.int64).max, -1, leader_weight)

    def keys(self, hard):
        hard = np.atleast_2d(gf2.as_bits(hard))
        if self.parity.shape[0] == 0:
            return np.zeros(hard.shape[0], dtype=np.int64)
        return gf2.bits_to_int(gf2.matvec(self.parity, hard))

    def decode(self, hard):
        """Corrected words (rows) and a success mask."""
        hard = np.atleast_2d(gf2.as_bits(hard))
        entry = self._table[self.keys(hard)]
        ok = entry >= 0
        out = hard.copy()
        out[ok] ^= self._patterns[entry[ok]]
        return out, ok


# ---------------------------------------------------------------------------
# Sum-product
# ---------------------------------------------------------------------------

class _TannerGraph:
    def __init__(self, parity):
        H = gf2.as_bits(parity)
        self.m, self.n = H.shape
        rows, cols = np.nonzero(H)
        self.edge_row = rows
        self.edge_col = cols
        self.E = rows.size
        self.check_edges = self._padded(rows, self.m)
        self.var_edges = self._padded(cols, self.n)

    @staticmethod
    def _padded(owner, count):
        deg = np.bincount(owner, minlength=count)
        width = max(int(deg.max()) if deg.size else 0, 1)
        table = np.full((count, width), -1, dtype=np.int64)
        fill = np.zeros(count, dtype=np.int64)
        for e, o in enumerate(owner):
            table[o, fill[o]] = e
            fill[o] += 1
        return table


@lru_cache(maxsize=64)
def _graph(key, shape):
    H = np.frombuffer(key, dtype=np.uint8).reshape(shape)
    return _TannerGraph(H)


def tanner_graph(parity):
    H = np.ascontiguousarray(gf2.as_bits(parity))
    return _graph(H.tobytes(), H.shape)


def _gather(values, table, pad):
    padded = np.concatenate([values, np.full(values.shape[:-1] + (1,), pad)], axis=-1)
    return padded[..., table]


def sum_product(llrs, parity, params=SumProductParams()):
    """Flooding sum-product on a batch of LLR rows.

    LLRs follow the ``log P(y|1)/P(y|0)`` sign convention on input and output.

    Returns
    -------
    posterior : ndarray, shape (T, n)
    iterations : ndarray of int, shape (T,)
    satisfied : ndarray of bool, shape (T,)
        Zero syndrome after the final hard decision.
    """
    L = -np.atleast_2d(np.asarray(llrs, dtype=float))
    T, n = L.shape
    g = tanner_graph(parity)
    if g.n != n:
        raise ValueError(f"LLR length {n} does not match parity columns {g.n}")
    clamp = params.clamp
    tmax = np.tanh(clamp / 2)
    post = L.copy()
    iterations = np.zeros(T, dtype=np.int64)
    if g.E == 0:
        return -post, iterations, np.ones(T, dtype=bool)
    active = np.ones(T, dtype=bool)
    msg_vc = np.clip(L[:, g.edge_col], -clamp, clamp)
    for _ in range(params.max_iterations):
        rows = np.flatnonzero(active)
        if rows.size == 0:
            break
        th = np.tanh(msg_vc[rows] / 2)
        block = _gather(th, g.check_edges, 1.0)
        left = np.cumprod(np.concatenate([np.ones(block.shape[:-1] + (1,)), block[..., :-1]], axis=-1), axis=-1)
        right = np.cumprod(np.concatenate([np.ones(block.shape[:-1] + (1,)), block[..., :0:-1]], axis=-1), axis=-1)[..., ::-1]
        excl = np.clip(left * right, -tmax, tmax)
        msg_cv = np.empty((rows.size, g.E))
        valid = g.check_edges >= 0
        msg_cv[:, g.check_edges[valid]] = 2 * np.arctanh(excl[:, valid])
        incoming = _gather(msg_cv, g.var_edges, 0.0).sum(axis=-1)
        p_rows = L[rows] + incoming
        post[rows] = p_rows
        msg_vc[rows] = np.clip(p_rows[:, g.edge_col] - msg_cv, -clamp, clamp)
        iterations[rows] += 1
        if params.early_stop_on_zero_syndrome:
            hard = (p_rows < 0).astype(np.uint8)
            done = ~gf2.matvec(parity, hard).any(axis=1)
            active[rows[done]] = False
    hard = (post < 0).astype(np.uint8)
    satisfied = ~gf2.matvec(parity, hard).any(axis=1)
    return -post, iterations, satisfied


def sum_product_decode(llrs, parity, params=SumProductParams(), code=None, messages=None):
    """Decode one LLR vector; maps the result to a message when ``code`` is given."""
    post, iters, ok = sum_product(np.asarray(llrs)[None], parity, params)
    post, iters, ok = post[0], int(iters[0]), bool(ok[0])
    sentinel = code.size if code is not None else -1
    if not ok or code is None:
        return DecodeResult(sentinel if not ok else -1, False, posterior_llrs=post, iterations=iters)
    hard = (post > 0).astype(np.uint8)
    i = int(code.message_of(hard))
    return DecodeResult(i, _validity(i, messages), posterior_llrs=post, iterations=iters)


def bitwise_map_oracle(llrs, codebook):
    """Exact per-bit posterior LLRs by summation over ``codebook`` (log domain)."""
    codebook = np.asarray(codebook, dtype=np.uint8)
    if codebook.shape[0] > 2**20:
        raise ValueError("codebook too large for exhaustive summation")
    llrs = np.asarray(llrs, dtype=float)
    weights = codebook @ llrs
    out = np.empty(codebook.shape[1])
    for k in range(codebook.shape[1]):
        ones = codebook[:, k] == 1
        num = logsumexp(weights[ones]) if ones.any() else -np.inf
        den = logsumexp(weights[~ones]) if (~ones).any() else -np.inf
        out[k] = num - den
    return out


# ---------------------------------------------------------------------------
# Batch decoders: callables mapping received rows to message indices
# ---------------------------------------------------------------------------

class MlDecoder:
    """ML over the full codebook; ties broken with ``rng`` (one or one per row)."""

    family = "ml"

    def __init__(self, code, channel):
        self.code = code
        self.channel = channel
        self.key = ("ml",)

    def scores(self, Y):
        return prefix_log_likelihoods(Y, self.code.codebook, self.channel)

    def __call__(self, Y, rng):
        index, _ = break_ties(self.scores(Y), rng)
        return index


class BoundedDistanceDecoder:
    """Hard-decision decoder correcting up to ``t`` errors of the full code."""

    family = "bd"

    def __init__(self, code, t):
        if 2 * t + 1 > minimum_distance(code.codebook):
            raise ValueError(f"t={t} exceeds the correction radius of the code")
        self.code = code
        self.t = t
        self._syndrome = SyndromeDecoder(code.parity, t)
        self.key = ("bd", t)

    def __call__(self, Y, rng=None):
        words, ok = self._syndrome.decode(hard_quantize(Y))
        return np.where(ok, self.code.message_of(words), self.code.size)


class SumProductDecoder:
    """Sum-product on the code's parity-check matrix; failures give ``2**k``."""

    family = "sp"

    def __init__(self, code, channel, params=SumProductParams()):
        self.code = code
        self.channel = channel
        self.params = params
        self.key = ("sp", params.max_iterations, params.early_stop_on_zero_syndrome, params.clamp)

    def __call__(self, Y, rng=None):
        post, _, ok = sum_product(channel_llr(Y, self.channel), self.code.parity, self.params)
        words = (post > 0).astype(np.uint8)
        return np.where(ok, self.code.message_of(words), self.code.size)


__all__ = [
    "DecodeResult", "SumProductParams", "ml_decode", "break_ties",
    "bounded_distance_decode", "SyndromeDecoder", "sum_product", "sum_product_decode",
    "bitwise_map_oracle", "minimum_distance", "MlDecoder", "BoundedDistanceDecoder",
    "SumProductDecoder",
]
