"""Cross-route consistency suites on small codes.

Each suite compares a production route with an independent reference:
brute-force enumeration, exact rational tabulation, or Monte Carlo. Suites
return :class:`SuiteResult` records; ``run_all`` drives them for the CLI.
"""

import time
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import comb

import numpy as np

from . import gf2
from .channel import BiAwgnChannel, bit_flip_prob, channel_llr, hard_quantize, modulate
from .codes import BinaryLinearCode, prefix_parity, valid_message_set
from .decoders import (BoundedDistanceDecoder, MlDecoder, SumProductParams, bitwise_map_oracle,
                       sum_product)
from .mvn import QmcParams
from .oracle import (DiscreteChannel, collapse_rows, pd_ml_awgn, pd_ml_enumerate, pd_nested_mc,
                     pd_terror, pd_unconditional, terror_prob)
from .predictors import CosetStatistic, hamming_to_codewords, stat_np


@dataclass
class SuiteResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self):
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail} ({self.seconds:.2f} s)"


# ---------------------------------------------------------------------------
# Fixture codes
# ---------------------------------------------------------------------------

REPETITION3 = np.array([[1, 1, 0], [0, 1, 1]], dtype=np.uint8)
HAMMING74 = np.array([[1, 1, 0, 1, 1, 0, 0],
                      [1, 0, 1, 1, 0, 1, 0],
                      [0, 1, 1, 1, 0, 0, 1]], dtype=np.uint8)
# cycle-free Tanner graphs
TREE_CODES = (
    np.array([[1, 1, 1]], dtype=np.uint8),
    np.array([[1, 1, 1, 0, 0, 0, 0],
              [0, 0, 1, 1, 1, 0, 0],
              [0, 0, 0, 0, 1, 1, 1]], dtype=np.uint8),
    np.array([[1, 1, 1, 0, 0, 0, 0, 0, 0, 0],
              [0, 0, 1, 1, 1, 0, 0, 0, 0, 0],
              [0, 0, 1, 0, 0, 1, 1, 0, 0, 0],
              [0, 0, 0, 0, 0, 0, 1, 1, 1, 1]], dtype=np.uint8),
)


def random_code(n, k, seed, min_distance=1):
    """Linear code from a random full-rank generator; retries until ``d_min`` is met."""
    rng = np.random.default_rng(seed)
    for _ in range(1000):
        G = rng.integers(0, 2, size=(k, n), dtype=np.uint8)
        if gf2.rank(G) != k:
            continue
        code = BinaryLinearCode.from_parity(gf2.nullspace(G))
        w = code.codebook.sum(axis=1)
        if w[w > 0].min() >= min_distance:
            return code
    raise RuntimeError(f"no [{n},{k}] code with distance {min_distance} from seed {seed}")


# ---------------------------------------------------------------------------
# Independent reference oracles
# ---------------------------------------------------------------------------

def brute_terror(d, t, r, v):
    """``P(at most t - d of r bits flip)`` by summing over all ``2**r`` patterns."""
    if d > t:
        return 0.0
    total = 0.0
    for e in product((0, 1), repeat=r):
        w = sum(e)
        if w <= t - d:
            total += v**w * (1 - v) ** (r - w)
    return total


def tabulate_ml_success(codebook, v, p):
    """Exact ``P(D = i | y_p, c_i)`` on a BSC by rational joint tabulation.

    Returns a dict keyed by ``(y_p, i)`` (``y_p`` a bit tuple). Every full
    output is enumerated; ML ties share the decision equally.
    """
    v = Fraction(v).limit_denominator(10**12)
    book = [tuple(int(b) for b in c) for c in np.asarray(codebook)]
    n = len(book[0])
    table = {}
    for y in product((0, 1), repeat=n):
        dist = [sum(a != b for a, b in zip(c, y)) for c in book]
        best = min(dist)
        winners = [j for j, dj in enumerate(dist) if dj == best] if v < Fraction(1, 2) else list(range(len(book)))
        for i, c in enumerate(book):
            if i not in winners:
                continue
            # probability of the suffix given c_i
            flips = sum(a != b for a, b in zip(c[p:], y[p:]))
            prob = v**flips * (1 - v) ** (n - p - flips)
            key = (y[:p], i)
            table[key] = table.get(key, Fraction(0)) + prob / len(winners)
    for y_p in product((0, 1), repeat=p):
        for i in range(len(book)):
            table.setdefault((y_p, i), Fraction(0))
    return table


def np_direct_terror(y_p, code, messages, channel, t, p_success, truncation=np.inf):
    """Density ratio through the codeword sum with binomial-tail success probabilities."""
    p = len(y_p)
    r = code.n - p
    v = bit_flip_prob(channel)

    def oracle(y, candidates, ll):
        d = hamming_to_codewords(hard_quantize(y)[None], code.codebook[candidates, :p])[0]
        return terror_prob(d, t, r, v)

    return stat_np(y_p, code, messages, channel, oracle, p_success, truncation).value


# ---------------------------------------------------------------------------
# Suites
# ---------------------------------------------------------------------------

def _timed(name, fn):
    start = time.perf_counter()
    passed, detail = fn()
    return SuiteResult(name, bool(passed), detail, time.perf_counter() - start)


def suite_terror():
    def run():
        worst = 0.0
        for t, d, r, v in product(range(4), range(5), range(11), (0.01, 0.1, 0.3)):
            worst = max(worst, abs(pd_terror(d, t, r, v).value - brute_terror(d, t, r, v)))
        return worst <= 1e-12, f"max abs error {worst:.2e} over 660 cases"
    return _timed("binomial tail vs suffix enumeration", run)


def suite_coset(n=14, k=6, p=10, t=1, points=100, seed=3):
    def run():
        code = random_code(n, k, seed)
        messages = valid_message_set(code.k)
        channel = BiAwgnChannel.from_snr(3.0)
        v = bit_flip_prob(channel)
        p_success = float(terror_prob(0, t, n, v))
        stat = CosetStatistic(prefix_parity(code, messages, p), t, n - p, v, p_success)
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(points):
            i = rng.integers(code.size)
            y = modulate(code.codebook[i, :p]) + channel.sigma * rng.standard_normal(p)
            a = stat(channel_llr(y, channel)[None])[0]
            b = np_direct_terror(y, code, messages, channel, t, p_success)
            if a == b:
                continue
            worst = max(worst, abs(np.expm1(a - b)) if np.isfinite(a - b) else np.inf)
        return worst <= 1e-9, f"max relative error {worst:.2e} at {points} points"
    return _timed("coset statistic vs codeword sum", run)


def suite_ml_cdf(n_inner=100_000, points=20, seed=5):
    def run():
        code = random_code(8, 3, seed, min_distance=3)
        channel = BiAwgnChannel.from_snr(5.0)
        p = 5
        decoder = MlDecoder(code, channel)
        rng = np.random.default_rng(seed)
        qmc = QmcParams(n_points=4096, n_shifts=16, seed=seed)
        worst = 0.0
        for _ in range(points):
            i = int(rng.integers(code.size))
            y = modulate(code.codebook[i, :p]) + 2 * channel.sigma * rng.standard_normal(p)
            a = pd_ml_awgn(y, i, collapse_rows(code, i, p, channel), qmc)
            b = pd_nested_mc(y, i, decoder, code, channel, n_inner, rng)
            z = abs(a.value - b.value) / np.hypot(a.std_error, b.std_error)
            worst = max(worst, z)
        return worst <= 3.0, f"largest deviation {worst:.2f} combined std errors at {points} points"
    return _timed("Gaussian orthant vs nested Monte Carlo (ML)", run)


def suite_ml_enumeration(v=0.1):
    def run():
        worst = 0.0
        cases = 0
        for H, p in ((REPETITION3, 1), (REPETITION3, 2), (HAMMING74, 4), (HAMMING74, 5)):
            code = BinaryLinearCode.from_parity(H)
            table = tabulate_ml_success(code.codebook, v, p)
            channel = DiscreteChannel.bsc(v)
            for (y_p, i), exact in table.items():
                got = pd_ml_enumerate(np.array(y_p, dtype=np.int64), i, code, channel).value
                worst = max(worst, abs(got - float(exact)))
                cases += 1
        return worst <= 1e-12, f"max abs error {worst:.2e} over {cases} (y_p, i) pairs"
    return _timed("discrete ML enumeration vs rational tabulation", run)


def suite_tree_map(trials=20, seed=7):
    def run():
        rng = np.random.default_rng(seed)
        params = SumProductParams(max_iterations=30, early_stop_on_zero_syndrome=False, clamp=60.0)
        worst = 0.0
        for H in TREE_CODES:
            book = BinaryLinearCode.from_parity(H).codebook
            llrs = 3.0 * rng.standard_normal((trials, H.shape[1]))
            post, _, _ = sum_product(llrs, H, params)
            for row, q in zip(llrs, post):
                worst = max(worst, np.max(np.abs(q - bitwise_map_oracle(row, book))))
        return worst <= 1e-9, f"max abs LLR error {worst:.2e}"
    return _timed("sum-product vs bitwise MAP on trees", run)


def suite_bd_mc(n_inner=20_000, points=20, seed=11):
    def run():
        code = random_code(12, 4, seed, min_distance=3)
        channel = BiAwgnChannel.from_snr(2.0)
        v = bit_flip_prob(channel)
        t, p = 1, 8
        decoder = BoundedDistanceDecoder(code, t)
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(points):
            i = int(rng.integers(code.size))
            y = modulate(code.codebook[i, :p]) + channel.sigma * rng.standard_normal(p)
            d = int((hard_quantize(y) != code.codebook[i, :p]).sum())
            exact = pd_terror(d, t, code.n - p, v).value
            mc = pd_nested_mc(y, i, decoder, code, channel, n_inner, rng)
            worst = max(worst, abs(exact - mc.value) / mc.std_error)
        uncond = pd_unconditional(0, decoder, code, channel, 100_000, rng, cache=None)
        z_u = abs(uncond.value - terror_prob(0, t, code.n, v)) / uncond.std_error
        ok = worst <= 3.0 and z_u <= 3.0
        return ok, f"largest deviation {worst:.2f} std errors; unconditional {z_u:.2f}"
    return _timed("binomial tail vs nested Monte Carlo (t-error)", run)


SUITES = {
    "terror": suite_terror,
    "coset": suite_coset,
    "ml_cdf": suite_ml_cdf,
    "ml_enumeration": suite_ml_enumeration,
    "tree_map": suite_tree_map,
    "bd_mc": suite_bd_mc,
}


def run_all(names=None, quick=False):
    """Run the named suites (default all); ``quick`` shrinks Monte-Carlo sizes."""
    results = []
    for name in names or SUITES:
        fn = SUITES[name]
        if quick and name == "ml_cdf":
            results.append(fn(n_inner=20_000))
        elif quick and name == "bd_mc":
            results.append(fn(n_inner=5_000))
        else:
            results.append(fn())
    return results


def binomial_pmf_table(r, v):
    """``C(r, w) v^w (1-v)^(r-w)`` for ``w = 0..r`` (helper for reports)."""
    return np.array([comb(r, w) * v**w * (1 - v) ** (r - w) for w in range(r + 1)])
