"""Binary linear codes: LDPC construction, encoding, CRC-valid message sets, cosets."""

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations

import numpy as np

from . import gf2


class ConstructionError(RuntimeError):
    """Raised when a regular LDPC matrix cannot be built within the retry budget."""


class CosetTooLarge(ValueError):
    """Raised when a coset has more members than the caller allows."""


# ---------------------------------------------------------------------------
# LDPC construction
# ---------------------------------------------------------------------------

def _peg(n, col_weight, row_weight, rng):
    """Progressive edge growth with a hard row-weight cap. Returns None if stuck."""
    m = n * col_weight // row_weight
    H = np.zeros((m, n), dtype=np.uint8)
    row_deg = np.zeros(m, dtype=int)
    for v in range(n):
        for e in range(col_weight):
            open_rows = (row_deg < row_weight) & (H[:, v] == 0)
            if not open_rows.any():
                return None
            if e == 0:
                pool = np.flatnonzero(open_rows)
            else:
                reached = H[:, v].astype(bool)
                frontier = reached.copy()
                while True:
                    vars_next = H[frontier].any(axis=0)
                    checks_next = H[:, vars_next].any(axis=1) & ~reached
                    unreached = open_rows & ~(reached | checks_next)
                    if unreached.any() or not checks_next.any():
                        break
                    reached |= checks_next
                    frontier = checks_next
                pool = np.flatnonzero(unreached if unreached.any() else open_rows & ~reached)
                if pool.size == 0:
                    pool = np.flatnonzero(open_rows)
            degs = row_deg[pool]
            pool = pool[degs == degs.min()]
            c = pool[rng.integers(pool.size)]
            H[c, v] = 1
            row_deg[c] += 1
    return H


def _cycle_cost(H):
    overlap = H.T.astype(np.int64) @ H.astype(np.int64)
    np.fill_diagonal(overlap, 0)
    four_cycles = int((overlap * (overlap - 1) // 2).sum() // 2)
    # identical columns give weight-2 codewords
    duplicates = int((overlap >= H.sum(axis=0).max()).sum() // 2)
    return four_cycles + 1000 * duplicates


def _gallager(n, col_weight, row_weight, rng, sweeps=3000):
    """Gallager bands with a seeded column-swap search that lowers the 4-cycle count."""
    m_band = n // row_weight
    base = np.zeros((m_band, n), dtype=np.uint8)
    for r in range(m_band):
        base[r, r * row_weight:(r + 1) * row_weight] = 1
    perms = [np.arange(n)] + [rng.permutation(n) for _ in range(col_weight - 1)]

    def assemble():
        return np.vstack([base[:, p] for p in perms])

    H = assemble()
    cost = _cycle_cost(H)
    if col_weight == 1:
        return H
    for _ in range(sweeps):
        b = rng.integers(1, col_weight)
        i, j = rng.choice(n, 2, replace=False)
        perms[b][[i, j]] = perms[b][[j, i]]
        candidate = assemble()
        c = _cycle_cost(candidate)
        if c <= cost:
            H, cost = candidate, c
        else:
            perms[b][[i, j]] = perms[b][[j, i]]
    return H


def construct_regular_ldpc(n, col_weight, row_weight, seed, target_rank=None,
                           method="peg", max_retries=64):
    """Build an ``(n*col_weight/row_weight) x n`` parity-check matrix.

    Every column has weight ``col_weight`` and every row ``row_weight``.

    Parameters
    ----------
    method : {"peg", "gallager"}
        ``"peg"`` grows edges greedily so that short cycles are avoided when
        possible. ``"gallager"`` stacks ``col_weight`` permuted bands; each
        band's rows sum to the all-one word, so the rank is at most
        ``m - col_weight + 1``.
    target_rank : int, optional
        Retry with derived seeds until ``rank(H) == target_rank``.

    Raises
    ------
    ConstructionError
        If no matrix satisfying the constraints is found within ``max_retries``.
    """
    if (n * col_weight) % row_weight:
        raise ValueError("n * col_weight must be divisible by row_weight")
    if method not in ("peg", "gallager"):
        raise ValueError(f"unknown construction method {method!r}")
    if method == "gallager" and n % row_weight:
        raise ValueError("Gallager bands need n divisible by row_weight")
    for attempt in range(max_retries):
        rng = np.random.default_rng([seed, attempt])
        if method == "peg":
            H = _peg(n, col_weight, row_weight, rng)
        else:
            H = _gallager(n, col_weight, row_weight, rng)
        if H is None:
            continue
        if not ((H.sum(axis=0) == col_weight).all() and (H.sum(axis=1) == row_weight).all()):
            continue
        if target_rank is not None and gf2.rank(H) != target_rank:
            continue
        return H
    raise ConstructionError(
        f"no ({col_weight},{row_weight})-regular matrix with n={n}"
        + (f" and rank {target_rank}" if target_rank is not None else "")
        + f" after {max_retries} attempts"
    )


def rank_gf2(m):
    """GF(2) row rank; the input is left unchanged."""
    return gf2.rank(m)


def derive_generator(parity):
    """Systematic generator for the null space of ``parity``.

    Returns
    -------
    generator : ndarray, shape (k, n)
        ``generator[:, perm[:k]]`` is the identity, i.e. ``G[:, perm] = [I_k | P]``.
    perm : ndarray
        Column permutation: information positions first, then pivot positions.
    """
    parity = gf2.as_bits(parity)
    if not parity.any():
        raise ValueError("parity matrix must be nonzero")
    n = parity.shape[1]
    _, pivots = gf2.rref(parity)
    G = gf2.nullspace(parity)
    free = [c for c in range(n) if c not in set(pivots)]
    perm = np.array(free + list(pivots), dtype=np.int64)
    return G, perm


@dataclass(frozen=True, eq=False)
class BinaryLinearCode:
    """Linear code given by its parity-check matrix, with a systematic encoder.

    Message indices are 0-based; index ``m`` is written big-endian into the
    ``k`` information bits.
    """

    parity: np.ndarray
    generator: np.ndarray
    column_permutation: np.ndarray

    @classmethod
    def from_parity(cls, parity):
        parity = gf2.as_bits(parity)
        G, perm = derive_generator(parity)
        return cls(parity, G, perm)

    @property
    def n(self):
        return self.parity.shape[1]

    @property
    def k(self):
        return self.generator.shape[0]

    @property
    def size(self):
        return 2**self.k

    @property
    def info_positions(self):
        return self.column_permutation[: self.k]

    def encode(self, message_index):
        if not 0 <= message_index < self.size:
            raise IndexError(f"message index {message_index} outside [0, {self.size})")
        u = gf2.int_to_bits(message_index, self.k)
        return gf2.matvec(self.generator.T, u)

    def encode_bits(self, u):
        return gf2.matvec(self.generator.T, u)

    @cached_property
    def codebook(self):
        """All ``2**k`` codewords, row ``m`` encoding message ``m``."""
        if self.k > 22:
            raise MemoryError(f"refusing to enumerate 2**{self.k} codewords")
        u = gf2.int_to_bits(np.arange(self.size), self.k)
        book = gf2.matvec(self.generator.T, u)
        book.setflags(write=False)
        return book

    def message_of(self, words):
        """Message index of codeword(s); only meaningful for words in the code."""
        words = np.asarray(words)
        return gf2.bits_to_int(words[..., self.info_positions])

    def is_codeword(self, words):
        s = gf2.matvec(self.parity, np.atleast_2d(words))
        return ~s.any(axis=-1)


# ---------------------------------------------------------------------------
# CRC and valid message sets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CrcSpec:
    """Generator polynomial, coefficients listed constant term first."""

    poly: tuple

    def __post_init__(self):
        poly = tuple(int(b) for b in self.poly)
        if len(poly) < 2 or poly[0] != 1 or poly[-1] != 1:
            raise ValueError("CRC polynomial needs unit constant and leading coefficients")
        object.__setattr__(self, "poly", poly)

    @property
    def degree(self):
        return len(self.poly) - 1

    @classmethod
    def parse(cls, text):
        """Parse ``"1 + x^2 + x^3 + x^4"`` style polynomials."""
        coeffs = {}
        for term in text.replace(" ", "").split("+"):
            if term == "1":
                power = 0
            elif term == "x":
                power = 1
            elif term.startswith("x^"):
                power = int(term[2:])
            else:
                raise ValueError(f"cannot parse polynomial term {term!r}")
            coeffs[power] = coeffs.get(power, 0) ^ 1
        deg = max(coeffs)
        return cls(tuple(coeffs.get(i, 0) for i in range(deg + 1)))

    def __str__(self):
        terms = ["1" if i == 0 else "x" if i == 1 else f"x^{i}"
                 for i, c in enumerate(self.poly) if c]
        return " + ".join(terms)


def crc_remainder(data, crc):
    """Check bits of ``data`` (first bit = highest power) under ``crc``.

    Computes ``data(x) * x**degree mod g(x)`` and returns its ``degree``
    coefficients, highest power first, so ``data || check`` is divisible by g.
    """
    data = gf2.as_bits(data).reshape(-1)
    if data.size == 0:
        raise ValueError("data must be nonempty")
    d = crc.degree
    # divisor, highest power first
    g = np.array(crc.poly[::-1], dtype=np.uint8)
    reg = np.concatenate([data, np.zeros(d, dtype=np.uint8)])
    for i in range(data.size):
        if reg[i]:
            reg[i:i + d + 1] ^= g
    return reg[-d:].copy()


def crc_check(word, crc):
    """True if ``word`` (data followed by check bits) is divisible by the CRC polynomial."""
    word = gf2.as_bits(word).reshape(-1)
    d = crc.degree
    return not (crc_remainder(word[:-d], crc) ^ word[-d:]).any()


@dataclass(frozen=True, eq=False)
class MessageSet:
    """The full index range ``[0, 2**k)`` and the sorted subset of valid messages."""

    k: int
    valid: np.ndarray
    crc: CrcSpec = None
    _mask: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        mask = np.zeros(2**self.k, dtype=bool)
        mask[self.valid] = True
        object.__setattr__(self, "_mask", mask)

    @property
    def full_size(self):
        return 2**self.k

    def __len__(self):
        return len(self.valid)

    def contains(self, index):
        index = np.asarray(index)
        inside = (index >= 0) & (index < self.full_size)
        return inside & self._mask[np.clip(index, 0, self.full_size - 1)]


def valid_message_set(k, crc=None):
    """Messages whose last ``crc.degree`` bits are the CRC of the leading bits."""
    if crc is None:
        return MessageSet(k, np.arange(2**k), None)
    d = crc.degree
    if k <= d:
        raise ValueError(f"k={k} must exceed the CRC degree {d}")
    data = gf2.int_to_bits(np.arange(2 ** (k - d)), k - d)
    checks = crc_parity_matrix(k - d, crc)
    words = np.hstack([data, gf2.matvec(checks, data)])
    valid = np.sort(gf2.bits_to_int(words))
    return MessageSet(k, valid, crc)


def crc_parity_matrix(data_len, crc):
    """Matrix ``A`` with ``crc_remainder(x) = A x``; the CRC has no init value so it is linear."""
    cols = [crc_remainder(np.eye(data_len, dtype=np.uint8)[j], crc) for j in range(data_len)]
    return np.array(cols, dtype=np.uint8).T


def valid_generator(code, messages):
    """Generator rows of the valid subcode ``{c_m : m valid}``."""
    if messages.crc is None:
        return code.generator.copy()
    d = messages.crc.degree
    data_len = code.k - d
    eye = np.eye(data_len, dtype=np.uint8)
    u = np.hstack([eye, gf2.matvec(crc_parity_matrix(data_len, messages.crc), eye)])
    return gf2.matvec(code.generator.T, u)


# ---------------------------------------------------------------------------
# Syndromes and cosets
# ---------------------------------------------------------------------------

def prefix_parity(code, messages, p):
    """Parity-check matrix of the valid subcode restricted to its first ``p`` positions.

    It carries both the code's own checks and the CRC constraints.
    Returns a full-row-rank ``(p - rank) x p`` matrix, possibly with zero rows.
    """
    Gp = valid_generator(code, messages)[:, :p]
    return gf2.nullspace(Gp)


def syndrome(parity_prefix, hard_bits):
    hard_bits = gf2.as_bits(hard_bits)
    if hard_bits.shape[-1] != parity_prefix.shape[1]:
        raise ValueError(
            f"hard_bits has length {hard_bits.shape[-1]}, parity has {parity_prefix.shape[1]} columns"
        )
    return gf2.matvec(parity_prefix, hard_bits)


@dataclass(frozen=True, eq=False)
class Coset:
    syndrome: np.ndarray
    patterns: np.ndarray


def enumerate_coset(parity_prefix, s, max_patterns=1 << 16):
    """All ``e`` with ``H_p e = s``; an empty coset if ``s`` is not reachable."""
    H = gf2.as_bits(parity_prefix)
    s = gf2.as_bits(s).reshape(-1)
    p = H.shape[1]
    dim = p - gf2.rank(H) if H.size else p
    if 2**dim > max_patterns:
        raise CosetTooLarge(f"coset has 2**{dim} members, limit is {max_patterns}")
    if H.shape[0] == 0:
        return Coset(s, gf2.span(np.eye(p, dtype=np.uint8)))
    x0 = gf2.solve(H, s)
    if x0 is None:
        return Coset(s, np.zeros((0, p), dtype=np.uint8))
    members = gf2.span(gf2.nullspace(H)) ^ x0
    return Coset(s, members)


def low_weight_patterns(p, max_weight):
    """All length-``p`` patterns of weight at most ``max_weight``, lightest first."""
    rows = []
    for w in range(min(max_weight, p) + 1):
        for support in combinations(range(p), w):
            e = np.zeros(p, dtype=np.uint8)
            e[list(support)] = 1
            rows.append(e)
    return np.array(rows, dtype=np.uint8).reshape(-1, p)
