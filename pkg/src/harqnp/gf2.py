"""Dense GF(2) linear algebra on ``uint8`` arrays.

Matrices are plain 2-D numpy arrays with entries in {0, 1}. Every function
copies its input; callers' arrays are never modified.
"""

import numpy as np


def as_bits(a):
    """Return ``a`` as a ``uint8`` array reduced modulo 2."""
    return (np.asarray(a) % 2).astype(np.uint8)


def rref(m):
    """Reduced row echelon form over GF(2).

    Pivots are chosen at the leftmost available column.

    Returns
    -------
    R : ndarray
        The reduced matrix (same shape as ``m``).
    pivots : list of int
        Pivot column of each nonzero row of ``R``, in row order.
    """
    R = as_bits(m).copy()
    if R.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    rows, cols = R.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(R[r:, c])
        if nz.size == 0:
            continue
        p = r + nz[0]
        if p != r:
            R[[r, p]] = R[[p, r]]
        hits = np.flatnonzero(R[:, c])
        hits = hits[hits != r]
        R[hits] ^= R[r]
        pivots.append(c)
        r += 1
    return R, pivots


def rank(m):
    """Row rank of ``m`` over GF(2)."""
    m = np.asarray(m)
    if m.size == 0:
        return 0
    return len(rref(m)[1])


def nullspace(m):
    """Basis of ``{x : m x = 0}`` as the rows of a ``(cols - rank) x cols`` matrix.

    The basis is systematic on the non-pivot columns: row ``j`` has a single
    one among the free columns, at the ``j``-th free column.
    """
    m = as_bits(m)
    cols = m.shape[1]
    R, pivots = rref(m)
    free = [c for c in range(cols) if c not in set(pivots)]
    basis = np.zeros((len(free), cols), dtype=np.uint8)
    for j, f in enumerate(free):
        basis[j, f] = 1
        for i, p in enumerate(pivots):
            basis[j, p] = R[i, f]
    return basis


def row_basis(m):
    """Rows of the reduced echelon form that span the row space of ``m``."""
    R, pivots = rref(m)
    return R[: len(pivots)]


def matvec(m, x):
    """``m @ x`` over GF(2); ``x`` may be a vector or a batch of row vectors."""
    m = as_bits(m).astype(np.int64)
    x = as_bits(x).astype(np.int64)
    if x.ndim == 1:
        return ((m @ x) % 2).astype(np.uint8)
    return ((x @ m.T) % 2).astype(np.uint8)


def solve(m, s):
    """One solution ``x`` of ``m x = s`` over GF(2), or ``None`` if inconsistent."""
    m = as_bits(m)
    s = as_bits(s).reshape(-1)
    if s.size != m.shape[0]:
        raise ValueError(f"right-hand side has length {s.size}, expected {m.shape[0]}")
    aug = np.hstack([m, s[:, None]])
    R, pivots = rref(aug)
    cols = m.shape[1]
    if cols in pivots:
        return None
    x = np.zeros(cols, dtype=np.uint8)
    for i, p in enumerate(pivots):
        x[p] = R[i, cols]
    return x


def span(basis):
    """All ``2**len(basis)`` GF(2) combinations of the rows of ``basis``."""
    basis = as_bits(basis)
    dim, n = basis.shape
    coeffs = int_to_bits(np.arange(2**dim), dim)
    return matvec(basis.T, coeffs) if dim else np.zeros((1, n), dtype=np.uint8)


def int_to_bits(values, width):
    """Big-endian bit expansion: ``values`` (scalar or array) to ``(..., width)`` bits."""
    values = np.asarray(values, dtype=np.int64)
    shifts = np.arange(width - 1, -1, -1, dtype=np.int64)
    return ((values[..., None] >> shifts) & 1).astype(np.uint8)


def bits_to_int(bits):
    """Inverse of :func:`int_to_bits` along the last axis."""
    bits = np.asarray(bits, dtype=np.int64)
    width = bits.shape[-1]
    weights = np.left_shift(1, np.arange(width - 1, -1, -1, dtype=np.int64))
    return bits @ weights
