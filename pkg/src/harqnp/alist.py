"""MacKay alist format for sparse parity-check matrices.

Layout: ``n m``; max column and row weights; the n column weights; the m row
weights; then one line per column with its 1-based row indices and one line
per row with its 1-based column indices. Index lines are zero-padded to the
maximum weight.
"""

import numpy as np


def dumps(H):
    H = np.asarray(H) % 2
    m, n = H.shape
    col_w = H.sum(axis=0).astype(int)
    row_w = H.sum(axis=1).astype(int)
    max_c = int(col_w.max()) if n else 0
    max_r = int(row_w.max()) if m else 0
    lines = [f"{n} {m}", f"{max_c} {max_r}",
             " ".join(map(str, col_w)), " ".join(map(str, row_w))]
    for j in range(n):
        idx = list(np.flatnonzero(H[:, j]) + 1) + [0] * (max_c - col_w[j])
        lines.append(" ".join(map(str, idx)))
    for i in range(m):
        idx = list(np.flatnonzero(H[i]) + 1) + [0] * (max_r - row_w[i])
        lines.append(" ".join(map(str, idx)))
    return "\n".join(lines) + "\n"


def loads(text):
    rows = [line.split() for line in text.strip().splitlines() if line.strip()]
    n, m = int(rows[0][0]), int(rows[0][1])
    col_w = [int(x) for x in rows[2]]
    row_w = [int(x) for x in rows[3]]
    if len(col_w) != n or len(row_w) != m:
        raise ValueError("alist weight lines do not match the declared dimensions")
    H = np.zeros((m, n), dtype=np.uint8)
    for j in range(n):
        for i in rows[4 + j]:
            if int(i):
                H[int(i) - 1, j] = 1
    check = np.zeros_like(H)
    for i in range(m):
        for j in rows[4 + n + i]:
            if int(j):
                check[i, int(j) - 1] = 1
    if not np.array_equal(H, check):
        raise ValueError("alist column and row lists disagree")
    if list(H.sum(axis=0)) != col_w or list(H.sum(axis=1)) != row_w:
        raise ValueError("alist weights disagree with the index lists")
    return H


def write(path, H):
    with open(path, "w") as fh:
        fh.write(dumps(H))


def read(path):
    with open(path) as fh:
        return loads(fh.read())
