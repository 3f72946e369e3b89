"""Independent reference arithmetic: dense numpy GF(2) elimination.

Shares no code with the package's kernels; used to compute the frozen
[derived] values and to cross-check the bitset routines.
"""

import numpy as np


def to_dense(rows, ncols):
    a = np.zeros((len(rows), ncols), dtype=np.uint8)
    for i, r in enumerate(rows):
        for j in range(ncols):
            a[i, j] = (r >> j) & 1
    return a


def rank(a):
    a = a.copy() % 2
    r = 0
    nrows, ncols = a.shape
    for c in range(ncols):
        piv = None
        for i in range(r, nrows):
            if a[i, c]:
                piv = i
                break
        if piv is None:
            continue
        a[[r, piv]] = a[[piv, r]]
        for i in range(nrows):
            if i != r and a[i, c]:
                a[i] ^= a[r]
        r += 1
        if r == nrows:
            break
    return r


def in_row_space(a, v):
    return rank(np.vstack([a, v[None, :]])) == rank(a)
