# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled GF(2) elimination kernel.

Same algorithm and outputs as ``_gf2py``; rows are packed into 64-bit
little-endian words for the inner loops.
"""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

cdef extern from *:
    int __builtin_ctzll(unsigned long long) nogil

BACKEND = "cython"


def _pack(rows, Py_ssize_t nwords):
    nbytes = nwords * 8
    buf = b"".join([r.to_bytes(nbytes, "little") for r in rows])
    arr = np.frombuffer(buf, dtype="<u8").reshape(len(rows), nwords).copy()
    return arr


cdef inline int64_t _lowbit(uint64_t[:, ::1] w, Py_ssize_t i, Py_ssize_t ncols) nogil:
    cdef Py_ssize_t full = ncols >> 6
    cdef Py_ssize_t rem = ncols & 63
    cdef Py_ssize_t j
    cdef uint64_t word
    for j in range(full):
        word = w[i, j]
        if word:
            return (j << 6) + __builtin_ctzll(word)
    if rem:
        word = w[i, full] & ((<uint64_t>1 << rem) - 1)
        if word:
            return (full << 6) + __builtin_ctzll(word)
    return -1


cdef inline void _xor_row(uint64_t[:, ::1] w, Py_ssize_t dst, Py_ssize_t src,
                          Py_ssize_t start, Py_ssize_t nwords) nogil:
    cdef Py_ssize_t j
    for j in range(start, nwords):
        w[dst, j] ^= w[src, j]


def rref(rows, Py_ssize_t ncols):
    cdef Py_ssize_t nrows = len(rows)
    if nrows == 0:
        return [], []
    cdef Py_ssize_t nbits = max(max(r.bit_length() for r in rows), ncols, 1)
    cdef Py_ssize_t nwords = (nbits + 63) >> 6
    cdef cnp.ndarray arr = _pack(rows, nwords)
    cdef uint64_t[:, ::1] w = arr
    cdef int64_t[::1] table = np.full(max(ncols, 1), -1, dtype=np.int64)
    cdef list zero_rows = []
    cdef Py_ssize_t i, q, idx, n_piv
    cdef int64_t p, pr
    with nogil:
        for i in range(nrows):
            while True:
                p = _lowbit(w, i, ncols)
                if p < 0:
                    break
                pr = table[p]
                if pr < 0:
                    table[p] = i
                    break
                _xor_row(w, i, pr, p >> 6, nwords)
    pivots = [c for c in range(ncols) if table[c] >= 0]
    n_piv = len(pivots)
    cdef int64_t[::1] piv = np.asarray(pivots, dtype=np.int64) if n_piv else np.zeros(1, dtype=np.int64)
    cdef int64_t[::1] prow = np.asarray([table[c] for c in pivots], dtype=np.int64) if n_piv else np.zeros(1, dtype=np.int64)
    cdef int64_t pcol, r_src, r_dst
    with nogil:
        for idx in range(n_piv - 1, -1, -1):
            pcol = piv[idx]
            r_src = prow[idx]
            for q in range(idx):
                r_dst = prow[q]
                if (w[r_dst, pcol >> 6] >> (pcol & 63)) & 1:
                    _xor_row(w, r_dst, r_src, pcol >> 6, nwords)
    is_pivot_row = np.zeros(nrows, dtype=bool)
    for r_src in prow[:n_piv]:
        is_pivot_row[r_src] = True
    out = []
    for idx in range(n_piv):
        out.append(int.from_bytes(arr[prow[idx]].tobytes(), "little"))
    for i in range(nrows):
        if not is_pivot_row[i]:
            out.append(int.from_bytes(arr[i].tobytes(), "little"))
    return out, pivots


def independent_rows(rows, Py_ssize_t ncols):
    cdef Py_ssize_t nrows = len(rows)
    if nrows == 0 or ncols == 0:
        return []
    cdef Py_ssize_t nwords = (ncols + 63) >> 6
    mask = (1 << int(ncols)) - 1
    cdef cnp.ndarray arr = _pack([r & mask for r in rows], nwords)
    cdef uint64_t[:, ::1] w = arr
    cdef int64_t[::1] table = np.full(ncols, -1, dtype=np.int64)
    cdef int64_t[::1] keep = np.zeros(nrows, dtype=np.int64)
    cdef Py_ssize_t i, nkeep = 0
    cdef int64_t p, pr
    with nogil:
        for i in range(nrows):
            while True:
                p = _lowbit(w, i, ncols)
                if p < 0:
                    break
                pr = table[p]
                if pr < 0:
                    table[p] = i
                    keep[nkeep] = i
                    nkeep += 1
                    break
                _xor_row(w, i, pr, p >> 6, nwords)
    return [int(keep[i]) for i in range(nkeep)]
