"""Bit-packed linear algebra over Z_2 with labeled coordinates.

Vectors are Python ints (bit ``i`` is coordinate ``basis.labels[i]``). The
elimination kernel is the compiled ``_gf2kernel`` when it imports and the
pure-Python ``_gf2py`` otherwise; set ``ZEROLESS_PURE_PYTHON=1`` to force the
fallback. Both kernels produce identical output.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence

from . import _gf2py

if os.environ.get("ZEROLESS_PURE_PYTHON"):
    _kernel = _gf2py
else:
    try:
        from . import _gf2kernel as _kernel
    except ImportError:  # extension not built
        _kernel = _gf2py

BACKEND = _kernel.BACKEND


class BasisMismatch(ValueError):
    """Operands live over different coordinate systems."""


class DimensionMismatch(ValueError):
    pass


def use_backend(name: str) -> str:
    """Switch the elimination kernel ('python' or 'cython'); returns the old name."""
    global _kernel, BACKEND
    old = BACKEND
    if name == "python":
        _kernel = _gf2py
    elif name == "cython":
        from . import _gf2kernel

        _kernel = _gf2kernel
    else:
        raise ValueError(f"unknown backend {name!r}")
    BACKEND = _kernel.BACKEND
    return old


def parity(x: int) -> int:
    return bin(x).count("1") & 1


def bits_of(x: int) -> Iterable[int]:
    while x:
        low = x & -x
        yield low.bit_length() - 1
        x ^= low


class Basis:
    """Ordered, duplicate-free coordinate labels."""

    __slots__ = ("labels", "index", "_hash")

    def __init__(self, labels: Iterable[Hashable]):
        self.labels = tuple(labels)
        self.index = {lab: i for i, lab in enumerate(self.labels)}
        if len(self.index) != len(self.labels):
            raise ValueError("basis labels must be distinct")
        self._hash = hash(self.labels)

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def __eq__(self, other) -> bool:
        return self is other or (isinstance(other, Basis) and self.labels == other.labels)

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"Basis(<{len(self.labels)} labels>)"

    def position(self, label: Hashable) -> int:
        return self.index[label]

    def texts(self) -> list[str]:
        return [label_text(lab) for lab in self.labels]


def label_text(label) -> str:
    """Canonical text for a coordinate label (nested tuples of ints/strings)."""
    if isinstance(label, bool):
        return str(int(label))
    if isinstance(label, int):
        return str(label)
    if isinstance(label, str):
        return label
    if isinstance(label, (tuple, list)):
        return "(" + ",".join(label_text(x) for x in label) + ")"
    if isinstance(label, frozenset):
        return "{" + ",".join(sorted(label_text(x) for x in label)) + "}"
    return repr(label)


@dataclass(frozen=True)
class Gf2Vector:
    basis: Basis
    bits: int = 0

    def __post_init__(self):
        if self.bits < 0 or self.bits.bit_length() > len(self.basis):
            raise ValueError("bits outside the basis")

    @classmethod
    def zero(cls, basis: Basis) -> "Gf2Vector":
        return cls(basis, 0)

    @classmethod
    def from_support(cls, basis: Basis, labels: Iterable[Hashable]) -> "Gf2Vector":
        bits = 0
        for lab in labels:
            bits ^= 1 << basis.index[lab]
        return cls(basis, bits)

    @classmethod
    def from_string(cls, basis: Basis, s: str) -> "Gf2Vector":
        """'1100' -> coordinates 0 and 1 set (leftmost char is coordinate 0)."""
        if len(s) != len(basis):
            raise DimensionMismatch("string length differs from basis size")
        return cls(basis, sum(1 << i for i, ch in enumerate(s) if ch == "1"))

    def to_string(self) -> str:
        return "".join("1" if (self.bits >> i) & 1 else "0" for i in range(len(self.basis)))

    def __getitem__(self, label) -> int:
        return (self.bits >> self.basis.index[label]) & 1

    def __add__(self, other: "Gf2Vector") -> "Gf2Vector":
        return add(self, other)

    def __bool__(self) -> bool:
        return self.bits != 0

    def support(self) -> list:
        return [self.basis.labels[i] for i in bits_of(self.bits)]

    def weight(self) -> int:
        return bin(self.bits).count("1")

    def dot(self, other: "Gf2Vector") -> int:
        _check_same(self.basis, other.basis)
        return parity(self.bits & other.bits)


def _check_same(a: Basis, b: Basis) -> None:
    if a != b:
        raise BasisMismatch("vectors are over different bases")


def add(a: Gf2Vector, b: Gf2Vector) -> Gf2Vector:
    _check_same(a.basis, b.basis)
    return Gf2Vector(a.basis, a.bits ^ b.bits)


@dataclass(frozen=True)
class Gf2Matrix:
    row_basis: Basis
    col_basis: Basis
    rows: tuple[int, ...]

    def __post_init__(self):
        if len(self.rows) != len(self.row_basis):
            raise DimensionMismatch("row count differs from row basis")
        width = len(self.col_basis)
        for r in self.rows:
            if r < 0 or r.bit_length() > width:
                raise DimensionMismatch("row wider than column basis")

    @classmethod
    def from_rows(cls, col_basis: Basis, rows: Sequence, row_basis: Basis | None = None) -> "Gf2Matrix":
        ints = []
        for r in rows:
            if isinstance(r, Gf2Vector):
                _check_same(r.basis, col_basis)
                ints.append(r.bits)
            else:
                ints.append(int(r))
        if row_basis is None:
            row_basis = Basis(range(len(ints)))
        return cls(row_basis, col_basis, tuple(ints))

    @classmethod
    def from_strings(cls, strings: Sequence[str]) -> "Gf2Matrix":
        width = len(strings[0]) if strings else 0
        cols = Basis(range(width))
        return cls.from_rows(cols, [Gf2Vector.from_string(cols, s) for s in strings])

    @classmethod
    def identity(cls, basis: Basis) -> "Gf2Matrix":
        return cls(basis, basis, tuple(1 << i for i in range(len(basis))))

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.row_basis), len(self.col_basis)

    @property
    def vectors(self) -> list[Gf2Vector]:
        return [Gf2Vector(self.col_basis, r) for r in self.rows]

    def row(self, label) -> Gf2Vector:
        return Gf2Vector(self.col_basis, self.rows[self.row_basis.index[label]])

    def combine(self, c: Gf2Vector) -> Gf2Vector:
        """c . m  (sum of the rows selected by c)."""
        _check_same(c.basis, self.row_basis)
        acc = 0
        for i in bits_of(c.bits):
            acc ^= self.rows[i]
        return Gf2Vector(self.col_basis, acc)

    def apply(self, x: Gf2Vector) -> Gf2Vector:
        """m . x  (one parity per row)."""
        _check_same(x.basis, self.col_basis)
        out = 0
        for i, r in enumerate(self.rows):
            if parity(r & x.bits):
                out |= 1 << i
        return Gf2Vector(self.row_basis, out)

    def transpose(self) -> "Gf2Matrix":
        cols = [0] * len(self.col_basis)
        for i, r in enumerate(self.rows):
            for j in bits_of(r):
                cols[j] |= 1 << i
        return Gf2Matrix(self.col_basis, self.row_basis, tuple(cols))

    def rank(self) -> int:
        return len(_kernel.independent_rows(list(self.rows), len(self.col_basis)))


@dataclass(frozen=True)
class RowReduction:
    rank: int
    pivot_cols: list[int]
    reduced: Gf2Matrix


def row_reduce(m: Gf2Matrix) -> RowReduction:
    """Reduced row-echelon form; the nonzero rows come first, ordered by pivot."""
    ncols = len(m.col_basis)
    reduced, pivots = _kernel.rref(list(m.rows), ncols)
    reduced = tuple(r & ((1 << ncols) - 1) for r in reduced)
    return RowReduction(len(pivots), pivots, Gf2Matrix(Basis(range(len(reduced))), m.col_basis, reduced))


@dataclass(frozen=True)
class SpanResult:
    """Outcome of a span-membership query.

    ``coefficients`` (over the row basis) satisfies ``c . m == v`` when
    ``member``; otherwise ``witness`` (over the column basis) is orthogonal to
    every row and has odd inner product with ``v``.
    """

    member: bool
    coefficients: Gf2Vector | None = None
    witness: Gf2Vector | None = None

    def __bool__(self) -> bool:
        return self.member


class RowSpace:
    """Row space of a matrix, pre-reduced for repeated membership queries."""

    def __init__(self, m: Gf2Matrix):
        self.matrix = m
        ncols = len(m.col_basis)
        self.ncols = ncols
        nrows = len(m.rows)
        aug = [r | (1 << (ncols + i)) for i, r in enumerate(m.rows)]
        reduced, pivots = _kernel.rref(aug, ncols)
        self.pivots = pivots
        self.rank = len(pivots)
        self._mask = (1 << ncols) - 1
        self._pivot_rows = {p: reduced[i] for i, p in enumerate(pivots)}
        self._kernel_rows = [r >> ncols for r in reduced[self.rank:]]
        self.nrows = nrows

    @property
    def nullity(self) -> int:
        """Dimension of the column space complement: ncols - rank."""
        return self.ncols - self.rank

    def reduce(self, bits: int) -> int:
        """Residual of ``bits`` modulo the row space (zero at every pivot), with
        the provenance of the rows used in the high part."""
        live = bits & self._mask
        acc = bits
        for p in self.pivots:
            if (live >> p) & 1:
                row = self._pivot_rows[p]
                acc ^= row
                live ^= row & self._mask
        return acc

    def normal_form(self, bits: int) -> int:
        return self.reduce(bits) & self._mask

    def contains(self, v: Gf2Vector) -> SpanResult:
        _check_same(v.basis, self.matrix.col_basis)
        acc = self.reduce(v.bits)
        residual = acc & self._mask
        if residual == 0:
            coeff = acc >> self.ncols
            return SpanResult(True, Gf2Vector(self.matrix.row_basis, coeff), None)
        j = (residual & -residual).bit_length() - 1
        w = 1 << j
        for p in self.pivots:
            if (self._pivot_rows[p] >> j) & 1:
                w |= 1 << p
        return SpanResult(False, None, Gf2Vector(self.matrix.col_basis, w))


def in_span(m: Gf2Matrix, v: Gf2Vector) -> SpanResult:
    return RowSpace(m).contains(v)


@dataclass(frozen=True)
class SolveResult:
    """``x`` satisfies ``m . x == b`` when consistent; otherwise
    ``certificate`` (over the row basis) combines rows to zero while
    summing ``b`` to one."""

    consistent: bool
    x: Gf2Vector | None = None
    certificate: Gf2Vector | None = None

    def __bool__(self) -> bool:
        return self.consistent


def solve(m: Gf2Matrix, b: Gf2Vector) -> SolveResult:
    """Solve ``m . x = b``. Free variables are set to zero."""
    if b.basis != m.row_basis:
        if len(b.basis) != len(m.row_basis):
            raise DimensionMismatch("right-hand side length differs from row count")
        raise BasisMismatch("right-hand side is not over the row basis")
    ncols = len(m.col_basis)
    # layout: [ columns | rhs bit | provenance ]
    aug = [
        r | (((b.bits >> i) & 1) << ncols) | (1 << (ncols + 1 + i))
        for i, r in enumerate(m.rows)
    ]
    reduced, pivots = _kernel.rref(aug, ncols)
    rank = len(pivots)
    for r in reduced[rank:]:
        if (r >> ncols) & 1:
            return SolveResult(False, None, Gf2Vector(m.row_basis, r >> (ncols + 1)))
    x = 0
    for i, p in enumerate(pivots):
        if (reduced[i] >> ncols) & 1:
            x |= 1 << p
    return SolveResult(True, Gf2Vector(m.col_basis, x), None)


# --- basis-cache file -------------------------------------------------------

CACHE_MAGIC = b"GF2B"
CACHE_VERSION = 1


def write_cache(path, m: Gf2Matrix) -> bytes:
    """Write ``m`` in the GF2B format; returns the bytes written."""
    data = encode_cache(m)
    with open(path, "wb") as fh:
        fh.write(data)
    return data


def encode_cache(m: Gf2Matrix) -> bytes:
    nrows, ncols = m.shape
    nwords = (ncols + 63) // 64
    parts = [CACHE_MAGIC, bytes([CACHE_VERSION]), struct.pack("<II", nrows, ncols)]
    for r in m.rows:
        parts.append(r.to_bytes(nwords * 8, "little"))
    for text in m.col_basis.texts():
        raw = text.encode("utf-8")
        parts.append(struct.pack("<I", len(raw)))
        parts.append(raw)
    return b"".join(parts)


def decode_cache(data: bytes) -> tuple[list[int], list[str]]:
    """Parse GF2B bytes into (rows, column label texts)."""
    if data[:4] != CACHE_MAGIC:
        raise ValueError("not a GF2B cache file")
    if data[4] != CACHE_VERSION:
        raise ValueError(f"unsupported GF2B version {data[4]}")
    nrows, ncols = struct.unpack_from("<II", data, 5)
    nwords = (ncols + 63) // 64
    off = 13
    rows = []
    for _ in range(nrows):
        rows.append(int.from_bytes(data[off : off + nwords * 8], "little"))
        off += nwords * 8
    labels = []
    for _ in range(ncols):
        (ln,) = struct.unpack_from("<I", data, off)
        off += 4
        labels.append(data[off : off + ln].decode("utf-8"))
        off += ln
    if off != len(data):
        raise ValueError("trailing bytes in GF2B cache file")
    return rows, labels


def read_cache(path) -> tuple[list[int], list[str]]:
    with open(path, "rb") as fh:
        return decode_cache(fh.read())
