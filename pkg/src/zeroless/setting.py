"""Finite ground data: index set, the surrogate ordinal, S, the cone filter,
and the coefficient groups G and H.

Encodings used throughout the package:

* an element of S (a subset of ``Lam = {0..m-1}``) is an int bitmask, and S is
  ordered by that integer, so ``S[i] == i``;
* a k-set or (k+1)-set of indices is an ascending tuple;
* an element of G is an int over S (bit ``s`` is the value at ``s``);
* an element of H is an int over the k-sets (bit ``j`` is ``k_sets[j]``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from math import comb
from typing import Iterable, Sequence

from .gf2 import Basis, Gf2Matrix, Gf2Vector

MAX_N = 12
MAX_M = 4
MAX_K = 4


class GuardrailError(ValueError):
    """Parameters outside the desk-scale envelope."""


def encode_subset(items: Iterable[int]) -> str:
    return ",".join(str(x) for x in sorted(items))


def decode_subset(text: str) -> tuple[int, ...]:
    text = text.strip()
    if not text:
        return ()
    return tuple(sorted(int(t) for t in text.split(",")))


def mask_members(mask: int) -> tuple[int, ...]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def members_mask(members: Iterable[int]) -> int:
    mask = 0
    for x in members:
        mask |= 1 << x
    return mask


@dataclass(frozen=True)
class Setting:
    """The finite instantiation (k, I = {0..n-1}, Lam = {0..m-1}, S, filter).

    ``generators`` optionally lists subsets of Lam (as bitmasks) whose cones
    generate the filter; by default every subset of Lam is a generator.
    """

    k: int
    n: int
    m: int
    generators: tuple[int, ...] | None = field(default=None)

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("k must be at least 2")
        if self.n < 1 or self.m < 0:
            raise ValueError("need n >= 1 and m >= 0")
        if self.k > MAX_K or self.n > MAX_N or self.m > MAX_M:
            raise GuardrailError(
                f"(k={self.k}, n={self.n}, m={self.m}) exceeds guardrails "
                f"k<={MAX_K}, n<={MAX_N}, m<={MAX_M}"
            )
        if self.generators is not None:
            full = (1 << self.m) - 1
            gens = tuple(sorted(set(self.generators)))
            for g in gens:
                if g & ~full:
                    raise ValueError(f"filter generator {g:#x} is not a subset of Lam")
            object.__setattr__(self, "generators", gens)

    # -- ground sets -------------------------------------------------------
    @cached_property
    def I(self) -> tuple[int, ...]:
        return tuple(range(self.n))

    @cached_property
    def lam(self) -> int:
        """Lam itself, as a mask."""
        return (1 << self.m) - 1

    @cached_property
    def S(self) -> tuple[int, ...]:
        return tuple(range(1 << self.m))

    @cached_property
    def k_sets(self) -> tuple[tuple[int, ...], ...]:
        return tuple(combinations(range(self.n), self.k))

    @cached_property
    def k1_sets(self) -> tuple[tuple[int, ...], ...]:
        return tuple(combinations(range(self.n), self.k + 1))

    @cached_property
    def kset_index(self) -> dict[tuple[int, ...], int]:
        return {u: i for i, u in enumerate(self.k_sets)}

    @cached_property
    def k1set_index(self) -> dict[tuple[int, ...], int]:
        return {u: i for i, u in enumerate(self.k1_sets)}

    @cached_property
    def s_basis(self) -> Basis:
        return Basis(self.S)

    @cached_property
    def kset_basis(self) -> Basis:
        return Basis(self.k_sets)

    @cached_property
    def domain_basis(self) -> Basis:
        """Coordinates (u, s) of a correction function, u-major."""
        return Basis((u, s) for u in self.k1_sets for s in self.S)

    def domain_pos(self, u: tuple[int, ...], s: int) -> int:
        return self.k1set_index[u] * len(self.S) + s

    @property
    def n_h(self) -> int:
        return len(self.k_sets)

    # -- filter ------------------------------------------------------------
    @cached_property
    def cone_roots(self) -> tuple[int, ...]:
        """Every u whose cone is a basic member of the filter: unions of
        subfamilies of the generators (the empty union gives the top cone)."""
        if self.generators is None:
            return self.S
        roots = {0}
        for g in self.generators:
            roots |= {r | g for r in roots}
        return tuple(sorted(roots))

    def cone(self, u: int) -> int:
        """<u> = {v in S : u <= v}, as a bitmask over S."""
        bits = 0
        for v in self.S:
            if v & u == u:
                bits |= 1 << v
        return bits

    @cached_property
    def _root_cones(self) -> tuple[int, ...]:
        return tuple(self.cone(u) for u in self.cone_roots)

    def filter_contains(self, A) -> bool:
        """True iff some basic cone lies inside A (A: bitmask over S or an
        iterable of elements of S)."""
        bits = A if isinstance(A, int) else members_mask(A)
        return any(c & ~bits == 0 for c in self._root_cones)

    # -- the groups --------------------------------------------------------
    def g_membership(self, g) -> bool:
        """g in G iff ker(g) is in the filter."""
        bits = _as_bits(g, self.s_basis)
        full_s = (1 << len(self.S)) - 1
        return self.filter_contains(full_s & ~bits)

    @cached_property
    def _smallest_cone(self) -> int:
        # the root cones are closed under intersection, so one of them is least
        return min(self._root_cones, key=lambda c: bin(c).count("1"))

    @cached_property
    def g_basis_vectors(self) -> tuple[int, ...]:
        """Unit vectors at every s outside the least basic cone; their span is G."""
        least = self._smallest_cone
        return tuple(1 << s for s in self.S if not (least >> s) & 1)

    def g_basis(self) -> Gf2Matrix:
        return Gf2Matrix.from_rows(self.s_basis, self.g_basis_vectors)

    @property
    def g_dim(self) -> int:
        return len(self.g_basis_vectors)

    def g_elements(self) -> list[int]:
        """All of G, by enumerating combinations of the basis."""
        out = [0]
        for b in self.g_basis_vectors:
            out += [x ^ b for x in out]
        return sorted(out)

    def h_size(self) -> int:
        return 1 << self.n_h

    # -- combinatorics -----------------------------------------------------
    def sub_k_sets(self, u: Sequence[int]) -> list[tuple[int, ...]]:
        return sub_k_sets(self, u)

    def sizes(self) -> dict[str, int]:
        """Sort sizes of the full model over this setting."""
        nk, nk1, ns = comb(self.n, self.k), comb(self.n, self.k + 1), len(self.S)
        return {
            "Index": self.n,
            "KSet": nk,
            "K1Set": nk1,
            "HCopy": nk * ns * (1 << nk),
            "Z2Copy": nk * ns * 2,
            "HPure": 1 << nk,
            "GCopy": nk1 * (1 << self.g_dim),
        }

    # -- config record -----------------------------------------------------
    def to_record(self) -> dict:
        rec = {"k": self.k, "n": self.n, "m": self.m}
        if self.generators is not None:
            rec["filter"] = [encode_subset(mask_members(g)) for g in self.generators]
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "Setting":
        gens = rec.get("filter")
        if gens is not None:
            gens = tuple(members_mask(decode_subset(t)) for t in gens)
        return cls(int(rec["k"]), int(rec["n"]), int(rec["m"]), gens)

    def describe(self) -> str:
        return f"k={self.k} n={self.n} m={self.m}"


def _as_bits(v, basis: Basis) -> int:
    if isinstance(v, Gf2Vector):
        if v.basis != basis:
            from .gf2 import BasisMismatch

            raise BasisMismatch("vector is not over the expected basis")
        return v.bits
    return int(v)


def filter_contains(setting: Setting, A) -> bool:
    return setting.filter_contains(A)


def g_membership(setting: Setting, g) -> bool:
    return setting.g_membership(g)


def g_basis(setting: Setting) -> Gf2Matrix:
    return setting.g_basis()


def sub_k_sets(setting: Setting, u: Sequence[int]) -> list[tuple[int, ...]]:
    """u_l = u minus its l-th smallest member, for l = 0..k."""
    u = tuple(u)
    if len(u) != setting.k + 1:
        raise ValueError(f"expected a {setting.k + 1}-set, got {u!r}")
    if list(u) != sorted(set(u)):
        raise ValueError(f"{u!r} is not strictly ascending")
    return [u[:i] + u[i + 1 :] for i in range(len(u))]


def s_text(s: int) -> str:
    """Canonical text of an element of S: '{0,2}'."""
    return "{" + encode_subset(mask_members(s)) + "}"


def kset_text(u: Sequence[int]) -> str:
    return encode_subset(u)


def h_text(setting: Setting, h: int) -> str:
    """Support of an element of H: k-sets joined by ';'."""
    return ";".join(kset_text(setting.k_sets[j]) for j in range(setting.n_h) if (h >> j) & 1)


def g_text(setting: Setting, g: int) -> str:
    return ";".join(s_text(s) for s in setting.S if (g >> s) & 1)
