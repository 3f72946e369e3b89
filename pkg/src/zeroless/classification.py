"""Gauge triples, the coboundary operator and its image B.

Two models M_{I,f1}, M_{I,f2} are isomorphic over the identity on the index
and set sorts iff f1 + f2 lies in B = {delta g}. Everything here is linear
algebra over GF(2) on the correction space (coordinates (u, s), u-major).
"""

from __future__ import annotations

import hashlib
import os
import random
from dataclasses import dataclass, field
from itertools import permutations
from typing import Iterable, Mapping, Sequence

from .choices import Choice
from .gf2 import Basis, Gf2Matrix, Gf2Vector, RowSpace, label_text, read_cache, write_cache
from .model import CorrectionFunction
from .setting import GuardrailError, Setting

MAX_DOMAIN_DIM = 4096
MAX_PERM_N = 8
MAX_ENUM_QUOTIENT = 20


# -- gauge triples -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GaugeTriple:
    """g1: (k-set, s) -> bit, g2: (k-set, s) -> H, g3: (k+1)-set -> G.

    Missing keys read as zero.
    """

    setting: Setting
    g1: Mapping = field(default_factory=dict)
    g2: Mapping = field(default_factory=dict)
    g3: Mapping = field(default_factory=dict)

    def __post_init__(self):
        st = self.setting
        for u, g in self.g3.items():
            if not st.g_membership(g):
                raise ValueError(f"g3{u!r} = {g:#x} is not in G")
        object.__setattr__(self, "g1", {k: v for k, v in self.g1.items() if v})
        object.__setattr__(self, "g2", {k: v for k, v in self.g2.items() if v})
        object.__setattr__(self, "g3", {k: v for k, v in self.g3.items() if v})

    def __eq__(self, other) -> bool:
        if not isinstance(other, GaugeTriple):
            return NotImplemented
        return (self.setting, self.g1, self.g2, self.g3) == (other.setting, other.g1, other.g2, other.g3)

    def __add__(self, other: "GaugeTriple") -> "GaugeTriple":
        def xor(a, b):
            out = dict(a)
            for key, v in b.items():
                out[key] = out.get(key, 0) ^ v
            return out

        return GaugeTriple(self.setting, xor(self.g1, other.g1), xor(self.g2, other.g2), xor(self.g3, other.g3))

    @classmethod
    def zero(cls, setting: Setting) -> "GaugeTriple":
        return cls(setting)

    @classmethod
    def random(cls, setting: Setting, rng: random.Random) -> "GaugeTriple":
        gs = setting.g_elements()
        return cls(
            setting,
            {(u, s): rng.randrange(2) for u in setting.k_sets for s in setting.S},
            {(u, s): rng.randrange(setting.h_size()) for u in setting.k_sets for s in setting.S},
            {u: rng.choice(gs) for u in setting.k1_sets},
        )

    def to_choice(self) -> Choice:
        """The global choice (x, y, z) = (g1, g2, g3)."""
        st = self.setting
        return Choice(
            st,
            st.k_sets,
            st.k_sets,
            st.k1_sets,
            {(u, s): self.g1.get((u, s), 0) for u in st.k_sets for s in st.S},
            {(u, s): self.g2.get((u, s), 0) for u in st.k_sets for s in st.S},
            {u: self.g3.get(u, 0) for u in st.k1_sets},
        )

    @classmethod
    def from_choice(cls, c: Choice) -> "GaugeTriple":
        return cls(c.setting, dict(c.x), dict(c.y), dict(c.z))


def coboundary(setting: Setting, g: GaugeTriple) -> CorrectionFunction:
    """delta g(u,s) = sum_{l<k} g1(u_l,s) + g2(u_k,s)(u_0) + g3(u)(s)."""
    k = setting.k
    bits = 0
    for u in setting.k1_sets:
        subs = [u[:l] + u[l + 1 :] for l in range(k + 1)]
        j0 = setting.kset_index[subs[0]]
        g3 = g.g3.get(u, 0)
        for s in setting.S:
            v = (g3 >> s) & 1
            for l in range(k):
                v ^= g.g1.get((subs[l], s), 0)
            v ^= (g.g2.get((subs[k], s), 0) >> j0) & 1
            if v:
                bits |= 1 << setting.domain_pos(u, s)
    return CorrectionFunction(setting, bits)


# -- gauge generators and their columns --------------------------------------


def gauge_generators(setting: Setting) -> list[tuple]:
    """Labels of gauge basis vectors whose coboundary can be nonzero.

    ("g1", v, s); ("g2", v, s, w) for H-coordinate w; ("g3", u, t) for the
    G-basis unit at t. A g2 unit whose coordinate w is never read by the
    formula has zero coboundary and is left out.
    """
    k = setting.k
    labels: list[tuple] = []
    for v in setting.k_sets:
        for s in setting.S:
            labels.append(("g1", v, s))
    for v in setting.k_sets:
        ws = [(v + (b,))[1:] for b in range(v[-1] + 1, setting.n)]
        for s in setting.S:
            for w in ws:
                labels.append(("g2", v, s, w))
    for u in setting.k1_sets:
        for gb in setting.g_basis_vectors:
            labels.append(("g3", u, gb.bit_length() - 1))
    assert all(len(lbl[1]) in (k, k + 1) for lbl in labels)
    return labels


def generator_column(setting: Setting, label: tuple) -> int:
    """delta of one gauge basis vector, as bits over the domain basis."""
    tag = label[0]
    n = setting.n
    bits = 0
    if tag == "g1":
        _, v, s = label
        vmax = v[-1]
        for b in range(n):
            if b in v or b > vmax:
                continue
            u = tuple(sorted(v + (b,)))
            bits |= 1 << setting.domain_pos(u, s)
        return bits
    if tag == "g2":
        _, v, s, w = label
        for b in range(v[-1] + 1, n):
            u = v + (b,)
            if u[1:] == tuple(w):
                bits |= 1 << setting.domain_pos(u, s)
        return bits
    if tag == "g3":
        _, u, t = label
        return 1 << setting.domain_pos(u, t)
    raise ValueError(f"unknown gauge generator {label!r}")


def generator_gauge(setting: Setting, label: tuple) -> GaugeTriple:
    tag = label[0]
    if tag == "g1":
        return GaugeTriple(setting, g1={(label[1], label[2]): 1})
    if tag == "g2":
        _, v, s, w = label
        return GaugeTriple(setting, g2={(v, s): 1 << setting.kset_index[tuple(w)]})
    _, u, t = label
    return GaugeTriple(setting, g3={u: 1 << t})


def gauge_from_labels(setting: Setting, labels: Iterable[tuple]) -> GaugeTriple:
    g = GaugeTriple.zero(setting)
    for lbl in labels:
        g = g + generator_gauge(setting, lbl)
    return g


def dense_coboundary_matrix(setting: Setting) -> Gf2Matrix:
    """Reference build: apply the full formula to every generator."""
    labels = gauge_generators(setting)
    rows = [coboundary(setting, generator_gauge(setting, lbl)).bits for lbl in labels]
    return Gf2Matrix(Basis(labels), setting.domain_basis, tuple(rows))


def sparse_coboundary_matrix(setting: Setting) -> Gf2Matrix:
    labels = gauge_generators(setting)
    rows = [generator_column(setting, lbl) for lbl in labels]
    return Gf2Matrix(Basis(labels), setting.domain_basis, tuple(rows))


def check_dimension(setting: Setting) -> None:
    dim = len(setting.domain_basis)
    if dim > MAX_DOMAIN_DIM:
        raise GuardrailError(
            f"correction space has dimension {dim} at {setting.describe()}; cap is {MAX_DOMAIN_DIM}"
        )


# -- the image ---------------------------------------------------------------


@dataclass(frozen=True)
class IsoCertificate:
    """Outcome of a linear isomorphism test.

    When ``holds`` the gauge satisfies delta(gauge) = target; otherwise
    ``witness`` is a vector over the domain that annihilates B but not the
    target.
    """

    holds: bool
    gauge: GaugeTriple | None = None
    witness: Gf2Vector | None = None
    perm: tuple[int, ...] | None = None

    def __bool__(self) -> bool:
        return self.holds


class CoboundaryImage:
    """B as a row space with per-row provenance (the generating gauge label)."""

    def __init__(self, setting: Setting, matrix: Gf2Matrix | None = None):
        check_dimension(setting)
        self.setting = setting
        self.matrix = matrix if matrix is not None else sparse_coboundary_matrix(setting)
        self.provenance: list[tuple] = list(self.matrix.row_basis.labels)
        self.space = RowSpace(self.matrix)

    @property
    def rank(self) -> int:
        return self.space.rank

    @property
    def domain_dim(self) -> int:
        return len(self.setting.domain_basis)

    @property
    def quotient_dim(self) -> int:
        return self.domain_dim - self.rank

    def contains(self, f: CorrectionFunction) -> IsoCertificate:
        res = self.space.contains(f.vector)
        if res.member:
            labels = [self.provenance[i] for i in bits_positions(res.coefficients.bits)]
            return IsoCertificate(True, gauge=gauge_from_labels(self.setting, labels))
        return IsoCertificate(False, witness=res.witness)

    def normal_form(self, bits: int) -> int:
        return self.space.normal_form(bits)

    def free_columns(self) -> list[int]:
        """Domain coordinates that are not pivots: a transversal of the quotient."""
        piv = set(self.space.pivots)
        return [j for j in range(self.domain_dim) if j not in piv]

    def coset_representatives(self, limit: int = 1 << 12) -> list[CorrectionFunction]:
        free = self.free_columns()
        reps = []
        for mask in range(min(1 << len(free), limit)):
            bits = 0
            for i, j in enumerate(free):
                if (mask >> i) & 1:
                    bits |= 1 << j
            reps.append(CorrectionFunction(self.setting, bits))
        return reps

    # -- persistence -------------------------------------------------------
    def save(self, directory: str) -> tuple[str, str]:
        """Write the GF2B cache and its provenance sidecar; returns their sha256."""
        os.makedirs(directory, exist_ok=True)
        stem = os.path.join(directory, cache_stem(self.setting))
        write_cache(stem + ".gf2b", self.matrix)
        with open(stem + ".prov", "w", encoding="utf-8") as fh:
            for lbl in self.provenance:
                fh.write(label_text(lbl) + "\n")
        return file_sha256(stem + ".gf2b"), file_sha256(stem + ".prov")

    @classmethod
    def load(cls, setting: Setting, directory: str) -> "CoboundaryImage | None":
        stem = os.path.join(directory, cache_stem(setting))
        if not (os.path.exists(stem + ".gf2b") and os.path.exists(stem + ".prov")):
            return None
        rows, col_texts = read_cache(stem + ".gf2b")
        fresh_labels = gauge_generators(setting)
        with open(stem + ".prov", encoding="utf-8") as fh:
            prov = [line.rstrip("\n") for line in fh]
        if prov != [label_text(lbl) for lbl in fresh_labels]:
            return None
        if col_texts != setting.domain_basis.texts() or len(rows) != len(fresh_labels):
            return None
        matrix = Gf2Matrix(Basis(fresh_labels), setting.domain_basis, tuple(rows))
        return cls(setting, matrix)


def bits_positions(bits: int) -> list[int]:
    out = []
    while bits:
        low = bits & -bits
        out.append(low.bit_length() - 1)
        bits ^= low
    return out


def cache_stem(setting: Setting) -> str:
    stem = f"B_k{setting.k}_n{setting.n}_m{setting.m}"
    if setting.generators is not None:
        stem += "_f" + "-".join(str(g) for g in setting.generators)
    return stem


def file_sha256(path: str) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


_IMAGES: dict[Setting, CoboundaryImage] = {}


def coboundary_image(setting: Setting, cache_dir: str | None = None) -> CoboundaryImage:
    """B for ``setting``; memoized in-process and optionally on disk."""
    img = _IMAGES.get(setting)
    if img is not None:
        if cache_dir and not os.path.exists(os.path.join(cache_dir, cache_stem(setting) + ".gf2b")):
            img.save(cache_dir)
        return img
    if cache_dir:
        img = CoboundaryImage.load(setting, cache_dir)
    if img is None:
        img = CoboundaryImage(setting)
        if cache_dir:
            img.save(cache_dir)
    _IMAGES[setting] = img
    return img


# -- isomorphism criteria ----------------------------------------------------


def iso_over_identity(setting: Setting, f1: CorrectionFunction, f2: CorrectionFunction) -> IsoCertificate:
    return coboundary_image(setting).contains(f1 + f2)


def check_permutation(setting: Setting, perm: Sequence[int]) -> tuple[int, ...]:
    perm = tuple(perm)
    if sorted(perm) != list(range(setting.n)):
        raise ValueError(f"{perm!r} is not a permutation of I")
    return perm


def permute_set(perm: Sequence[int], u: Sequence[int]) -> tuple[int, ...]:
    return tuple(sorted(perm[a] for a in u))


def permutation_action(setting: Setting, perm: Sequence[int], f: CorrectionFunction) -> CorrectionFunction:
    """(pi.f)(u, s) = f(pi^{-1}[u], s); ``perm[a]`` is the image of a."""
    perm = check_permutation(setting, perm)
    return CorrectionFunction(setting, _apply_column_perm(_domain_perm(setting, perm), f.bits))


def _domain_perm(setting: Setting, perm: tuple[int, ...]) -> list[int]:
    ns = len(setting.S)
    out = [0] * len(setting.domain_basis)
    for i, u in enumerate(setting.k1_sets):
        j = setting.k1set_index[permute_set(perm, u)]
        for s in setting.S:
            out[i * ns + s] = j * ns + s
    return out


def _apply_column_perm(table: Sequence[int], bits: int) -> int:
    out = 0
    for p in bits_positions(bits):
        out |= 1 << table[p]
    return out


def all_permutations(setting: Setting):
    if setting.n > MAX_PERM_N:
        raise GuardrailError(f"permutation search needs n <= {MAX_PERM_N}, got n={setting.n}")
    return permutations(range(setting.n))


def iso_with_permutation(setting: Setting, f1: CorrectionFunction, f2: CorrectionFunction,
                         image: CoboundaryImage | None = None) -> IsoCertificate | None:
    """Some pi with pi.f1 + f2 in B (identity tried first), or None.

    ``image`` substitutes another invariant subspace for B.
    """
    img = image or coboundary_image(setting)
    for perm in all_permutations(setting):
        cert = img.contains(permutation_action(setting, perm, f1) + f2)
        if cert.holds:
            return IsoCertificate(True, gauge=cert.gauge, perm=perm)
    return None


def verify_permutation_certificate(setting: Setting, f1, f2, cert: IsoCertificate) -> bool:
    lhs = permutation_action(setting, cert.perm, f1) + f2
    return coboundary(setting, cert.gauge) == lhs


def image_is_invariant(setting: Setting, perms: Iterable[Sequence[int]]) -> bool:
    """Every pi maps every generator of B back into B (rank test)."""
    img = coboundary_image(setting)
    for perm in perms:
        table = _domain_perm(setting, check_permutation(setting, perm))
        for row in img.matrix.rows:
            moved = CorrectionFunction(setting, _apply_column_perm(table, row))
            if not img.contains(moved).holds:
                return False
    return True


# -- counting ----------------------------------------------------------------


@dataclass
class ClassCount:
    mode: str
    count: int
    quotient_dim: int
    representatives: list[CorrectionFunction]
    burnside: int | None = None
    sampled: bool = False


class QuotientAction:
    """Sym(I) acting on V / W for a permutation-invariant subspace W of the
    correction space (W = B in practice; any invariant W works)."""

    def __init__(self, setting: Setting, subspace: Gf2Matrix):
        self.setting = setting
        self.space = RowSpace(subspace)
        piv = set(self.space.pivots)
        self.free = [j for j in range(len(setting.domain_basis)) if j not in piv]
        self.free_pos = {j: i for i, j in enumerate(self.free)}

    @property
    def dim(self) -> int:
        return len(self.free)

    def canon(self, bits: int) -> int:
        """Coset normal form, expressed over the free coordinates."""
        nf = self.space.normal_form(bits)
        out = 0
        for p in bits_positions(nf):
            out |= 1 << self.free_pos[p]
        return out

    def lift(self, q: int) -> int:
        bits = 0
        for i in bits_positions(q):
            bits |= 1 << self.free[i]
        return bits

    def perm_matrix(self, perm: tuple[int, ...]) -> list[int]:
        """Images of the free unit cosets under pi, as quotient coordinates."""
        table = _domain_perm(self.setting, perm)
        return [self.canon(1 << table[j]) for j in self.free]

    def orbits(self, perms: Sequence[tuple[int, ...]]) -> list[int]:
        """One representative (smallest quotient code) per orbit."""
        mats = [self.perm_matrix(p) for p in perms]
        seen = bytearray(1 << self.dim)
        reps = []
        for q in range(1 << self.dim):
            if seen[q]:
                continue
            reps.append(q)
            for mat in mats:
                img = 0
                for i in bits_positions(q):
                    img ^= mat[i]
                seen[img] = 1
        return reps

    def burnside(self, perms: Sequence[tuple[int, ...]]) -> int:
        total = 0
        for p in perms:
            mat = self.perm_matrix(p)
            shifted = [mat[i] ^ (1 << i) for i in range(self.dim)]
            fixed_dim = self.dim - _rank_rows(shifted, self.dim)
            total += 1 << fixed_dim
        assert total % len(perms) == 0
        return total // len(perms)


def _rank_rows(rows: list[int], ncols: int) -> int:
    basis = Basis(range(ncols))
    return Gf2Matrix(Basis(range(len(rows))), basis, tuple(rows)).rank()


def count_iso_classes(setting: Setting, mode: str = "identity", sample: int = 0,
                      rng: random.Random | None = None, image: CoboundaryImage | None = None) -> ClassCount:
    img = image or coboundary_image(setting)
    qd = img.quotient_dim
    if mode == "identity":
        return ClassCount("identity", 1 << qd, qd, img.coset_representatives())
    if mode != "full":
        raise ValueError(f"unknown counting mode {mode!r}")
    return count_orbits(setting, img.matrix, sample=sample, rng=rng)


def count_orbits(setting: Setting, subspace: Gf2Matrix, sample: int = 0,
                 rng: random.Random | None = None) -> ClassCount:
    qa = QuotientAction(setting, subspace)
    if qa.dim == 0:
        return ClassCount("full", 1, 0, [CorrectionFunction.zero(setting)], burnside=1)
    perms = list(all_permutations(setting))
    if qa.dim > MAX_ENUM_QUOTIENT:
        if not sample:
            raise GuardrailError(
                f"quotient dimension {qa.dim} too large to enumerate; pass a sample size"
            )
        rng = rng or random.Random(0)
        mats = [qa.perm_matrix(p) for p in perms]
        found = {}
        for _ in range(sample):
            q = rng.getrandbits(qa.dim)
            orbit_min = min(_apply_quotient(m, q) for m in mats)
            found.setdefault(orbit_min, q)
        reps = [CorrectionFunction(setting, qa.lift(q)) for q in sorted(found)]
        return ClassCount("full", len(found), qa.dim, reps, sampled=True)
    codes = qa.orbits(perms)
    reps = [CorrectionFunction(setting, qa.lift(q)) for q in codes]
    return ClassCount("full", len(codes), qa.dim, reps, burnside=qa.burnside(perms))


def _apply_quotient(mat: list[int], q: int) -> int:
    out = 0
    for i in bits_positions(q):
        out ^= mat[i]
    return out


def g3_span(setting: Setting) -> Gf2Matrix:
    """The subspace {f : every fiber f_u lies in G}."""
    labels = [lbl for lbl in gauge_generators(setting) if lbl[0] == "g3"]
    rows = [generator_column(setting, lbl) for lbl in labels]
    return Gf2Matrix(Basis(labels), setting.domain_basis, tuple(rows))


# -- extension criterion -----------------------------------------------------


def extension_criterion(setting: Setting, f: CorrectionFunction, fixed: Choice,
                        target: Iterable[int] | None = None) -> IsoCertificate:
    """Is there a gauge extending ``fixed`` whose coboundary equals f on the
    (k+1)-sets inside ``target`` (default: all of I)?

    Equivalently: does ``fixed`` extend to a zero-correction choice over the
    target's induced domains. Decided as f + delta(fixed part) in the span of
    delta(free generators), all restricted to the target coordinates.
    """
    tgt = set(range(setting.n)) if target is None else set(target)
    ns = len(setting.S)
    cols = [
        setting.k1set_index[u] * ns + s
        for u in setting.k1_sets
        if set(u) <= tgt
        for s in setting.S
    ]
    mask = 0
    for c in cols:
        mask |= 1 << c
    g_fixed = GaugeTriple.from_choice(fixed)
    rhs = (f + coboundary(setting, g_fixed)).bits & mask

    free = []
    for lbl in gauge_generators(setting):
        tag, u = lbl[0], lbl[1]
        if not set(u) <= tgt:
            continue
        if tag == "g1" and u in fixed.J0:
            continue
        if tag == "g2" and u in fixed.J1:
            continue
        if tag == "g3" and u in fixed.J2:
            continue
        free.append(lbl)
    sub_basis = Basis(cols)
    rows = tuple(_compress(generator_column(setting, lbl), cols) for lbl in free)
    mat = Gf2Matrix(Basis(free), sub_basis, rows)
    res = RowSpace(mat).contains(Gf2Vector(sub_basis, _compress(rhs, cols)))
    if not res.member:
        return IsoCertificate(False, witness=res.witness)
    g_free = gauge_from_labels(setting, [free[i] for i in bits_positions(res.coefficients.bits)])
    return IsoCertificate(True, gauge=g_fixed + g_free)


def _compress(bits: int, cols: list[int]) -> int:
    out = 0
    for i, c in enumerate(cols):
        if (bits >> c) & 1:
            out |= 1 << i
    return out


__all__ = [
    "GaugeTriple", "coboundary", "gauge_generators", "generator_column", "generator_gauge",
    "gauge_from_labels", "dense_coboundary_matrix", "sparse_coboundary_matrix", "CoboundaryImage",
    "IsoCertificate", "ClassCount", "QuotientAction", "g3_span", "image_is_invariant",
    "verify_permutation_certificate",
    "coboundary_image", "iso_over_identity", "permutation_action", "iso_with_permutation",
    "count_iso_classes", "count_orbits", "extension_criterion",
]
