"""The structures M_I and M_{I,f}.

A :class:`ModelHandle` is lazy: elements are small tagged values, predicates
and functions are evaluated on demand, and the Q_s relations are never
stored, only decided by :func:`q_s_holds`. :func:`materialize` expands a
handle into an :class:`ExplicitStructure` (named elements, relation and
function tables) for settings small enough to enumerate.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Iterator, Sequence

from .gf2 import Gf2Vector
from .setting import (
    Setting,
    decode_subset,
    g_text,
    h_text,
    kset_text,
    members_mask,
    s_text,
)

# -- elements ----------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Index:
    a: int


@dataclass(frozen=True, slots=True)
class KSet:
    u: tuple[int, ...]


@dataclass(frozen=True, slots=True)
class K1Set:
    u: tuple[int, ...]


@dataclass(frozen=True, slots=True)
class HCopy:
    u: tuple[int, ...]
    s: int
    h: int


@dataclass(frozen=True, slots=True)
class Z2Copy:
    u: tuple[int, ...]
    s: int
    i: int


@dataclass(frozen=True, slots=True)
class HPure:
    h: int


@dataclass(frozen=True, slots=True)
class GCopy:
    u: tuple[int, ...]
    g: int


Element = Index | KSet | K1Set | HCopy | Z2Copy | HPure | GCopy

SORTS = ("Index", "KSet", "K1Set", "HCopy", "Z2Copy", "HPure", "GCopy")


class _Undefined:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self) -> str:
        return "UNDEFINED"

    def __bool__(self) -> bool:
        return False


UNDEFINED = _Undefined()


class UnknownSymbol(KeyError):
    pass


class ArityError(TypeError):
    pass


class BudgetExceeded(RuntimeError):
    """Universe larger than the materialization budget."""

    def __init__(self, sort: str, size: int, cap: int, total: int):
        super().__init__(
            f"universe of {total} elements exceeds cap {cap}; largest sort {sort} has {size} elements"
        )
        self.sort = sort
        self.size = size
        self.cap = cap
        self.total = total


# -- correction functions ----------------------------------------------------


@dataclass(frozen=True)
class CorrectionFunction:
    """f : [I]^{k+1} x S -> Z_2, bit-packed over ``setting.domain_basis``."""

    setting: Setting
    bits: int = 0

    def __post_init__(self):
        if self.bits < 0 or self.bits.bit_length() > len(self.setting.domain_basis):
            raise ValueError("correction bits outside the domain")

    def __call__(self, u: tuple[int, ...], s: int) -> int:
        return (self.bits >> self.setting.domain_pos(u, s)) & 1

    def __add__(self, other: "CorrectionFunction") -> "CorrectionFunction":
        if other.setting != self.setting:
            raise ValueError("correction functions over different settings")
        return CorrectionFunction(self.setting, self.bits ^ other.bits)

    def fiber(self, u: tuple[int, ...]) -> int:
        """f_u as a G-style int over S."""
        ns = len(self.setting.S)
        return (self.bits >> (self.setting.k1set_index[u] * ns)) & ((1 << ns) - 1)

    @property
    def vector(self) -> Gf2Vector:
        return Gf2Vector(self.setting.domain_basis, self.bits)

    @classmethod
    def zero(cls, setting: Setting) -> "CorrectionFunction":
        return cls(setting, 0)

    @classmethod
    def from_values(cls, setting: Setting, values: dict) -> "CorrectionFunction":
        bits = 0
        for (u, s), v in values.items():
            if v & 1:
                bits |= 1 << setting.domain_pos(tuple(u), s)
        return cls(setting, bits)

    @classmethod
    def from_fibers(cls, setting: Setting, fibers: dict) -> "CorrectionFunction":
        ns = len(setting.S)
        bits = 0
        for u, g in fibers.items():
            bits |= g << (setting.k1set_index[tuple(u)] * ns)
        return cls(setting, bits)

    @classmethod
    def random(cls, setting: Setting, rng: random.Random) -> "CorrectionFunction":
        return cls(setting, rng.getrandbits(len(setting.domain_basis)) if setting.domain_basis else 0)

    def items(self) -> Iterator[tuple[tuple[tuple[int, ...], int], int]]:
        for u in self.setting.k1_sets:
            for s in self.setting.S:
                yield (u, s), self(u, s)


def all_corrections(setting: Setting) -> list[CorrectionFunction]:
    return [CorrectionFunction(setting, b) for b in range(1 << len(setting.domain_basis))]


# -- the model handle --------------------------------------------------------


@dataclass(frozen=True)
class ModelHandle:
    """M_{I,f}; ``f=None`` is M_I itself (clause (zeta) with no correction)."""

    setting: Setting
    f: CorrectionFunction | None = None

    def __post_init__(self):
        if self.f is not None and self.f.setting != self.setting:
            raise ValueError("correction function is over another setting")

    @property
    def correction(self) -> CorrectionFunction:
        return self.f if self.f is not None else CorrectionFunction.zero(self.setting)

    def gcopy(self, u: Sequence[int], g: int) -> GCopy:
        """Checked constructor: g must lie in G."""
        u = tuple(u)
        if u not in self.setting.k1set_index:
            raise ValueError(f"{u!r} is not a (k+1)-set of I")
        if not self.setting.g_membership(g):
            raise ValueError(f"{g:#x} is not in G")
        return GCopy(u, g)

    def owns(self, e) -> bool:
        """Whether ``e`` is an element of this model's universe."""
        st = self.setting
        if isinstance(e, Index):
            return 0 <= e.a < st.n
        if isinstance(e, KSet):
            return e.u in st.kset_index
        if isinstance(e, K1Set):
            return e.u in st.k1set_index
        if isinstance(e, HCopy):
            return e.u in st.kset_index and 0 <= e.s < len(st.S) and 0 <= e.h < st.h_size()
        if isinstance(e, Z2Copy):
            return e.u in st.kset_index and 0 <= e.s < len(st.S) and e.i in (0, 1)
        if isinstance(e, HPure):
            return 0 <= e.h < st.h_size()
        if isinstance(e, GCopy):
            return e.u in st.k1set_index and st.g_membership(e.g)
        return False

    def sort_elements(self, sort: str) -> Iterator:
        st = self.setting
        if sort == "Index":
            yield from (Index(a) for a in st.I)
        elif sort == "KSet":
            yield from (KSet(u) for u in st.k_sets)
        elif sort == "K1Set":
            yield from (K1Set(u) for u in st.k1_sets)
        elif sort == "HCopy":
            for u in st.k_sets:
                for s in st.S:
                    for h in range(st.h_size()):
                        yield HCopy(u, s, h)
        elif sort == "Z2Copy":
            for u in st.k_sets:
                for s in st.S:
                    yield Z2Copy(u, s, 0)
                    yield Z2Copy(u, s, 1)
        elif sort == "HPure":
            yield from (HPure(h) for h in range(st.h_size()))
        elif sort == "GCopy":
            gs = st.g_elements()
            for u in st.k1_sets:
                for g in gs:
                    yield GCopy(u, g)
        else:
            raise UnknownSymbol(sort)

    def elements(self) -> Iterator:
        for sort in SORTS:
            yield from self.sort_elements(sort)


def predicate_names(setting: Setting) -> list[tuple[str, int | None]]:
    names: list[tuple[str, int | None]] = [("P0", None), ("P11", None), ("P12", None), ("P2", None)]
    names += [("P2s", s) for s in setting.S]
    names += [("P3", None)]
    names += [("P3s", s) for s in setting.S]
    names += [("P4", None), ("P5", None)]
    return names


def eval_predicate(M: ModelHandle, name: str, e, s: int | None = None) -> bool:
    """Sort-membership predicates of the tau^- vocabulary."""
    if name in ("P2s", "P3s"):
        if s is None:
            raise ArityError(f"{name} needs its s parameter")
    elif s is not None:
        raise ArityError(f"{name} takes no s parameter")
    if name not in ("P0", "P11", "P12", "P2", "P2s", "P3", "P3s", "P4", "P5"):
        raise UnknownSymbol(name)
    if not M.owns(e):
        return False
    if name == "P0":
        return isinstance(e, Index)
    if name == "P11":
        return isinstance(e, KSet)
    if name == "P12":
        return isinstance(e, K1Set)
    if name == "P2":
        return isinstance(e, HCopy)
    if name == "P2s":
        return isinstance(e, HCopy) and e.s == s
    if name == "P3":
        return isinstance(e, Z2Copy)
    if name == "P3s":
        return isinstance(e, Z2Copy) and e.s == s
    if name == "P4":
        return isinstance(e, HPure)
    return isinstance(e, GCopy)


def function_names(setting: Setting) -> list[tuple[str, int | None]]:
    names: list[tuple[str, int | None]] = [(f"pi{l}", None) for l in range(setting.k + 1)]
    names += [("F2", None), ("F3", None), ("F4", None), ("F5", None)]
    names += [("F3g", g) for g in setting.g_elements()]
    return names


def function_arity(name: str) -> int:
    return 2 if name == "F4" else 1


def eval_function(M: ModelHandle, name: str, *args, g: int | None = None):
    """Partial functions of tau^-; UNDEFINED outside each domain.

    ``pi<l>`` returns the l-th member of the ascending view of a k-set
    (l < k) or (k+1)-set (l <= k). ``F3g`` needs ``g`` (an element of G).
    """
    k = M.setting.k
    if name.startswith("pi"):
        try:
            l = int(name[2:])
        except ValueError:
            raise UnknownSymbol(name) from None
        if not 0 <= l <= k:
            raise UnknownSymbol(name)
    elif name not in ("F2", "F3", "F4", "F5", "F3g"):
        raise UnknownSymbol(name)
    if (name == "F3g") != (g is not None):
        raise ArityError("F3g takes a g parameter; other functions do not")
    arity = function_arity(name)
    if len(args) != arity:
        raise ArityError(f"{name} takes {arity} argument(s), got {len(args)}")
    if not all(M.owns(a) for a in args):
        return UNDEFINED
    if name.startswith("pi"):
        (e,) = args
        if isinstance(e, (KSet, K1Set)) and l < len(e.u):
            return Index(e.u[l])
        return UNDEFINED
    if name == "F2":
        (e,) = args
        return KSet(e.u) if isinstance(e, HCopy) else UNDEFINED
    if name == "F3":
        (e,) = args
        return KSet(e.u) if isinstance(e, Z2Copy) else UNDEFINED
    if name == "F5":
        (e,) = args
        return K1Set(e.u) if isinstance(e, GCopy) else UNDEFINED
    if name == "F4":
        x, h1 = args
        if isinstance(x, HCopy) and isinstance(h1, HPure):
            return HCopy(x.u, x.s, x.h ^ h1.h)
        return UNDEFINED
    # F3g
    if not M.setting.g_membership(g):
        raise UnknownSymbol(f"F3g[{g:#x}]: parameter not in G")
    (e,) = args
    return GCopy(e.u, e.g ^ g) if isinstance(e, GCopy) else UNDEFINED


def q_s_holds(M: ModelHandle, s: int, tup: Sequence) -> bool:
    """Membership of ``<a_0..a_k, u_0..u_k, x_0..x_{k-1}, y_k, z>`` in Q_s.

    The a's must be distinct and ascending (a (k+1)-set is identified with its
    ascending tuple), u_l the k-set omitting a_l, x_l a Z_2-copy over (u_l, s),
    y_k an H-copy over (u_k, s), z a G-copy over u; then the parity equation
    sum_{l<k} i_l = h_k(u_0) + g(s) + f(u, s) must hold.
    """
    st = M.setting
    k = st.k
    if len(tup) != 3 * k + 4 or not 0 <= s < len(st.S):
        return False
    a_el = tup[: k + 1]
    u_el = tup[k + 1 : 2 * k + 2]
    x_el = tup[2 * k + 2 : 3 * k + 2]
    y, z = tup[3 * k + 2], tup[3 * k + 3]
    # (alpha)
    if not all(isinstance(e, Index) and 0 <= e.a < st.n for e in a_el):
        return False
    a = tuple(e.a for e in a_el)
    if any(a[i] >= a[i + 1] for i in range(k)):
        return False
    # (beta)
    subs = [a[:l] + a[l + 1 :] for l in range(k + 1)]
    for e, sub in zip(u_el, subs):
        if not (isinstance(e, KSet) and e.u == sub):
            return False
    # (gamma)
    if not (isinstance(y, HCopy) and y.u == subs[k] and y.s == s and 0 <= y.h < st.h_size()):
        return False
    # (delta)
    for e, sub in zip(x_el, subs):
        if not (isinstance(e, Z2Copy) and e.u == sub and e.s == s and e.i in (0, 1)):
            return False
    # (epsilon)
    if not (isinstance(z, GCopy) and z.u == a and st.g_membership(z.g)):
        return False
    # (zeta)_f
    lhs = sum(e.i for e in x_el) & 1
    h_at_u0 = (y.h >> st.kset_index[subs[0]]) & 1
    g_at_s = (z.g >> s) & 1
    f_at = M.f(a, s) if M.f is not None else 0
    return lhs == (h_at_u0 ^ g_at_s ^ f_at)


def q_tuple(setting: Setting, u: tuple[int, ...], s: int, xs: Sequence[int], h: int, g: int) -> tuple:
    """Assemble the Q_s candidate for (k+1)-set ``u`` from group coordinates."""
    k = setting.k
    subs = [u[:l] + u[l + 1 :] for l in range(k + 1)]
    return (
        tuple(Index(a) for a in u)
        + tuple(KSet(v) for v in subs)
        + tuple(Z2Copy(subs[l], s, xs[l]) for l in range(k))
        + (HCopy(subs[k], s, h), GCopy(u, g))
    )


@dataclass(frozen=True)
class TauMinusReduct:
    """The Q-free part of a model; it depends only on the setting."""

    setting: Setting

    def eval_predicate(self, name, e, s=None) -> bool:
        return eval_predicate(ModelHandle(self.setting), name, e, s)

    def eval_function(self, name, *args, g=None):
        return eval_function(ModelHandle(self.setting), name, *args, g=g)


def reduct_tau_minus(M: ModelHandle) -> TauMinusReduct:
    return TauMinusReduct(M.setting)


# -- explicit structures -----------------------------------------------------


def element_name(setting: Setting, e) -> str:
    if isinstance(e, Index):
        return f"I:{e.a}"
    if isinstance(e, KSet):
        return f"K:{kset_text(e.u)}"
    if isinstance(e, K1Set):
        return f"K1:{kset_text(e.u)}"
    if isinstance(e, HCopy):
        return f"H:{kset_text(e.u)}/{s_text(e.s)}/{h_text(setting, e.h)}"
    if isinstance(e, Z2Copy):
        return f"Z:{kset_text(e.u)}/{s_text(e.s)}/{e.i}"
    if isinstance(e, HPure):
        return f"HP:{h_text(setting, e.h)}"
    if isinstance(e, GCopy):
        return f"G:{kset_text(e.u)}/{g_text(setting, e.g)}"
    raise TypeError(f"not an element: {e!r}")


def parse_s(text: str) -> int:
    if not (text.startswith("{") and text.endswith("}")):
        raise ValueError(f"bad S element {text!r}")
    return members_mask(decode_subset(text[1:-1]))


def parse_element_name(setting: Setting, name: str):
    """Inverse of :func:`element_name`; raises ValueError on foreign names."""
    sort, _, payload = name.partition(":")
    if not _:
        raise ValueError(f"no sort tag in {name!r}")
    if sort == "I":
        return Index(int(payload))
    if sort == "K":
        return KSet(decode_subset(payload))
    if sort == "K1":
        return K1Set(decode_subset(payload))
    if sort == "HP":
        return HPure(parse_h(setting, payload))
    parts = payload.split("/")
    if sort == "H" and len(parts) == 3:
        return HCopy(decode_subset(parts[0]), parse_s(parts[1]), parse_h(setting, parts[2]))
    if sort == "Z" and len(parts) == 3:
        return Z2Copy(decode_subset(parts[0]), parse_s(parts[1]), int(parts[2]))
    if sort == "G" and len(parts) == 2:
        g = 0
        if parts[1]:
            for t in parts[1].split(";"):
                g |= 1 << parse_s(t)
        return GCopy(decode_subset(parts[0]), g)
    raise ValueError(f"unparseable element name {name!r}")


def parse_h(setting: Setting, text: str) -> int:
    h = 0
    if text:
        for t in text.split(";"):
            h |= 1 << setting.kset_index[decode_subset(t)]
    return h


def relation_key(name: str, s: int | None) -> str:
    return name if s is None else f"{name}{s_text(s)}"


def function_key(setting: Setting, name: str, g: int | None) -> str:
    return name if g is None else f"{name}[{g_text(setting, g)}]"


@dataclass
class ExplicitStructure:
    """A finite structure with named elements.

    ``relations`` maps a relation symbol to a set of element-index tuples (unary
    predicates are arity-1 relations); ``functions`` maps a function symbol to a
    dict from argument-index tuples to the result index. ``meta`` carries the
    setting parameters when known.
    """

    names: list[str]
    relations: dict[str, set[tuple[int, ...]]]
    rel_arity: dict[str, int]
    functions: dict[str, dict[tuple[int, ...], int]]
    fun_arity: dict[str, int]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.index = {nm: i for i, nm in enumerate(self.names)}
        if len(self.index) != len(self.names):
            raise ValueError("duplicate element names")

    def __len__(self) -> int:
        return len(self.names)

    def vocabulary(self) -> tuple:
        return (
            tuple(sorted(self.rel_arity.items())),
            tuple(sorted(self.fun_arity.items())),
        )

    def facts(self, include_q: bool = True) -> set[tuple]:
        """Name-level facts, for literal comparisons."""
        out = set()
        nm = self.names
        for r, tuples in self.relations.items():
            if not include_q and r.startswith("Q"):
                continue
            for t in tuples:
                out.add(("rel", r) + tuple(nm[i] for i in t))
        for fn, table in self.functions.items():
            for args, res in table.items():
                out.add(("fun", fn) + tuple(nm[i] for i in args) + ("=", nm[res]))
        return out

    def relabeled(self, perm: Sequence[int], names: Sequence[str] | None = None) -> "ExplicitStructure":
        """Copy with element i renamed and moved to position perm[i]."""
        n = len(self.names)
        new_names = [""] * n
        for i, p in enumerate(perm):
            new_names[p] = names[i] if names is not None else f"e{p}"
        rels = {r: {tuple(perm[i] for i in t) for t in ts} for r, ts in self.relations.items()}
        funs = {
            fn: {tuple(perm[i] for i in a): perm[v] for a, v in tbl.items()}
            for fn, tbl in self.functions.items()
        }
        return ExplicitStructure(new_names, rels, dict(self.rel_arity), funs, dict(self.fun_arity), dict(self.meta))

    # -- text format -------------------------------------------------------
    def to_text(self) -> str:
        lines = ["structure " + " ".join(f"{k}={v}" for k, v in sorted(self.meta.items()))]
        for nm in self.names:
            lines.append(f"element {nm}")
        for r in self.rel_arity:
            lines.append(f"relation {r} {self.rel_arity[r]}")
        for fn in self.fun_arity:
            lines.append(f"function {fn} {self.fun_arity[fn]}")
        nm = self.names
        for r in self.rel_arity:
            for t in sorted(self.relations[r]):
                lines.append("rel " + r + " " + " ".join(nm[i] for i in t))
        for fn in self.fun_arity:
            for args in sorted(self.functions[fn]):
                lines.append("fun " + fn + " " + " ".join(nm[i] for i in args) + " = " + nm[self.functions[fn][args]])
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ExplicitStructure":
        names: list[str] = []
        rel_arity: dict[str, int] = {}
        fun_arity: dict[str, int] = {}
        rel_lines = []
        fun_lines = []
        meta: dict = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            head, _, rest = line.partition(" ")
            if head == "structure":
                for tok in rest.split():
                    key, _, val = tok.partition("=")
                    meta[key] = int(val) if val.lstrip("-").isdigit() else val
            elif head == "element":
                names.append(rest)
            elif head == "relation":
                r, ar = rest.rsplit(" ", 1)
                rel_arity[r] = int(ar)
            elif head == "function":
                fn, ar = rest.rsplit(" ", 1)
                fun_arity[fn] = int(ar)
            elif head == "rel":
                rel_lines.append((lineno, rest.split()))
            elif head == "fun":
                fun_lines.append((lineno, rest.split()))
            else:
                raise ValueError(f"line {lineno}: unknown record {head!r}")
        index = {nm: i for i, nm in enumerate(names)}
        relations: dict[str, set[tuple[int, ...]]] = {r: set() for r in rel_arity}
        functions: dict[str, dict[tuple[int, ...], int]] = {f: {} for f in fun_arity}
        try:
            for lineno, toks in rel_lines:
                r = toks[0]
                t = tuple(index[x] for x in toks[1:])
                if len(t) != rel_arity[r]:
                    raise ValueError(f"line {lineno}: arity mismatch for {r}")
                relations[r].add(t)
            for lineno, toks in fun_lines:
                fn = toks[0]
                if toks[-2] != "=":
                    raise ValueError(f"line {lineno}: expected '= result'")
                args = tuple(index[x] for x in toks[1:-2])
                if len(args) != fun_arity[fn]:
                    raise ValueError(f"line {lineno}: arity mismatch for {fn}")
                functions[fn][args] = index[toks[-1]]
        except KeyError as exc:
            raise ValueError(f"undeclared symbol or element {exc}") from None
        return cls(names, relations, rel_arity, functions, fun_arity, meta)


DEFAULT_CAP = 200_000


def universe_size(setting: Setting) -> int:
    return sum(setting.sizes().values())


def check_budget(setting: Setting, cap: int) -> None:
    sizes = setting.sizes()
    total = sum(sizes.values())
    if total > cap:
        sort = max(sizes, key=sizes.get)
        raise BudgetExceeded(sort, sizes[sort], cap, total)


def materialize(M: ModelHandle, cap: int = DEFAULT_CAP, include_q: bool = True) -> ExplicitStructure:
    """Expand the model into explicit tables (element order: sort by sort)."""
    st = M.setting
    check_budget(st, cap)
    elems = list(M.elements())
    names = [element_name(st, e) for e in elems]
    idx = {e: i for i, e in enumerate(elems)}

    relations: dict[str, set[tuple[int, ...]]] = {}
    rel_arity: dict[str, int] = {}
    for name, s in predicate_names(st):
        key = relation_key(name, s)
        rel_arity[key] = 1
        relations[key] = {(i,) for i, e in enumerate(elems) if eval_predicate(M, name, e, s)}

    functions: dict[str, dict[tuple[int, ...], int]] = {}
    fun_arity: dict[str, int] = {}
    hpure = [e for e in elems if isinstance(e, HPure)]
    for name, g in function_names(st):
        key = function_key(st, name, g)
        ar = function_arity(name)
        fun_arity[key] = ar
        table: dict[tuple[int, ...], int] = {}
        if ar == 1:
            for i, e in enumerate(elems):
                r = eval_function(M, name, e, g=g)
                if r is not UNDEFINED:
                    table[(i,)] = idx[r]
        else:
            for i, e in enumerate(elems):
                if not isinstance(e, HCopy):
                    continue
                for hp in hpure:
                    r = eval_function(M, name, e, hp)
                    if r is not UNDEFINED:
                        table[(i, idx[hp])] = idx[r]
        functions[key] = table

    if include_q:
        k = st.k
        gs = st.g_elements()
        for s in st.S:
            key = relation_key("Q", s)
            rel_arity[key] = 3 * k + 4
            tuples = set()
            for u in st.k1_sets:
                for xs in product((0, 1), repeat=k):
                    for h in range(st.h_size()):
                        for g in gs:
                            tup = q_tuple(st, u, s, xs, h, g)
                            if q_s_holds(M, s, tup):
                                tuples.add(tuple(idx[e] for e in tup))
            relations[key] = tuples

    meta = {"k": st.k, "n": st.n, "m": st.m}
    return ExplicitStructure(names, relations, rel_arity, functions, fun_arity, meta)


def _setting_from_meta(E: ExplicitStructure) -> Setting | None:
    try:
        return Setting(int(E.meta["k"]), int(E.meta["n"]), int(E.meta["m"]))
    except (KeyError, ValueError):
        return None


def is_strongly_standard(E: ExplicitStructure) -> bool:
    """The tau^- part literally equals the canonical construction over P_0."""
    st = _setting_from_meta(E)
    if st is None:
        return False
    p0 = sorted(E.names[t[0]] for t in E.relations.get("P0", ()))
    if p0 != sorted(f"I:{a}" for a in range(st.n)):
        return False
    canon = materialize(ModelHandle(st), cap=max(DEFAULT_CAP, len(E) + 1), include_q=False)
    if sorted(canon.names) != sorted(E.names):
        return False
    if {r for r in E.rel_arity if not r.startswith("Q")} != set(canon.rel_arity):
        return False
    if set(E.fun_arity) != set(canon.fun_arity):
        return False
    return E.facts(include_q=False) == canon.facts()


def is_standard(E: ExplicitStructure) -> bool:
    """P_{1,1} and P_{1,2} are literally the k- and (k+1)-subsets of P_0 with
    natural projections."""
    try:
        k = int(E.meta["k"])
    except (KeyError, ValueError):
        return False
    nm = E.names
    p0 = set()
    for (i,) in E.relations.get("P0", ()):
        sort, _, payload = nm[i].partition(":")
        if sort != "I" or not payload.isdigit():
            return False
        p0.add(int(payload))
    for pred, size in (("P11", k), ("P12", k + 1)):
        got = set()
        for (i,) in E.relations.get(pred, ()):
            sort, _, payload = nm[i].partition(":")
            if sort != ("K" if size == k else "K1"):
                return False
            try:
                u = decode_subset(payload)
            except ValueError:
                return False
            got.add(u)
            for l in range(size):
                table = E.functions.get(f"pi{l}", {})
                res = table.get((i,))
                if res is None or nm[res] != f"I:{u[l]}":
                    return False
        if got != set(combinations(sorted(p0), size)):
            return False
    return True


def random_element(M: ModelHandle, rng: random.Random):
    st = M.setting
    sort = rng.choice([s for s in SORTS if st.sizes()[s] > 0])
    if sort == "Index":
        return Index(rng.randrange(st.n))
    if sort == "KSet":
        return KSet(rng.choice(st.k_sets))
    if sort == "K1Set":
        return K1Set(rng.choice(st.k1_sets))
    if sort == "HCopy":
        return HCopy(rng.choice(st.k_sets), rng.choice(st.S), rng.randrange(st.h_size()))
    if sort == "Z2Copy":
        return Z2Copy(rng.choice(st.k_sets), rng.choice(st.S), rng.randrange(2))
    if sort == "HPure":
        return HPure(rng.randrange(st.h_size()))
    return GCopy(rng.choice(st.k1_sets), rng.choice(st.g_elements()))


__all__ = [
    "Index", "KSet", "K1Set", "HCopy", "Z2Copy", "HPure", "GCopy", "UNDEFINED",
    "CorrectionFunction", "ModelHandle", "ExplicitStructure", "eval_predicate",
    "eval_function", "q_s_holds", "q_tuple", "materialize", "is_strongly_standard",
    "is_standard", "reduct_tau_minus",
]
