"""Choices of zeros (x, y, z), J*, and the correction function of a choice.

A choice stores group coordinates only: the Z_2 bit of each x_{u,s}, the
H-element of each y_{u,s} and the G-element of each z_u. Elements are
assembled on demand when the definitional route through Q_s is wanted.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Mapping

from .model import CorrectionFunction, ModelHandle, parse_h, parse_s, q_s_holds, q_tuple
from .setting import Setting, decode_subset, g_text, h_text, kset_text, s_text


class MergeConflict(ValueError):
    def __init__(self, coord: tuple, left, right):
        super().__init__(f"choices disagree at {coord!r}: {left!r} vs {right!r}")
        self.coord = coord
        self.left = left
        self.right = right


class ChoiceError(ValueError):
    """Malformed choice (domain shape or a z outside G)."""


def j_star(setting: Setting, J: Iterable[tuple[int, ...]]) -> frozenset:
    """(k+1)-sets all of whose k-subsets lie in J."""
    J = set(J)
    out = []
    for u in setting.k1_sets:
        if all(u[:l] + u[l + 1 :] in J for l in range(len(u))):
            out.append(u)
    return frozenset(out)


def k_sets_of(setting: Setting, A: Iterable[int]) -> frozenset:
    return frozenset(combinations(sorted(set(A)), setting.k))


def k1_sets_of(setting: Setting, A: Iterable[int]) -> frozenset:
    return frozenset(combinations(sorted(set(A)), setting.k + 1))


@dataclass(frozen=True, eq=False)
class Choice:
    """A (J0, J1, J2)-choice.

    ``x[(u, s)]`` is a bit, ``y[(u, s)]`` an H-element (int over k_sets),
    ``z[u]`` a G-element (int over S).
    """

    setting: Setting
    J0: frozenset
    J1: frozenset
    J2: frozenset
    x: Mapping = field(default_factory=dict)
    y: Mapping = field(default_factory=dict)
    z: Mapping = field(default_factory=dict)

    def __post_init__(self):
        st = self.setting
        for nm in ("J0", "J1", "J2"):
            object.__setattr__(self, nm, frozenset(tuple(u) for u in getattr(self, nm)))
        for u in self.J0 | self.J1:
            if u not in st.kset_index:
                raise ChoiceError(f"{u!r} is not a k-set of I")
        for u in self.J2:
            if u not in st.k1set_index:
                raise ChoiceError(f"{u!r} is not a (k+1)-set of I")
        xs = {(u, s) for u in self.J0 for s in st.S}
        ys = {(u, s) for u in self.J1 for s in st.S}
        if set(self.x) != xs:
            raise ChoiceError("x must be defined exactly on J0 x S")
        if set(self.y) != ys:
            raise ChoiceError("y must be defined exactly on J1 x S")
        if set(self.z) != set(self.J2):
            raise ChoiceError("z must be defined exactly on J2")
        for key, v in self.x.items():
            if v not in (0, 1):
                raise ChoiceError(f"x{key!r} = {v!r} is not a bit")
        hs = st.h_size()
        for key, v in self.y.items():
            if not 0 <= v < hs:
                raise ChoiceError(f"y{key!r} is not an element of H")
        for u, g in self.z.items():
            if not st.g_membership(g):
                raise ChoiceError(f"z{u!r} = {g:#x} is not in G")
        object.__setattr__(self, "x", dict(self.x))
        object.__setattr__(self, "y", dict(self.y))
        object.__setattr__(self, "z", dict(self.z))

    # -- constructors ------------------------------------------------------
    @classmethod
    def empty(cls, setting: Setting) -> "Choice":
        return cls(setting, frozenset(), frozenset(), frozenset())

    @classmethod
    def zeros(cls, setting: Setting, J0, J1, J2) -> "Choice":
        J0, J1, J2 = (frozenset(map(tuple, J)) for J in (J0, J1, J2))
        return cls(
            setting,
            J0,
            J1,
            J2,
            {(u, s): 0 for u in J0 for s in setting.S},
            {(u, s): 0 for u in J1 for s in setting.S},
            {u: 0 for u in J2},
        )

    @classmethod
    def zeros_over(cls, setting: Setting, A: Iterable[int]) -> "Choice":
        """All-zero choice on the domains induced by a subset A of I."""
        A = list(A)
        ks = k_sets_of(setting, A)
        return cls.zeros(setting, ks, ks, k1_sets_of(setting, A))

    @classmethod
    def for_J(cls, setting: Setting, J, x, y, z) -> "Choice":
        """A (J, J, J*)-choice."""
        J = frozenset(map(tuple, J))
        return cls(setting, J, J, j_star(setting, J), x, y, z)

    # -- basic views -------------------------------------------------------
    def __eq__(self, other) -> bool:
        if not isinstance(other, Choice):
            return NotImplemented
        return (
            self.setting == other.setting
            and (self.J0, self.J1, self.J2) == (other.J0, other.J1, other.J2)
            and self.x == other.x
            and self.y == other.y
            and self.z == other.z
        )

    def __hash__(self) -> int:
        return hash((self.setting, self.J0, self.J1, self.J2, frozenset(self.x.items()),
                     frozenset(self.y.items()), frozenset(self.z.items())))

    def eligible(self) -> list[tuple[tuple[int, ...], int]]:
        """(u, s) pairs where the choice determines a Q_s candidate."""
        k = self.setting.k
        out = []
        for u in sorted(self.J2):
            subs = [u[:l] + u[l + 1 :] for l in range(k + 1)]
            if all(v in self.J0 for v in subs[:k]) and subs[k] in self.J1:
                out.extend((u, s) for s in self.setting.S)
        return out

    def is_global(self) -> bool:
        st = self.setting
        full = frozenset(st.k_sets)
        return self.J0 == full and self.J1 == full and self.J2 == frozenset(st.k1_sets)

    def index_support(self) -> frozenset:
        """Indices mentioned by the domains."""
        return frozenset(a for J in (self.J0, self.J1, self.J2) for u in J for a in u)

    def __add__(self, other: "Choice") -> "Choice":
        if (self.setting, self.J0, self.J1, self.J2) != (other.setting, other.J0, other.J1, other.J2):
            raise ChoiceError("coordinatewise sum needs identical domains")
        return Choice(
            self.setting,
            self.J0,
            self.J1,
            self.J2,
            {key: v ^ other.x[key] for key, v in self.x.items()},
            {key: v ^ other.y[key] for key, v in self.y.items()},
            {key: v ^ other.z[key] for key, v in self.z.items()},
        )


def canonical_choice(M: ModelHandle) -> Choice:
    """The global choice picking the zero coordinate of every copy."""
    st = M.setting
    return Choice.zeros(st, st.k_sets, st.k_sets, st.k1_sets)


def restrict(c: Choice, J0=None, J1=None, J2=None) -> Choice:
    J0 = c.J0 if J0 is None else frozenset(map(tuple, J0))
    J1 = c.J1 if J1 is None else frozenset(map(tuple, J1))
    J2 = c.J2 if J2 is None else frozenset(map(tuple, J2))
    if not (J0 <= c.J0 and J1 <= c.J1 and J2 <= c.J2):
        raise ChoiceError("restriction domains must be subsets of the original")
    return Choice(
        c.setting,
        J0,
        J1,
        J2,
        {key: v for key, v in c.x.items() if key[0] in J0},
        {key: v for key, v in c.y.items() if key[0] in J1},
        {u: v for u, v in c.z.items() if u in J2},
    )


def restrict_to(c: Choice, A: Iterable[int]) -> Choice:
    """Restriction to the domains induced by a subset A of I."""
    A = set(A)
    return restrict(
        c,
        [u for u in c.J0 if set(u) <= A],
        [u for u in c.J1 if set(u) <= A],
        [u for u in c.J2 if set(u) <= A],
    )


def merge(c1: Choice, c2: Choice) -> Choice:
    """Union of two choices; raises MergeConflict at the first disagreement."""
    if c1.setting != c2.setting:
        raise ChoiceError("choices over different settings")
    x = dict(c1.x)
    y = dict(c1.y)
    z = dict(c1.z)
    for src, dst, tag in ((c2.x, x, "x"), (c2.y, y, "y"), (c2.z, z, "z")):
        for key in sorted(src):
            if key in dst and dst[key] != src[key]:
                raise MergeConflict((tag, key), dst[key], src[key])
            dst[key] = src[key]
    return Choice(c1.setting, c1.J0 | c2.J0, c1.J1 | c2.J1, c1.J2 | c2.J2, x, y, z)


# -- corrections -------------------------------------------------------------


def _assemble(c: Choice, u: tuple[int, ...], s: int) -> tuple:
    k = c.setting.k
    subs = [u[:l] + u[l + 1 :] for l in range(k + 1)]
    xs = [c.x[(subs[l], s)] for l in range(k)]
    return q_tuple(c.setting, u, s, xs, c.y[(subs[k], s)], c.z[u])


def correction_of(M: ModelHandle, c: Choice) -> dict:
    """Partial correction of ``c``: {(u, s): bit}, 0 iff the assembled
    ascending tuple lies in Q_s."""
    if c.setting != M.setting:
        raise ChoiceError("choice and model are over different settings")
    return {(u, s): 0 if q_s_holds(M, s, _assemble(c, u, s)) else 1 for u, s in c.eligible()}


def correction_closed_form(M: ModelHandle, c: Choice) -> dict:
    """f_M(u,s) + sum_{l<k} x(u_l,s) + y(u_k,s)(u_0) + z(u)(s)."""
    st = M.setting
    k = st.k
    f = M.correction
    out = {}
    for u, s in c.eligible():
        subs = [u[:l] + u[l + 1 :] for l in range(k + 1)]
        v = f(u, s)
        for l in range(k):
            v ^= c.x[(subs[l], s)]
        v ^= (c.y[(subs[k], s)] >> st.kset_index[subs[0]]) & 1
        v ^= (c.z[u] >> s) & 1
        out[(u, s)] = v
    return out


def is_zero_correction(M: ModelHandle, c: Choice) -> bool:
    return not any(correction_of(M, c).values())


def as_correction_function(M: ModelHandle, c: Choice) -> CorrectionFunction:
    """The correction of a global choice, as a CorrectionFunction."""
    if not c.is_global():
        raise ChoiceError("only global choices have a total correction")
    return CorrectionFunction.from_values(M.setting, correction_of(M, c))


def random_choice(setting: Setting, J0, J1, J2, rng: random.Random) -> Choice:
    gs = setting.g_elements()
    J0, J1, J2 = (sorted(map(tuple, J)) for J in (J0, J1, J2))
    return Choice(
        setting,
        J0,
        J1,
        J2,
        {(u, s): rng.randrange(2) for u in J0 for s in setting.S},
        {(u, s): rng.randrange(setting.h_size()) for u in J1 for s in setting.S},
        {u: rng.choice(gs) for u in J2},
    )


# -- compatible systems ------------------------------------------------------


def proper_subsets(m2: int) -> list[frozenset]:
    return [frozenset(c) for r in range(m2) for c in combinations(range(m2), r)]


@dataclass(frozen=True)
class CompatibleSystem:
    """Choices indexed by proper subsets s of {0..m2-1}; choice_s lives over
    A_s = base + {points[t] : t in s}. The amalgam lives over base + all points."""

    setting: Setting
    m2: int
    base: frozenset
    points: tuple[int, ...]
    choices: Mapping

    def __post_init__(self):
        object.__setattr__(self, "base", frozenset(self.base))
        object.__setattr__(self, "points", tuple(self.points))
        if len(self.points) != self.m2 or len(set(self.points)) != self.m2:
            raise ChoiceError("need m2 distinct new points")
        if set(self.points) & self.base:
            raise ChoiceError("new points must lie outside the base")
        want = set(proper_subsets(self.m2))
        got = {frozenset(s) for s in self.choices}
        if got != want:
            raise ChoiceError("choices must be indexed by exactly the proper subsets of m2")
        chs = {frozenset(s): c for s, c in self.choices.items()}
        object.__setattr__(self, "choices", chs)
        for s, c in chs.items():
            A = self.A(s)
            dom = Choice.zeros_over(self.setting, A)
            if (c.J0, c.J1, c.J2) != (dom.J0, dom.J1, dom.J2):
                raise ChoiceError(f"choice at {sorted(s)} is not over A_s = {sorted(A)}")
        for s in chs:
            for t in chs:
                if s < t and restrict_to(chs[t], self.A(s)) != chs[s]:
                    raise ChoiceError(f"choice at {sorted(s)} is not the restriction of {sorted(t)}")

    def A(self, s) -> frozenset:
        return self.base | {self.points[t] for t in s}

    @property
    def target(self) -> frozenset:
        return self.base | set(self.points)


# -- serialization -----------------------------------------------------------


def choice_to_record(c: Choice) -> dict:
    st = c.setting
    return {
        "setting": st.to_record(),
        "J0": sorted(kset_text(u) for u in c.J0),
        "J1": sorted(kset_text(u) for u in c.J1),
        "J2": sorted(kset_text(u) for u in c.J2),
        "x": {f"{kset_text(u)}/{s_text(s)}": v for (u, s), v in sorted(c.x.items())},
        "y": {f"{kset_text(u)}/{s_text(s)}": h_text(st, v) for (u, s), v in sorted(c.y.items())},
        "z": {kset_text(u): g_text(st, v) for u, v in sorted(c.z.items())},
    }


def _key(text: str) -> tuple[tuple[int, ...], int]:
    u, _, s = text.partition("/")
    return decode_subset(u), parse_s(s)


def choice_from_record(rec: dict) -> Choice:
    st = Setting.from_record(rec["setting"])
    x = {_key(t): int(v) for t, v in rec["x"].items()}
    y = {_key(t): parse_h(st, v) for t, v in rec["y"].items()}
    z = {}
    for t, v in rec["z"].items():
        g = 0
        if v:
            for part in v.split(";"):
                g |= 1 << parse_s(part)
        z[decode_subset(t)] = g
    return Choice(
        st,
        [decode_subset(t) for t in rec["J0"]],
        [decode_subset(t) for t in rec["J1"]],
        [decode_subset(t) for t in rec["J2"]],
        x,
        y,
        z,
    )


def dumps(c: Choice) -> str:
    return json.dumps(choice_to_record(c), sort_keys=True, indent=1)


def loads(text: str) -> Choice:
    return choice_from_record(json.loads(text))
