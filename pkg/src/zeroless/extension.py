"""Extending partial zero-correction choices.

The transfinite constructions become finite loops: one index at a time, each
step either following the explicit recipe (new x-bits zero, y solved by
characteristic functions, z glued along an injection into Lam) or solving
the linear system for the free coordinates. Every returned choice is
rechecked through Q_s before it leaves this module.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable

from .choices import (
    Choice,
    ChoiceError,
    CompatibleSystem,
    correction_of,
    k1_sets_of,
    k_sets_of,
    merge,
)
from .classification import coboundary_image
from .gf2 import Basis, Gf2Matrix, Gf2Vector, solve
from .model import ModelHandle


class PreconditionError(ValueError):
    pass


class SoundnessError(AssertionError):
    """A constructed choice failed the Q_s recheck (a bug, never data)."""


@dataclass
class TraceEntry:
    step: str
    detail: dict

    def to_line(self) -> str:
        body = " ".join(f"{k}={_fmt(v)}" for k, v in sorted(self.detail.items()))
        return f"{self.step} {body}".rstrip()


def _fmt(v) -> str:
    if isinstance(v, (set, frozenset)):
        v = sorted(v)
    if isinstance(v, (list, tuple)):
        return ",".join(_fmt(x) for x in v) if v else "-"
    return str(v)


@dataclass
class ExtensionResult:
    choice: Choice | None
    trace: list[TraceEntry] = field(default_factory=list)
    stuck: int | None = None
    certificate: list | None = None

    @property
    def ok(self) -> bool:
        return self.choice is not None

    def __bool__(self) -> bool:
        return self.ok

    def trace_text(self) -> str:
        return "".join(e.to_line() + "\n" for e in self.trace)


def assert_zero(M: ModelHandle, c: Choice) -> Choice:
    bad = [key for key, v in correction_of(M, c).items() if v]
    if bad:
        raise SoundnessError(f"constructed choice has nonzero correction at {bad[0]!r}")
    return c


def require_zero(M: ModelHandle, c: Choice) -> None:
    bad = [key for key, v in correction_of(M, c).items() if v]
    if bad:
        raise PreconditionError(f"partial choice has nonzero correction at {bad[0]!r}")


# -- the linear system -------------------------------------------------------


def _subs(u):
    return [u[:l] + u[l + 1 :] for l in range(len(u))]


def solve_extension(M: ModelHandle, fixed: Choice, target: Iterable[int]):
    """Extend ``fixed`` to a zero-correction choice over the domains induced by
    ``target``. Returns (choice or None, info dict)."""
    st = M.setting
    k = st.k
    T = sorted(set(target))
    ksets = sorted(k_sets_of(st, T))
    k1sets = sorted(k1_sets_of(st, T))
    extra = fixed.index_support() - set(T)
    if extra:
        raise PreconditionError(f"fixed choice mentions indices {sorted(extra)} outside the target")
    f = M.correction
    gpos = [gb.bit_length() - 1 for gb in st.g_basis_vectors]

    unknowns: list[tuple] = []
    uidx: dict[tuple, int] = {}

    def var(label):
        if label not in uidx:
            uidx[label] = len(unknowns)
            unknowns.append(label)
        return uidx[label]

    rows = []
    rhs = []
    eq_labels = []
    for u in k1sets:
        subs = _subs(u)
        j0 = st.kset_index[subs[0]]
        for s in st.S:
            row = 0
            const = f(u, s)
            for l in range(k):
                key = (subs[l], s)
                if subs[l] in fixed.J0:
                    const ^= fixed.x[key]
                else:
                    row ^= 1 << var(("x", subs[l], s))
            if subs[k] in fixed.J1:
                const ^= (fixed.y[(subs[k], s)] >> j0) & 1
            else:
                row ^= 1 << var(("y", subs[k], s, subs[0]))
            if u in fixed.J2:
                const ^= (fixed.z[u] >> s) & 1
            elif s in gpos:
                row ^= 1 << var(("z", u, s))
            rows.append(row)
            rhs.append(const)
            eq_labels.append((u, s))
    info = {"equations": len(rows), "unknowns": len(unknowns)}
    if not rows:
        sol_bits = 0
    else:
        mat = Gf2Matrix(Basis(eq_labels), Basis(unknowns) if unknowns else Basis([]), tuple(rows))
        b = 0
        for i, v in enumerate(rhs):
            b |= v << i
        res = solve(mat, Gf2Vector(mat.row_basis, b))
        if not res.consistent:
            info["certificate"] = [eq_labels[i] for i in _positions(res.certificate.bits)]
            return None, info
        sol_bits = res.x.bits
    val = {lbl: (sol_bits >> i) & 1 for i, lbl in enumerate(unknowns)}

    x = dict(fixed.x)
    y = dict(fixed.y)
    z = dict(fixed.z)
    for v in ksets:
        for s in st.S:
            if v not in fixed.J0:
                x[(v, s)] = val.get(("x", v, s), 0)
            if v not in fixed.J1:
                y[(v, s)] = 0
    for lbl, bit in val.items():
        if lbl[0] == "y" and bit:
            _, v, s, w = lbl
            y[(v, s)] |= 1 << st.kset_index[w]
    for u in k1sets:
        if u not in fixed.J2:
            z[u] = sum(1 << s for s in gpos if val.get(("z", u, s), 0))
    choice = Choice(
        st,
        fixed.J0 | set(ksets),
        fixed.J1 | set(ksets),
        fixed.J2 | set(k1sets),
        x,
        y,
        z,
    )
    return choice, info


def _positions(bits: int) -> list[int]:
    out = []
    i = 0
    while bits:
        if bits & 1:
            out.append(i)
        bits >>= 1
        i += 1
    return out


# -- operations --------------------------------------------------------------


def zero_choice_exists(M: ModelHandle) -> Choice | None:
    """A global zero-correction choice read off a gauge certificate, or None."""
    cert = coboundary_image(M.setting).contains(M.correction)
    if not cert.holds:
        return None
    return assert_zero(M, cert.gauge.to_choice())


def random_zero_choice(M: ModelHandle, A: Iterable[int], rng: random.Random) -> Choice:
    """Random x, y over [A]^k; z solved per (k+1)-set, using the bit
    y(u_k, s)(u_0) (read by u alone) wherever G forces z(u)(s) = 0."""
    st = M.setting
    k = st.k
    A = sorted(set(A))
    ksets = sorted(k_sets_of(st, A))
    x = {(v, s): rng.randrange(2) for v in ksets for s in st.S}
    y = {(v, s): rng.randrange(st.h_size()) for v in ksets for s in st.S}
    z = {}
    free = set(gb.bit_length() - 1 for gb in st.g_basis_vectors)
    f = M.correction
    for u in sorted(k1_sets_of(st, A)):
        subs = _subs(u)
        j0 = st.kset_index[subs[0]]
        g = 0
        for s in st.S:
            t = f(u, s) ^ ((y[(subs[k], s)] >> j0) & 1)
            for l in range(k):
                t ^= x[(subs[l], s)]
            if not t:
                continue
            if s in free:
                g |= 1 << s
            else:
                y[(subs[k], s)] ^= 1 << j0
        z[u] = g
    c = Choice(st, ksets, ksets, k1_sets_of(st, A), x, y, z)
    return assert_zero(M, c)


def extend_choice_w(M: ModelHandle, W: Iterable[int], partial: Choice,
                    trace: list[TraceEntry] | None = None) -> ExtensionResult:
    """Extend a zero-correction choice over J = {k-sets not containing W} to a
    global one; the explicit recipe first, the linear solver as fallback."""
    st = M.setting
    k = st.k
    W = frozenset(W)
    trace = [] if trace is None else trace
    if len(W) >= k:
        raise PreconditionError(f"|W| = {len(W)} must be below k = {k}")
    J = frozenset(v for v in st.k_sets if not W <= set(v))
    J2 = frozenset(u for u in st.k1_sets if not W <= set(u))
    if (partial.J0, partial.J1, partial.J2) != (J, J, J2):
        raise PreconditionError("partial choice must live on the k-sets not containing W")
    require_zero(M, partial)

    built = _structured_w(M, W, partial, trace)
    if built is not None:
        return ExtensionResult(assert_zero(M, built), trace)
    c, info = solve_extension(M, partial, range(st.n))
    trace.append(TraceEntry("solver", {"W": W, **_public(info), "consistent": c is not None}))
    if c is None:
        return ExtensionResult(None, trace, certificate=info.get("certificate"))
    return ExtensionResult(assert_zero(M, c), trace)


def _public(info: dict) -> dict:
    return {k: v for k, v in info.items() if k != "certificate"}


def _structured_w(M: ModelHandle, W: frozenset, partial: Choice, trace: list[TraceEntry]) -> Choice | None:
    st = M.setting
    k = st.k
    f = M.correction
    new_k = sorted(v for v in st.k_sets if W <= set(v))
    new_g = sorted(u for u in st.k1_sets if W <= set(u))
    if len(new_g) > st.m:
        trace.append(TraceEntry("structured", {"W": W, "status": "infeasible", "needed": len(new_g), "m": st.m}))
        return None
    iota = {g: i for i, g in enumerate(new_g)}
    x = dict(partial.x)
    y = dict(partial.y)
    z = dict(partial.z)
    for v in new_k:
        for s in st.S:
            x[(v, s)] = 0
            y[(v, s)] = 0
    for g in new_g:
        subs = _subs(g)
        j0 = st.kset_index[subs[0]]
        zg = 0
        for s in st.S:
            t = f(g, s)
            for l in range(k):
                t ^= x[(subs[l], s)]
            if subs[k] in partial.J1:
                t ^= (y[(subs[k], s)] >> j0) & 1
            elif (s >> iota[g]) & 1:
                if t:
                    y[(subs[k], s)] |= 1 << j0
                continue
            if t:
                zg |= 1 << s
        kernel = ((1 << len(st.S)) - 1) & ~zg
        if not st.filter_contains(kernel):
            trace.append(TraceEntry("structured", {"W": W, "status": "filter-check-failed", "at": g}))
            return None
        z[g] = zg
    trace.append(TraceEntry("structured", {"W": W, "status": "ok", "new_ksets": len(new_k), "new_k1sets": len(new_g)}))
    return Choice(st, st.k_sets, st.k_sets, st.k1_sets, x, y, z)


def amalgamate_system(M: ModelHandle, system: CompatibleSystem,
                      trace: list[TraceEntry] | None = None) -> ExtensionResult:
    """A zero-correction choice over base + points extending every member."""
    trace = [] if trace is None else trace
    if system.m2 >= M.setting.k:
        raise PreconditionError(f"m2 = {system.m2} must be below k = {M.setting.k}")
    fixed = None
    for s in sorted(system.choices, key=lambda t: (len(t), sorted(t))):
        c = system.choices[s]
        require_zero(M, c)
        fixed = c if fixed is None else merge(fixed, c)
    c, info = solve_extension(M, fixed, system.target)
    trace.append(TraceEntry("amalgamate", {"m2": system.m2, "points": system.points, **_public(info),
                                           "consistent": c is not None}))
    if c is None:
        return ExtensionResult(None, trace, certificate=info.get("certificate"))
    return ExtensionResult(assert_zero(M, c), trace)


def full_extend(M: ModelHandle, J1: Iterable[int], J2: Iterable[int], c: Choice) -> ExtensionResult:
    """Extend a zero-correction choice over [J1] to one over [J2], one index
    at a time. A step that gets stuck is retried from the original choice
    alone; if that also fails the index is reported as stuck."""
    st = M.setting
    J1 = frozenset(J1)
    J2 = frozenset(J2)
    if not J1 <= J2:
        raise PreconditionError("J1 must be a subset of J2")
    dom = Choice.zeros_over(st, J1)
    if (c.J0, c.J1, c.J2) != (dom.J0, dom.J1, dom.J2):
        raise PreconditionError("choice must live on the domains induced by J1")
    require_zero(M, c)
    trace: list[TraceEntry] = [TraceEntry("start", {"J1": J1, "J2": J2})]
    current = c
    A = set(J1)
    for b in sorted(J2 - J1):
        if A | {b} == set(range(st.n)):
            res = extend_choice_w(M, {b}, current, trace)
            path = "extend-w"
        else:
            system = CompatibleSystem(st, 1, frozenset(A), (b,), {frozenset(): current})
            res = amalgamate_system(M, system, trace)
            path = "amalgamate"
        if res.ok:
            current = res.choice
        else:
            again, info = solve_extension(M, c, A | {b})
            trace.append(TraceEntry("re-solve", {"b": b, **_public(info), "consistent": again is not None}))
            if again is None:
                trace.append(TraceEntry("stuck", {"b": b}))
                return ExtensionResult(None, trace, stuck=b, certificate=info.get("certificate"))
            current = assert_zero(M, again)
            path += "+re-solve"
        A.add(b)
        trace.append(TraceEntry("added", {"b": b, "path": path}))
    return ExtensionResult(assert_zero(M, current), trace)


__all__ = [
    "ExtensionResult", "TraceEntry", "PreconditionError", "SoundnessError", "zero_choice_exists",
    "random_zero_choice", "extend_choice_w", "amalgamate_system", "full_extend", "solve_extension",
    "ChoiceError",
]
