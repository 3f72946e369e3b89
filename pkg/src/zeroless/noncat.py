"""I-functions, the sufficient condition (*) for non-isomorphism, obstruction
data derived from a choice, the search for f with M_{I,f} not isomorphic to
M_I, and the finite Ramsey/closure shadows of the large-cardinal argument.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Hashable, Iterable, Mapping, Sequence

from .choices import Choice, correction_of
from .classification import (
    MAX_PERM_N,
    CoboundaryImage,
    check_permutation,
    coboundary_image,
    count_iso_classes,
    iso_with_permutation,
    permute_set,
)
from .model import CorrectionFunction, ModelHandle
from .setting import GuardrailError, Setting


def is_I_function(setting: Setting, f: CorrectionFunction) -> bool:
    """Every fiber f_u is nonzero on a filter set."""
    return all(setting.filter_contains(f.fiber(u)) for u in setting.k1_sets)


def star_condition(setting: Setting, f: CorrectionFunction, F1: Mapping, F2: Mapping,
                   perm: Sequence[int] | None = None) -> tuple[int, ...] | None:
    """First ascending (t_0..t_k) with t_k outside F1(u_k) and
    f_{pi[u]} + sum_{l<k} F2(u_l) outside G; None if there is none.

    F1 maps k-sets to sets of indices, F2 maps k-sets to ints over S; missing
    keys read as empty / zero.
    """
    k = setting.k
    perm = tuple(range(setting.n)) if perm is None else check_permutation(setting, perm)
    for u in setting.k1_sets:
        subs = [u[:l] + u[l + 1 :] for l in range(k + 1)]
        if u[k] in F1.get(subs[k], ()):
            continue
        v = f.fiber(permute_set(perm, u))
        for l in range(k):
            v ^= F2.get(subs[l], 0)
        if not setting.g_membership(v):
            return u
    return None


def derive_obstruction_data(M: ModelHandle, c: Choice) -> tuple[dict, dict]:
    """F1(u): indices of every k-set v with y(u,s)(v) = 1 for some s.
    F2(u): the S-indexed vector of x-bits at u."""
    if any(correction_of(M, c).values()):
        raise ValueError("obstruction data needs a zero-correction choice")
    st = M.setting
    F1: dict = {}
    for (u, s), h in c.y.items():
        acc = F1.setdefault(u, set())
        for j, v in enumerate(st.k_sets):
            if (h >> j) & 1:
                acc.update(v)
    F2: dict = {}
    for (u, s), bit in c.x.items():
        F2[u] = F2.get(u, 0) | (bit << s)
    return {u: frozenset(v) for u, v in F1.items()}, F2


@dataclass
class NonIsoReport:
    setting: dict
    quotient_dim: int
    identity_classes: int
    full_classes: int | None
    candidates_tried: int
    witness: CorrectionFunction | None = None
    witness_is_I_function: bool | None = None
    verified: bool | None = None
    notes: list[str] = field(default_factory=list)


def find_noniso_f(setting: Setting, max_candidates: int = 4096,
                  image: CoboundaryImage | None = None) -> tuple[CorrectionFunction | None, NonIsoReport]:
    """An f (I-functions first) with no pi making pi.f equivalent to 0.

    ``image`` substitutes another invariant subspace for B.
    """
    img = image or coboundary_image(setting)
    qd = img.quotient_dim
    ident = count_iso_classes(setting, "identity", image=img)
    full = None
    if setting.n <= MAX_PERM_N and qd <= 12:
        full = count_iso_classes(setting, "full", image=img).count
    report = NonIsoReport(setting.to_record(), qd, ident.count, full, 0)
    if qd == 0:
        report.notes.append("coboundary image is the whole correction space")
        return None, report
    reps = [r for r in img.coset_representatives(limit=max_candidates) if r.bits]
    reps.sort(key=lambda r: (not is_I_function(setting, r), r.bits))
    zero = CorrectionFunction.zero(setting)
    for f in reps:
        report.candidates_tried += 1
        if iso_with_permutation(setting, f, zero, img) is None:
            report.witness = f
            report.witness_is_I_function = is_I_function(setting, f)
            report.verified = iso_with_permutation(setting, f, zero, img) is None
            return f, report
    report.notes.append("every tried representative is equivalent to 0 up to Sym(I)")
    return None, report


# -- finite Ramsey shadow ----------------------------------------------------


@dataclass
class SinkWitness:
    subset: tuple[int, ...]
    colour: Hashable
    parity_checked: bool = False
    parity_sum: int | None = None


def monochromatic_sink(colouring: Mapping, E: Iterable[int], k: int) -> SinkWitness | None:
    """First (k+1)-subset of E (lexicographic) whose k-subsets share one colour.

    When k is even and colours are ints (GF(2) vectors), the witness also
    records the sum of the colours of u_0..u_{k-1}, which must vanish.
    """
    E = sorted(set(E))
    for u in combinations(E, k + 1):
        subs = [u[:l] + u[l + 1 :] for l in range(k + 1)]
        cols = [colouring[v] for v in subs]
        if all(c == cols[0] for c in cols):
            w = SinkWitness(u, cols[0])
            if k % 2 == 0 and isinstance(cols[0], int):
                acc = 0
                for c in cols[:k]:
                    acc ^= c
                w.parity_checked = True
                w.parity_sum = acc
            return w
    return None


def f1_closed_subset(F1: Mapping, perm: Sequence[int], E0: Iterable[int], k: int) -> list[int] | None:
    """Greedy E inside E0: keep a if every k-subset w of the kept elements below
    a has F1(w) below a and pi[w] below a. None if fewer than k+2 survive."""
    E: list[int] = []
    for a in sorted(set(E0)):
        ok = True
        for w in combinations(E, k):
            if any(b >= a for b in F1.get(w, ())) or any(perm[b] >= a for b in w):
                ok = False
                break
        if ok:
            E.append(a)
    if len(E) < k + 2:
        return None
    if not _closed(F1, perm, E, k):
        raise AssertionError("greedy subset fails its own closure property")
    return E


def _closed(F1, perm, E, k) -> bool:
    for t in combinations(E, k + 1):
        w, top = t[:k], t[k]
        if any(b >= top for b in F1.get(w, ())) or any(perm[b] >= top for b in w):
            return False
    return True


# -- sweep -------------------------------------------------------------------


def sweep_grid(ks: Iterable[int] = (2, 3), n_max: int = 8, ms: Iterable[int] = range(4)) -> list[tuple[int, int, int]]:
    return [(k, n, m) for k in ks for n in range(k + 1, n_max + 1) for m in ms]


def sweep_record(k: int, n: int, m: int) -> dict:
    try:
        st = Setting(k, n, m)
        img = coboundary_image(st)
    except GuardrailError as exc:
        return {"k": k, "n": n, "m": m, "status": "guardrail", "reason": str(exc)}
    f, rep = find_noniso_f(st)
    rec = {
        "k": k,
        "n": n,
        "m": m,
        "status": "ok",
        "domain_dim": img.domain_dim,
        "rank": img.rank,
        "quotient_dim": img.quotient_dim,
        "identity_classes": rep.identity_classes,
        "full_classes": rep.full_classes if rep.full_classes is not None else "skipped",
        "witness": None,
        "witness_verified": None,
    }
    if f is not None:
        rec["witness"] = f.vector.to_string()
        rec["witness_verified"] = bool(rep.verified)
    return rec
