"""Ground truth: brute-force isomorphism between explicit structures, and the
explicit isomorphism induced by a choice of zeros.

The search is generic. It knows nothing about the construction beyond the
relation and function tables of :class:`ExplicitStructure`; functions are
handled as their graphs, so a bijection is an isomorphism iff every graph
tuple and every relation tuple maps onto a tuple of the same symbol.
"""

from __future__ import annotations

import random
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from itertools import product

from .choices import Choice, correction_of
from .model import (
    CorrectionFunction,
    ExplicitStructure,
    GCopy,
    HCopy,
    ModelHandle,
    Z2Copy,
    check_budget,
    element_name,
    materialize,
    q_s_holds,
    q_tuple,
)

DEFAULT_BUDGET = 200_000


class OracleError(RuntimeError):
    pass


@dataclass
class OracleResult:
    status: str  # "iso", "none" or "unknown"
    mapping: dict[str, str] | None = None
    nodes: int = 0
    reason: str = ""

    @property
    def found(self) -> bool:
        return self.status == "iso"

    def map_text(self) -> str:
        if not self.mapping:
            return ""
        return "".join(f"{a} -> {b}\n" for a, b in sorted(self.mapping.items()))


def _graph_relations(E: ExplicitStructure) -> dict[str, list[tuple[int, ...]]]:
    rels = {f"R:{r}": sorted(ts) for r, ts in E.relations.items()}
    for fn, tbl in E.functions.items():
        rels[f"F:{fn}"] = sorted(args + (res,) for args, res in tbl.items())
    return rels


def _refine(rels1, rels2, n1: int, n2: int):
    """Joint colour refinement; returns colour lists or None on a histogram clash."""
    sig: dict = {}

    def intern(x):
        return sig.setdefault(x, len(sig))

    def initial(rels, n):
        feats = [[] for _ in range(n)]
        for r, ts in rels.items():
            for t in ts:
                pattern = tuple(t.index(x) for x in t)
                for p, e in enumerate(t):
                    feats[e].append((r, p, pattern))
        return [intern(("init", tuple(sorted(f)))) for f in feats]

    c1, c2 = initial(rels1, n1), initial(rels2, n2)
    ncls = -1
    while True:
        if Counter(c1) != Counter(c2):
            return None
        k = len(set(c1) | set(c2))
        if k == ncls:
            return c1, c2
        ncls = k

        def step(rels, col, n):
            feats = [[] for _ in range(n)]
            for r, ts in rels.items():
                for t in ts:
                    cols = tuple(col[x] for x in t)
                    for p, e in enumerate(t):
                        feats[e].append((r, p, cols))
            return [intern((col[e], tuple(sorted(feats[e])))) for e in range(n)]

        c1, c2 = step(rels1, c1, n1), step(rels2, c2, n2)


def brute_force_iso(E1: ExplicitStructure, E2: ExplicitStructure, budget: int = DEFAULT_BUDGET) -> OracleResult:
    """Search for an isomorphism E1 -> E2 (names are ignored)."""
    if E1.vocabulary() != E2.vocabulary():
        return OracleResult("none", reason="vocabularies differ")
    if len(E1) != len(E2):
        return OracleResult("none", reason="universe sizes differ")
    rels1, rels2 = _graph_relations(E1), _graph_relations(E2)
    for r in rels1:
        if len(rels1[r]) != len(rels2[r]):
            return OracleResult("none", reason=f"{r} has different size")
    n = len(E1)
    cols = _refine(rels1, rels2, n, n)
    if cols is None:
        return OracleResult("none", reason="colour refinement separates the structures")
    c1, c2 = cols
    by_colour = defaultdict(set)
    for e, c in enumerate(c2):
        by_colour[c].add(e)
    domains = [set(by_colour[c1[e]]) for e in range(n)]

    sets2 = {r: set(ts) for r, ts in rels2.items()}
    index2: dict = {}
    for r, ts in rels2.items():
        idx = defaultdict(list)
        for t in ts:
            for p, e in enumerate(t):
                idx[(p, e)].append(t)
        index2[r] = idx
    incid1 = [[] for _ in range(n)]
    for r, ts in rels1.items():
        for t in ts:
            for e in set(t):
                incid1[e].append((r, t))

    assign = [-1] * n
    used = [False] * n
    trail: list = []
    nodes = 0

    def set_domain(v, new):
        trail.append((v, domains[v]))
        domains[v] = new

    def check_tuple(r, t) -> bool:
        """Forward-check one E1 tuple; False on a wipe-out."""
        unassigned = [p for p, e in enumerate(t) if assign[e] < 0]
        if not unassigned:
            return tuple(assign[e] for e in t) in sets2[r]
        targets = {e for p, e in enumerate(t) if assign[e] < 0}
        if len(targets) != 1:
            return True
        (v,) = targets
        fixed = [(p, assign[e]) for p, e in enumerate(t) if assign[e] >= 0]
        best = min(fixed, key=lambda pe: len(index2[r].get(pe, ())))
        cands = set()
        for t2 in index2[r].get(best, ()):
            if all(t2[p] == img for p, img in fixed) and all(t2[p] == t2[unassigned[0]] for p in unassigned):
                cands.add(t2[unassigned[0]])
        new = domains[v] & cands
        if new != domains[v]:
            if not new:
                return False
            set_domain(v, new)
        return True

    def assign_var(v, img) -> bool:
        assign[v] = img
        used[img] = True
        trail.append(("assign", v))
        for r, t in incid1[v]:
            if not check_tuple(r, t):
                return False
        return True

    def undo(mark):
        while len(trail) > mark:
            item = trail.pop()
            if item[0] == "assign":
                v = item[1]
                used[assign[v]] = False
                assign[v] = -1
            else:
                v, dom = item
                domains[v] = dom

    def propagate() -> bool:
        # assign any variable whose live domain is a single value
        changed = True
        while changed:
            changed = False
            for v in range(n):
                if assign[v] >= 0:
                    continue
                live = [x for x in domains[v] if not used[x]]
                if not live:
                    return False
                if len(live) == 1:
                    if not assign_var(v, live[0]):
                        return False
                    changed = True
        return True

    result: list | None = None
    exhausted = False

    def search() -> bool:
        nonlocal nodes, result, exhausted
        nodes += 1
        if nodes > budget:
            exhausted = True
            return False
        mark = len(trail)
        if not propagate():
            undo(mark)
            return False
        best, best_live = -1, None
        for v in range(n):
            if assign[v] >= 0:
                continue
            live = sorted(x for x in domains[v] if not used[x])
            if best_live is None or len(live) < len(best_live):
                best, best_live = v, live
                if len(live) <= 1:
                    break
        if best < 0:
            result = list(assign)
            return True
        for img in best_live:
            inner = len(trail)
            if assign_var(best, img) and search():
                return True
            undo(inner)
            if exhausted:
                break
        undo(mark)
        return False

    found = search()
    if exhausted and not found:
        return OracleResult("unknown", nodes=nodes, reason="node budget exhausted")
    if not found:
        return OracleResult("none", nodes=nodes, reason="search space exhausted")
    mapping = {E1.names[i]: E2.names[result[i]] for i in range(n)}
    if not verify_isomorphism(E1, E2, mapping):
        raise OracleError("search returned a map that fails verification")
    return OracleResult("iso", mapping, nodes=nodes)


def verify_isomorphism(E1: ExplicitStructure, E2: ExplicitStructure, mapping: dict[str, str]) -> bool:
    """Bijective, and every relation and function fact maps exactly onto E2's."""
    if set(mapping) != set(E1.names) or sorted(mapping.values()) != sorted(E2.names):
        return False
    if E1.vocabulary() != E2.vocabulary():
        return False
    idx = [E2.index[mapping[nm]] for nm in E1.names]
    for r, ts in E1.relations.items():
        if {tuple(idx[i] for i in t) for t in ts} != E2.relations[r]:
            return False
    for fn, tbl in E1.functions.items():
        moved = {tuple(idx[i] for i in a): idx[v] for a, v in tbl.items()}
        if moved != E2.functions[fn]:
            return False
    return True


def parse_map(text: str) -> dict[str, str]:
    out = {}
    for line in text.splitlines():
        if line.strip():
            a, _, b = line.partition(" -> ")
            out[a.strip()] = b.strip()
    return out


# -- the isomorphism induced by a choice -------------------------------------


@dataclass
class ChoiceIso:
    """N -> M_{I,f}: shift each copy so the chosen element becomes its zero."""

    source: ModelHandle
    target: ModelHandle
    choice: Choice
    checked: int = 0
    exhaustive: bool = False

    def __call__(self, e):
        c = self.choice
        if isinstance(e, HCopy):
            return HCopy(e.u, e.s, e.h ^ c.y[(e.u, e.s)])
        if isinstance(e, Z2Copy):
            return Z2Copy(e.u, e.s, e.i ^ c.x[(e.u, e.s)])
        if isinstance(e, GCopy):
            return GCopy(e.u, e.g ^ c.z[e.u])
        return e

    def inverse(self, e):
        # every shift is an involution
        return self(e)

    def name_map(self) -> dict[str, str]:
        st = self.source.setting
        return {element_name(st, e): element_name(st, self(e)) for e in self.source.elements()}


def build_iso_from_choice(N: ModelHandle, c: Choice, target_f: CorrectionFunction | None = None,
                          exhaustive_cap: int = 50_000, samples: int = 2000,
                          rng: random.Random | None = None) -> ChoiceIso:
    """The map of a global choice c onto M_{I,f}, f = correction of c.

    Q_s preservation is checked in both directions on every candidate tuple
    when there are at most ``exhaustive_cap`` of them, otherwise on a sample.
    """
    st = N.setting
    if not c.is_global():
        raise ValueError("build_iso_from_choice needs a global choice")
    f = CorrectionFunction.from_values(st, correction_of(N, c))
    if target_f is not None and target_f != f:
        raise ValueError("the choice's correction differs from the requested target")
    iso = ChoiceIso(N, ModelHandle(st, f), c)
    gs = st.g_elements()
    total = len(st.k1_sets) * len(st.S) * (1 << st.k) * st.h_size() * len(gs)
    rng = rng or random.Random(0)
    if total <= exhaustive_cap:
        cands = (
            (u, s, xs, h, g)
            for u in st.k1_sets
            for s in st.S
            for xs in product((0, 1), repeat=st.k)
            for h in range(st.h_size())
            for g in gs
        )
        iso.exhaustive = True
    else:
        cands = (
            (
                rng.choice(st.k1_sets),
                rng.choice(st.S),
                tuple(rng.randrange(2) for _ in range(st.k)),
                rng.randrange(st.h_size()),
                rng.choice(gs),
            )
            for _ in range(samples)
        )
    for u, s, xs, h, g in cands:
        tup = q_tuple(st, u, s, xs, h, g)
        if q_s_holds(N, s, tup) != q_s_holds(iso.target, s, tuple(iso(e) for e in tup)):
            raise OracleError(f"choice map breaks Q_s at u={u} s={s}")
        iso.checked += 1
    return iso


@dataclass
class CanonicalReport:
    ok: bool
    checked: int
    exhaustive: bool
    explicit_verified: bool | None = None
    detail: str = ""
    iso: ChoiceIso | None = field(default=None, repr=False)


def zero_correction_implies_canonical(N: ModelHandle, c: Choice, cap: int = 5_000) -> CanonicalReport:
    """Check that a zero-correction global choice yields N = M_{I,0}."""
    if not c.is_global():
        raise ValueError("choice is not global")
    if any(correction_of(N, c).values()):
        raise ValueError("choice does not have zero correction")
    try:
        iso = build_iso_from_choice(N, c, CorrectionFunction.zero(N.setting))
    except OracleError as exc:
        return CanonicalReport(False, 0, False, detail=str(exc))
    explicit = None
    try:
        check_budget(N.setting, cap)
    except Exception:
        pass
    else:
        E1 = materialize(N, cap=cap)
        E2 = materialize(ModelHandle(N.setting), cap=cap)
        explicit = verify_isomorphism(E1, E2, iso.name_map())
    ok = explicit is not False
    return CanonicalReport(ok, iso.checked, iso.exhaustive, explicit, iso=iso)
