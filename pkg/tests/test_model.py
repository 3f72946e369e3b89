import random
from itertools import product

import pytest
from hypothesis import given
from hypothesis import strategies as st

from zeroless.model import (
    UNDEFINED,
    ArityError,
    BudgetExceeded,
    CorrectionFunction,
    ExplicitStructure,
    GCopy,
    HCopy,
    HPure,
    Index,
    K1Set,
    KSet,
    ModelHandle,
    UnknownSymbol,
    Z2Copy,
    all_corrections,
    element_name,
    eval_function,
    eval_predicate,
    function_names,
    is_standard,
    is_strongly_standard,
    materialize,
    parse_element_name,
    predicate_names,
    q_s_holds,
    q_tuple,
    random_element,
    reduct_tau_minus,
)
from zeroless.setting import Setting

S231 = Setting(2, 3, 1)


def test_predicates():
    M = ModelHandle(Setting(2, 5, 1))
    assert eval_predicate(M, "P0", Index(3))
    assert not eval_predicate(M, "P0", Index(7))
    h = HCopy((0, 1), 1, 0)
    assert eval_predicate(M, "P2", h)
    assert eval_predicate(M, "P2s", h, s=1)
    assert not eval_predicate(M, "P2s", h, s=0)
    assert eval_predicate(M, "P5", GCopy((0, 1, 2), 1))
    assert not eval_predicate(M, "P5", GCopy((0, 1, 2), 2))
    with pytest.raises(ValueError):
        M.gcopy((0, 1, 2), 2)
    with pytest.raises(UnknownSymbol):
        eval_predicate(M, "P9", h)
    with pytest.raises(ArityError):
        eval_predicate(M, "P2s", h)


def test_sorts_are_disjoint():
    M = ModelHandle(S231)
    elems = list(M.elements())
    assert len(elems) == len(set(elems)) == 77
    names = [element_name(S231, e) for e in elems]
    assert len(set(names)) == 77
    for e in elems:
        hits = [p for p in ("P0", "P11", "P12", "P2", "P3", "P4", "P5") if eval_predicate(M, p, e)]
        assert len(hits) == 1


def test_functions():
    M = ModelHandle(Setting(2, 4, 1))
    st_ = M.setting
    x = HCopy((0, 2), 1, 0b0011)
    assert eval_function(M, "F4", x, HPure(0b0101)) == HCopy((0, 2), 1, 0b0110)
    once = eval_function(M, "F4", x, HPure(0b0110))
    twice = eval_function(M, "F4", eval_function(M, "F4", x, HPure(0b0100)), HPure(0b0010))
    assert once == twice
    z = GCopy((0, 1, 3), 0)
    g = st_.g_elements()[1]
    moved = eval_function(M, "F3g", z, g=g)
    assert moved == GCopy((0, 1, 3), g)
    assert eval_function(M, "F3g", moved, g=g) == z
    assert eval_function(M, "pi0", KSet((1, 3))) == Index(1)
    assert eval_function(M, "pi2", K1Set((0, 1, 3))) == Index(3)
    assert eval_function(M, "pi2", KSet((1, 3))) is UNDEFINED
    assert eval_function(M, "F2", x) == KSet((0, 2))
    assert eval_function(M, "F3", Z2Copy((0, 2), 0, 1)) == KSet((0, 2))
    assert eval_function(M, "F5", z) == K1Set((0, 1, 3))
    assert eval_function(M, "F2", z) is UNDEFINED
    with pytest.raises(ArityError):
        eval_function(M, "F4", x)
    with pytest.raises(ArityError):
        eval_function(M, "F3g", z)
    with pytest.raises(UnknownSymbol):
        eval_function(M, "pi9", KSet((1, 3)))


def test_q_s_examples():
    M0 = ModelHandle(S231)
    u = (0, 1, 2)
    zero = q_tuple(S231, u, 1, [0, 0], 0, 0)
    assert q_s_holds(M0, 1, zero)
    f = CorrectionFunction.from_values(S231, {(u, 1): 1})
    assert not q_s_holds(ModelHandle(S231, f), 1, zero)
    assert not q_s_holds(M0, 1, q_tuple(S231, u, 1, [1, 0], 0, 0))


def test_malformed_tuples_are_not_in_q():
    M = ModelHandle(S231)
    good = list(q_tuple(S231, (0, 1, 2), 0, [0, 0], 0, 0))
    assert q_s_holds(M, 0, good)
    swapped = good[:]
    swapped[0], swapped[1] = swapped[1], swapped[0]
    assert not q_s_holds(M, 0, swapped)
    repeated = good[:]
    repeated[1] = Index(0)
    assert not q_s_holds(M, 0, repeated)
    wrong_u = good[:]
    wrong_u[3] = KSet((0, 1))
    assert not q_s_holds(M, 0, wrong_u)
    assert not q_s_holds(M, 1, good)  # x-copies carry s = 0
    assert not q_s_holds(M, 0, good[:-1])


def test_affine_fiber_property_exhaustive():
    """Fixing all but one Z_2 entry of the equation, exactly one value works."""
    for f in all_corrections(S231):
        M = ModelHandle(S231, f)
        for u in S231.k1_sets:
            for s in S231.S:
                for xs, h, g in product(product((0, 1), repeat=2), range(8), S231.g_elements()):
                    base = q_s_holds(M, s, q_tuple(S231, u, s, xs, h, g))
                    flipped = q_s_holds(M, s, q_tuple(S231, u, s, (xs[0] ^ 1, xs[1]), h, g))
                    assert base != flipped
                    h2 = h ^ (1 << S231.kset_index[(1, 2)])
                    assert base != q_s_holds(M, s, q_tuple(S231, u, s, xs, h2, g))


def test_fiber_translation_invariance():
    rng = random.Random(3)
    st_ = Setting(2, 4, 2)
    for _ in range(200):
        M = ModelHandle(st_, CorrectionFunction.random(st_, rng))
        u = rng.choice(st_.k1_sets)
        s = rng.choice(st_.S)
        xs = [rng.randrange(2), rng.randrange(2)]
        h = rng.randrange(st_.h_size())
        g = rng.choice(st_.g_elements())
        gstar = rng.choice(st_.g_elements())
        before = q_s_holds(M, s, q_tuple(st_, u, s, xs, h, g))
        xs2 = [xs[0] ^ ((gstar >> s) & 1), xs[1]]
        assert before == q_s_holds(M, s, q_tuple(st_, u, s, xs2, h, g ^ gstar))


def test_reduct_independent_of_f():
    rng = random.Random(1)
    M0 = ModelHandle(S231)
    for f in all_corrections(S231):
        M = ModelHandle(S231, f)
        R, R0 = reduct_tau_minus(M), reduct_tau_minus(M0)
        assert R == R0
        for e in M.elements():
            for name, s in predicate_names(S231):
                assert eval_predicate(M, name, e, s) == eval_predicate(M0, name, e, s)
            for name, g in function_names(S231):
                if name == "F4":
                    hp = HPure(rng.randrange(8))
                    assert eval_function(M, name, e, hp) == eval_function(M0, name, e, hp)
                else:
                    assert eval_function(M, name, e, g=g) == eval_function(M0, name, e, g=g)


def test_materialize_sizes_and_budget():
    E = materialize(ModelHandle(S231))
    assert len(E) == 77
    assert len(materialize(ModelHandle(Setting(2, 3, 0)))) == 46
    assert sum(len(E.relations[r]) for r in E.relations if r.startswith("Q")) == 64
    with pytest.raises(BudgetExceeded) as info:
        materialize(ModelHandle(Setting(2, 8, 2)), cap=10**6)
    assert info.value.sort == "HCopy"
    assert "HCopy" in str(info.value)


def test_export_round_trip_and_determinism():
    f = CorrectionFunction(S231, 0b10)
    E = materialize(ModelHandle(S231, f))
    text = E.to_text()
    assert text == materialize(ModelHandle(S231, f)).to_text()
    E2 = ExplicitStructure.from_text(text)
    assert E2.to_text() == text
    assert E2.facts() == E.facts()
    assert text.splitlines()[0] == "structure k=2 m=1 n=3"
    with pytest.raises(ValueError):
        ExplicitStructure.from_text("bogus line\n")


def test_element_names_round_trip():
    st_ = Setting(2, 4, 2)
    M = ModelHandle(st_)
    rng = random.Random(0)
    for _ in range(300):
        e = random_element(M, rng)
        assert parse_element_name(st_, element_name(st_, e)) == e
    assert element_name(S231, HCopy((0, 1), 1, 0b101)) == "H:0,1/{0}/0,1;1,2"
    assert element_name(S231, GCopy((0, 1, 2), 1)) == "G:0,1,2/{}"


def test_strongly_standard():
    for f in all_corrections(S231):
        E = materialize(ModelHandle(S231, f))
        assert is_strongly_standard(E)
        assert is_standard(E)
    E = materialize(ModelHandle(S231))
    perm = list(range(len(E)))
    random.Random(4).shuffle(perm)
    relabeled = E.relabeled(perm)
    assert not is_strongly_standard(relabeled)
    assert not is_standard(relabeled)


@given(st.integers(0, 3), st.data())
def test_correction_function_views(m, data):
    st_ = Setting(2, 4, m)
    bits = data.draw(st.integers(0, (1 << len(st_.domain_basis)) - 1))
    f = CorrectionFunction(st_, bits)
    rebuilt = CorrectionFunction.from_values(st_, dict(f.items()))
    assert rebuilt == f
    assert CorrectionFunction.from_fibers(st_, {u: f.fiber(u) for u in st_.k1_sets}) == f
    assert (f + f).bits == 0
