import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from zeroless.choices import (
    Choice,
    ChoiceError,
    CompatibleSystem,
    MergeConflict,
    as_correction_function,
    canonical_choice,
    correction_closed_form,
    correction_of,
    dumps,
    j_star,
    loads,
    merge,
    random_choice,
    restrict,
    restrict_to,
)
from zeroless.model import CorrectionFunction, ModelHandle
from zeroless.setting import Setting

S231 = Setting(2, 3, 1)


def test_j_star_examples():
    assert j_star(S231, S231.k_sets) == frozenset(S231.k1_sets)
    assert j_star(S231, [(0, 2), (1, 2)]) == frozenset()
    assert j_star(S231, []) == frozenset()
    s = Setting(2, 4, 0)
    J = [(0, 1), (0, 2), (1, 2), (2, 3)]
    assert j_star(s, J) == {(0, 1, 2)}


def test_canonical_choice_corrections():
    rng = random.Random(0)
    for st_ in (S231, Setting(2, 5, 2), Setting(3, 5, 1)):
        M0 = ModelHandle(st_)
        assert not any(correction_of(M0, canonical_choice(M0)).values())
        for _ in range(10):
            f = CorrectionFunction.random(st_, rng)
            M = ModelHandle(st_, f)
            assert as_correction_function(M, canonical_choice(M)) == f


def test_single_x_flip_gives_indicator():
    M = ModelHandle(S231)
    c = canonical_choice(M)
    x = dict(c.x)
    x[((1, 2), 1)] = 1  # u_0 of the only triple
    flipped = Choice(S231, c.J0, c.J1, c.J2, x, c.y, c.z)
    assert correction_of(M, flipped) == {((0, 1, 2), 0): 0, ((0, 1, 2), 1): 1}


def test_z_choice_gives_gamma():
    st_ = Setting(2, 4, 2)
    M = ModelHandle(st_)
    gamma = st_.g_elements()[5]
    c = canonical_choice(M)
    z = {u: gamma for u in st_.k1_sets}
    cz = Choice(st_, c.J0, c.J1, c.J2, c.x, c.y, z)
    for (u, s), v in correction_of(M, cz).items():
        assert v == (gamma >> s) & 1


@pytest.mark.parametrize("n,m", [(3, 0), (3, 1), (4, 1), (4, 2)])
def test_closed_form_equals_definition(n, m):
    rng = random.Random(n * 10 + m)
    st_ = Setting(2, n, m)
    for _ in range(40):
        M = ModelHandle(st_, CorrectionFunction.random(st_, rng))
        c = random_choice(st_, st_.k_sets, st_.k_sets, st_.k1_sets, rng)
        assert correction_of(M, c) == correction_closed_form(M, c)


def test_correction_is_affine():
    rng = random.Random(9)
    st_ = Setting(2, 4, 1)
    for _ in range(30):
        M = ModelHandle(st_, CorrectionFunction.random(st_, rng))
        cs = [random_choice(st_, st_.k_sets, st_.k_sets, st_.k1_sets, rng) for _ in range(3)]
        total = cs[0] + cs[1] + cs[2]
        parts = [correction_of(M, c) for c in cs]
        whole = correction_of(M, total)
        for key, v in whole.items():
            assert v == parts[0][key] ^ parts[1][key] ^ parts[2][key]


def test_partial_domain_eligibility():
    st_ = Setting(2, 4, 0)
    M = ModelHandle(st_)
    J = [(0, 1), (0, 2), (1, 2), (2, 3)]
    c = Choice.for_J(st_, J, {(u, 0): 0 for u in J}, {(u, 0): 0 for u in J}, {(0, 1, 2): 0})
    assert [u for u, _ in c.eligible()] == [(0, 1, 2)]
    assert correction_of(M, c) == {((0, 1, 2), 0): 0}
    c2 = Choice(st_, [(0, 1), (0, 2)], [(0, 1)], [(0, 1, 2)],
                {((0, 1), 0): 0, ((0, 2), 0): 0}, {((0, 1), 0): 0}, {(0, 1, 2): 0})
    assert c2.eligible() == []


def test_choice_validation():
    with pytest.raises(ChoiceError):
        Choice(S231, [(0, 1)], [], [], {}, {}, {})
    c = canonical_choice(ModelHandle(S231))
    with pytest.raises(ChoiceError):
        Choice(S231, c.J0, c.J1, c.J2, c.x, c.y, {(0, 1, 2): 2})
    with pytest.raises(ChoiceError):
        Choice(S231, [(0, 5)], [], [], {((0, 5), 0): 0, ((0, 5), 1): 0}, {}, {})


def test_restrict_and_merge():
    rng = random.Random(4)
    st_ = Setting(2, 4, 1)
    c = random_choice(st_, st_.k_sets, st_.k_sets, st_.k1_sets, rng)
    half = set(st_.k_sets[:3])
    a = restrict(c, half, half, st_.k1_sets[:2])
    rest = set(st_.k_sets) - half
    b = restrict(c, rest, rest, st_.k1_sets[2:])
    assert merge(a, b) == c
    assert merge(c, a) == c
    x = dict(a.x)
    key = sorted(x)[0]
    x[key] ^= 1
    bad = Choice(st_, a.J0, a.J1, a.J2, x, a.y, a.z)
    with pytest.raises(MergeConflict) as info:
        merge(c, bad)
    assert info.value.coord == ("x", key)
    with pytest.raises(ChoiceError):
        restrict(a, st_.k_sets)


def test_serialization_round_trip():
    rng = random.Random(8)
    st_ = Setting(2, 4, 2)
    for _ in range(10):
        c = random_choice(st_, st_.k_sets[:4], st_.k_sets[2:], st_.k1_sets[:3], rng)
        assert loads(dumps(c)) == c
        assert dumps(loads(dumps(c))) == dumps(c)


def test_compatible_system_validation():
    st_ = Setting(3, 6, 1)
    rng = random.Random(1)
    big = random_choice(st_, st_.k_sets, st_.k_sets, st_.k1_sets, rng)
    base = {0, 1, 2}
    points = (3, 4)
    chs = {s: restrict_to(big, base | {points[t] for t in s}) for s in [(), (0,), (1,)]}
    sysm = CompatibleSystem(st_, 2, base, points, {frozenset(s): c for s, c in chs.items()})
    assert sysm.target == {0, 1, 2, 3, 4}
    broken = dict(sysm.choices)
    broken[frozenset({0})] = restrict_to(random_choice(st_, st_.k_sets, st_.k_sets, st_.k1_sets, rng), {0, 1, 2, 3})
    with pytest.raises(ChoiceError):
        CompatibleSystem(st_, 2, base, points, broken)
    with pytest.raises(ChoiceError):
        CompatibleSystem(st_, 2, base, (3, 3), sysm.choices)


@given(st.integers(0, 2), st.randoms(use_true_random=False))
def test_restriction_is_idempotent(m, rng):
    st_ = Setting(2, 4, m)
    c = random_choice(st_, st_.k_sets, st_.k_sets, st_.k1_sets, rng)
    A = set(rng.sample(range(4), 3))
    r = restrict_to(c, A)
    assert restrict_to(r, A) == r
    assert r.index_support() <= A
