from itertools import combinations
from math import comb

import pytest
from hypothesis import given
from hypothesis import strategies as st

from zeroless.setting import (
    GuardrailError,
    Setting,
    decode_subset,
    encode_subset,
    filter_contains,
    g_basis,
    g_membership,
    h_text,
    s_text,
    sub_k_sets,
)


def all_families(setting):
    """Every subset of S, as a bitmask over S."""
    return range(1 << len(setting.S))


@pytest.mark.parametrize("m", [0, 1, 2, 3])
def test_filter_axioms_exhaustive(m):
    s = Setting(2, 3, m)
    full = (1 << len(s.S)) - 1
    members = [A for A in all_families(s) if s.filter_contains(A)]
    assert s.filter_contains(full)
    assert not s.filter_contains(0)
    mset = set(members)
    for A in members:
        for B in all_families(s):
            if A & B == A:
                assert B in mset
    for A in members:
        for B in members:
            assert A & B in mset


@pytest.mark.parametrize("m", [0, 1, 2, 3, 4])
def test_default_filter_is_principal_at_lambda(m):
    s = Setting(2, 3, m)
    lam_bit = 1 << s.lam
    for A in all_families(s):
        assert s.filter_contains(A) == bool(A & lam_bit)


def test_filter_examples_m1():
    s = Setting(2, 3, 1)
    assert filter_contains(s, {1})  # A = {{0}}
    assert not filter_contains(s, {0})  # A = {empty set}


def test_custom_generators():
    s = Setting(2, 3, 2, generators=(0b01,))
    # the least basic cone is the cone of {0}: every s containing 0
    assert s.filter_contains({1, 3})
    assert not s.filter_contains({3})
    assert s.g_dim == 2
    assert s.g_basis_vectors == (1 << 0, 1 << 2)
    with pytest.raises(ValueError):
        Setting(2, 3, 1, generators=(0b10,))


@pytest.mark.parametrize("m", [0, 1, 2, 3, 4])
def test_g_dimension_and_closure(m):
    s = Setting(2, 3, m)
    assert s.g_dim == 2**m - 1
    assert g_basis(s).rank() == s.g_dim
    gs = s.g_elements()
    assert len(gs) == 2**s.g_dim
    gset = set(gs)
    assert 0 in gset
    for a in gs[:16]:
        for b in gs[:16]:
            assert a ^ b in gset
    assert all(g_membership(s, g) for g in gs)
    assert sum(g_membership(s, g) for g in range(1 << len(s.S))) == len(gs)


def test_k_sets_are_lexicographic():
    s = Setting(2, 4, 0)
    assert s.k_sets == ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
    assert s.k1_sets[0] == (0, 1, 2)
    assert len(Setting(3, 7, 0).k1_sets) == comb(7, 4)


def test_sub_k_sets():
    s = Setting(2, 5, 0)
    assert sub_k_sets(s, (1, 3, 4)) == [(3, 4), (1, 4), (1, 3)]
    with pytest.raises(ValueError):
        sub_k_sets(s, (3, 1, 4))
    with pytest.raises(ValueError):
        sub_k_sets(s, (1, 3))


def test_guardrails():
    with pytest.raises(GuardrailError):
        Setting(2, 13, 1)
    with pytest.raises(GuardrailError):
        Setting(2, 5, 5)
    with pytest.raises(GuardrailError):
        Setting(5, 8, 1)
    with pytest.raises(ValueError):
        Setting(1, 3, 1)


def test_sizes_formula_examples():
    assert sum(Setting(2, 3, 1).sizes().values()) == 77
    assert sum(Setting(2, 3, 0).sizes().values()) == 46


@given(st.integers(2, 4), st.integers(1, 8), st.integers(0, 3))
def test_sizes_match_formula(k, n, m):
    s = Setting(k, n, m)
    nk = comb(n, k)
    want = n + nk + comb(n, k + 1) + nk * 2**m * 2**nk + nk * 2**m * 2 + 2**nk + comb(n, k + 1) * 2 ** (2**m - 1)
    assert sum(s.sizes().values()) == want


def test_record_round_trip_and_texts():
    s = Setting(2, 4, 2, generators=(1, 2))
    assert Setting.from_record(s.to_record()) == s
    assert encode_subset([2, 0]) == "0,2"
    assert decode_subset("2,0") == (0, 2)
    assert decode_subset("") == ()
    assert s_text(0b101) == "{0,2}"
    assert h_text(Setting(2, 3, 0), 0b101) == "0,1;1,2"


@given(st.integers(0, 3), st.data())
def test_filter_is_upward_closed_random(m, data):
    s = Setting(2, 3, m)
    A = data.draw(st.integers(0, (1 << len(s.S)) - 1))
    B = data.draw(st.integers(0, (1 << len(s.S)) - 1))
    if s.filter_contains(A):
        assert s.filter_contains(A | B)
    if s.filter_contains(A) and s.filter_contains(B):
        assert s.filter_contains(A & B)


def test_cone():
    s = Setting(2, 3, 2)
    assert s.cone(0b01) == (1 << 0b01) | (1 << 0b11)
    assert all(s.filter_contains(s.cone(u)) for u in s.S)
    assert list(combinations(range(3), 2)) == list(s.k_sets)
