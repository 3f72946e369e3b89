from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zeroless.classification import CoboundaryImage, g3_span, iso_with_permutation
from zeroless.extension import zero_choice_exists
from zeroless.model import CorrectionFunction, ModelHandle
from zeroless.noncat import (
    derive_obstruction_data,
    f1_closed_subset,
    find_noniso_f,
    is_I_function,
    monochromatic_sink,
    star_condition,
    sweep_grid,
    sweep_record,
)
from zeroless.setting import Setting


def test_no_witness_when_image_is_full():
    s = Setting(2, 4, 1)
    f, rep = find_noniso_f(s)
    assert f is None
    assert rep.quotient_dim == 0
    assert rep.identity_classes == 1 and rep.full_classes == 1
    assert rep.notes


@pytest.mark.parametrize("m,bits", [(0, 15), (1, 170)])
def test_witness_on_toy_subspace(m, bits):
    # the witness puts exactly lambda in every fiber
    s = Setting(2, 4, m)
    img = CoboundaryImage(s, g3_span(s))
    f, rep = find_noniso_f(s, image=img)
    assert f is not None and f.bits == bits
    assert rep.witness_is_I_function and rep.verified
    assert is_I_function(s, f)
    assert iso_with_permutation(s, f, CorrectionFunction.zero(s), img) is None
    assert rep.full_classes == 5


def test_is_I_function():
    s = Setting(2, 4, 1)
    lam = s.lam
    every = CorrectionFunction.from_fibers(s, {u: 1 << lam for u in s.k1_sets})
    assert is_I_function(s, every)
    assert not is_I_function(s, CorrectionFunction.zero(s))


def test_star_condition_basic():
    s = Setting(2, 4, 1)
    assert star_condition(s, CorrectionFunction.zero(s), {}, {}) is None
    f = CorrectionFunction.from_fibers(s, {(0, 2, 3): 1 << s.lam})
    assert star_condition(s, f, {}, {}) == (0, 2, 3)
    # putting the top index into F1 of u_k hides that tuple
    assert star_condition(s, f, {(0, 2): {3}}, {}) is None
    # F2 cancels the fiber, but (2, 3) is also u_0 of (1, 2, 3)
    assert star_condition(s, f, {}, {(2, 3): 1 << s.lam}) == (1, 2, 3)
    assert star_condition(s, f, {(1, 2): {3}}, {(2, 3): 1 << s.lam}) is None


@given(st.integers(0, 2), st.randoms(use_true_random=False))
@settings(max_examples=30)
def test_zero_choices_never_satisfy_star(m, rng):
    s = Setting(2, 5, m)
    M = ModelHandle(s, CorrectionFunction.random(s, rng))
    c = zero_choice_exists(M)
    F1, F2 = derive_obstruction_data(M, c)
    assert star_condition(s, M.correction, F1, F2) is None


def test_obstruction_data_needs_zero_choice():
    from zeroless.choices import canonical_choice

    s = Setting(2, 4, 1)
    M = ModelHandle(s, CorrectionFunction.from_fibers(s, {(0, 1, 2): 1}))
    with pytest.raises(ValueError):
        derive_obstruction_data(M, canonical_choice(ModelHandle(s)))


@given(st.randoms(use_true_random=False))
def test_ramsey_sink_on_six_points(rng):
    col = {v: rng.randrange(2) for v in combinations(range(6), 2)}
    w = monochromatic_sink(col, range(6), 2)
    assert w is not None
    assert all(col[v] == w.colour for v in combinations(w.subset, 2))
    assert w.parity_checked and w.parity_sum == 0


def test_sink_absent_on_five_points():
    # the pentagon colouring has no monochromatic triangle
    col = {(a, b): int((b - a) % 5 in (1, 4)) for a, b in combinations(range(5), 2)}
    assert monochromatic_sink(col, range(5), 2) is None


def test_f1_closed_subset():
    ident = list(range(10))
    assert f1_closed_subset({}, ident, range(10), 2) == list(range(10))
    # F1(w) reaches one past max(w): every other element gets dropped
    F1 = {w: {max(w) + 1} for w in combinations(range(10), 2)}
    E = f1_closed_subset(F1, ident, range(10), 2)
    assert E is not None
    for t in combinations(E, 3):
        assert all(b < t[2] for b in F1[t[:2]])
    assert f1_closed_subset(F1, ident, range(3), 2) is None


def test_sweep_grid_and_record():
    grid = sweep_grid((2, 3), 5, range(2))
    assert (2, 3, 0) in grid and (3, 4, 1) in grid and (3, 3, 0) not in grid
    rec = sweep_record(2, 4, 1)
    assert rec["status"] == "ok"
    assert rec["quotient_dim"] == 0 and rec["witness"] is None
    assert rec["domain_dim"] == rec["rank"] == 8
    assert sweep_record(3, 12, 4)["status"] == "guardrail"
