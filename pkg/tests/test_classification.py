import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dense import in_row_space, rank, to_dense
from zeroless.choices import correction_of
from zeroless.classification import (
    CoboundaryImage,
    GaugeTriple,
    QuotientAction,
    all_permutations,
    coboundary,
    coboundary_image,
    count_iso_classes,
    count_orbits,
    dense_coboundary_matrix,
    g3_span,
    gauge_generators,
    generator_column,
    generator_gauge,
    image_is_invariant,
    iso_over_identity,
    iso_with_permutation,
    permutation_action,
    sparse_coboundary_matrix,
    verify_permutation_certificate,
)
from zeroless.model import CorrectionFunction, ModelHandle
from zeroless.setting import GuardrailError, Setting

# (k, n, m) -> (domain dim, rank of B); ranks computed by the dense numpy oracle
FROZEN_RANKS = {
    (2, 3, 0): (1, 1),
    (2, 3, 1): (2, 2),
    (2, 4, 0): (4, 4),
    (2, 4, 1): (8, 8),
    (2, 4, 2): (16, 16),
    (2, 5, 1): (20, 20),
    (3, 4, 0): (1, 1),
    (3, 4, 1): (2, 2),
    (3, 5, 1): (10, 10),
}


def test_single_generator_column():
    s = Setting(2, 3, 1)
    # g1 at ((1,2), s=1) hits u=(0,1,2), whose u_0 = (1,2), at s=1
    assert generator_column(s, ("g1", (1, 2), 1)) == 2
    assert generator_column(s, ("g1", (0, 1), 0)) == 0  # (0,1) is u_2, not summed


@pytest.mark.parametrize("key", sorted(FROZEN_RANKS))
def test_frozen_ranks(key):
    s = Setting(*key)
    dim, r = FROZEN_RANKS[key]
    img = coboundary_image(s)
    assert (img.domain_dim, img.rank) == (dim, r)
    d = dense_coboundary_matrix(s)
    assert rank(to_dense(d.rows, dim)) == r


@pytest.mark.parametrize("key", [(2, 4, 1), (3, 5, 1), (2, 5, 2)])
def test_sparse_equals_dense(key):
    s = Setting(*key)
    assert sparse_coboundary_matrix(s).rows == dense_coboundary_matrix(s).rows


def test_generator_columns_match_coboundary():
    s = Setting(2, 4, 2)
    for lbl in gauge_generators(s):
        assert coboundary(s, generator_gauge(s, lbl)).bits == generator_column(s, lbl)


@given(st.integers(0, 2), st.randoms(use_true_random=False))
def test_coboundary_is_linear_and_matches_choice(m, rng):
    s = Setting(2, 4, m)
    a, b = GaugeTriple.random(s, rng), GaugeTriple.random(s, rng)
    assert coboundary(s, a + b) == coboundary(s, a) + coboundary(s, b)
    # delta g is the correction of the choice g on M_{I,0}
    assert correction_of(ModelHandle(s), a.to_choice()) == dict(coboundary(s, a).items())


@given(st.integers(0, 2), st.randoms(use_true_random=False))
def test_membership_certificate(m, rng):
    s = Setting(2, 4, m)
    img = coboundary_image(s)
    g = GaugeTriple.random(s, rng)
    f = coboundary(s, g)
    cert = img.contains(f)
    assert cert.holds
    assert coboundary(s, cert.gauge) == f


def test_non_membership_witness_on_toy_subspace():
    s = Setting(2, 4, 1)
    img = CoboundaryImage(s, g3_span(s))
    rows = to_dense(img.matrix.rows, img.domain_dim)
    rng = random.Random(3)
    seen = 0
    for _ in range(40):
        f = CorrectionFunction.random(s, rng)
        cert = img.contains(f)
        vec = to_dense([f.bits], img.domain_dim)[0]
        assert cert.holds == in_row_space(rows, vec)
        if not cert.holds:
            seen += 1
            w = cert.witness.bits
            assert all(bin(r & w).count("1") % 2 == 0 for r in img.matrix.rows)
            assert bin(f.bits & w).count("1") % 2 == 1
    assert seen > 0


def test_iso_over_identity_full_image():
    s = Setting(2, 4, 1)
    rng = random.Random(5)
    f1, f2 = CorrectionFunction.random(s, rng), CorrectionFunction.random(s, rng)
    cert = iso_over_identity(s, f1, f2)
    assert cert.holds
    assert coboundary(s, cert.gauge) == f1 + f2


@given(st.permutations(range(5)), st.permutations(range(5)), st.randoms(use_true_random=False))
@settings(max_examples=30)
def test_permutation_action_is_a_group_action(p, q, rng):
    s = Setting(2, 5, 1)
    f = CorrectionFunction.random(s, rng)
    pq = tuple(p[q[a]] for a in range(5))
    assert permutation_action(s, p, permutation_action(s, q, f)) == permutation_action(s, pq, f)
    assert permutation_action(s, range(5), f) == f


def test_permutation_action_moves_fibers():
    s = Setting(2, 4, 1)
    f = CorrectionFunction.from_fibers(s, {(0, 1, 2): 1})
    g = permutation_action(s, (3, 0, 1, 2), f)
    assert g.fiber((0, 1, 3)) == 1
    assert g.fiber((0, 1, 2)) == 0


@pytest.mark.parametrize("key", [(2, 4, 1), (2, 5, 1), (3, 5, 1)])
def test_image_is_permutation_invariant(key):
    s = Setting(*key)
    assert image_is_invariant(s, all_permutations(s))
    # the toy subspace is invariant as well
    sub = g3_span(s)
    space = to_dense(sub.rows, len(s.domain_basis))
    r = rank(space)
    for perm in list(all_permutations(s))[:24]:
        moved = [permutation_action(s, perm, CorrectionFunction(s, row)).bits for row in sub.rows]
        assert rank(np.vstack([space, to_dense(moved, len(s.domain_basis))])) == r


def test_toy_subspace_orbits_and_burnside():
    for m in (0, 1):
        s = Setting(2, 4, m)
        img = CoboundaryImage(s, g3_span(s))
        assert img.quotient_dim == 4
        assert count_iso_classes(s, "identity", image=img).count == 16
        full = count_iso_classes(s, "full", image=img)
        assert full.count == 5
        assert full.burnside == 5


def test_full_image_counts_collapse():
    s = Setting(2, 4, 1)
    assert count_iso_classes(s, "identity").count == 1
    c = count_iso_classes(s, "full")
    assert (c.count, c.quotient_dim) == (1, 0)
    with pytest.raises(ValueError):
        count_iso_classes(s, "other")


def test_sampled_orbit_count_bounded_by_exact():
    s = Setting(2, 4, 1)
    exact = count_orbits(s, g3_span(s))
    sampled = count_orbits(s, g3_span(s), sample=200, rng=random.Random(1))
    assert sampled.count <= exact.count
    assert not exact.sampled


def test_quotient_action_canon_lift():
    s = Setting(2, 4, 1)
    qa = QuotientAction(s, g3_span(s))
    for q in range(1 << qa.dim):
        assert qa.canon(qa.lift(q)) == q


def test_iso_classes_form_equivalence():
    s = Setting(2, 4, 1)
    img = CoboundaryImage(s, g3_span(s))
    reps = img.coset_representatives()
    rel = {}
    for a in reps:
        for b in reps:
            rel[a.bits, b.bits] = iso_with_permutation(s, a, b, img) is not None
    for a in reps:
        assert rel[a.bits, a.bits]
        for b in reps:
            assert rel[a.bits, b.bits] == rel[b.bits, a.bits]
            for c in reps:
                if rel[a.bits, b.bits] and rel[b.bits, c.bits]:
                    assert rel[a.bits, c.bits]


def test_permutation_certificate_verifies():
    s = Setting(2, 4, 1)
    rng = random.Random(2)
    f1, f2 = CorrectionFunction.random(s, rng), CorrectionFunction.random(s, rng)
    cert = iso_with_permutation(s, f1, f2)
    assert cert is not None and cert.perm == (0, 1, 2, 3)
    assert verify_permutation_certificate(s, f1, f2, cert)


def test_cache_round_trip(tmp_path):
    s = Setting(2, 4, 1)
    img = CoboundaryImage(s)
    h1 = img.save(str(tmp_path))
    again = CoboundaryImage.load(s, str(tmp_path))
    assert again is not None
    assert again.matrix.rows == img.matrix.rows
    assert again.save(str(tmp_path)) == h1
    assert CoboundaryImage.load(Setting(2, 4, 0), str(tmp_path)) is None


def test_dimension_guardrail():
    with pytest.raises(GuardrailError):
        CoboundaryImage(Setting(3, 12, 4))
