from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles as o
from approxlab import ElementSet, FiniteMetricGroup, MixedGroupsError, StructuralError, lipschitz_constant, validate_group
from approxlab.group import as_fraction, commutator_set, conjugation_set, power
from approxlab.zoo import cyclic_lee, dihedral, symmetric_hamming, word_metric

Z8 = cyclic_lee(8)
S3_TWISTED = word_metric("symmetric", [[1, 0, 2], [1, 2, 0], [2, 0, 1]], m=3)
GROUPS = [Z8, cyclic_lee(9), dihedral(5), symmetric_hamming(3), S3_TWISTED, word_metric("quaternion", ["i", "-i", "j", "-j"])]


def _subsets(draw_group=st.sampled_from(GROUPS)):
    @st.composite
    def strat(draw):
        g = draw(draw_group)
        members = draw(st.lists(st.integers(0, g.order - 1), max_size=6))
        return g, g.subset(members)

    return strat()


def test_z8_lee_distances_match_formula():
    for a in range(8):
        for b in range(8):
            assert Z8.dist(a, b) == o.lee(8, a, b)
    assert validate_group(Z8).valid


def test_as_fraction_accepts_common_spellings():
    assert as_fraction("3/4") == Fraction(3, 4)
    assert as_fraction({"num": 6, "den": 8}) == Fraction(3, 4)
    assert as_fraction([1, 3]) == Fraction(1, 3)
    assert as_fraction(2) == 2
    assert as_fraction(0.1) == Fraction(0.1)  # the exact binary value, not 1/10
    with pytest.raises(ValueError):
        as_fraction("one half")


def test_square_of_lee_ball():
    X = Z8.subset([7, 0, 1])
    assert (X * X).tolist() == [0, 1, 2, 6, 7]
    assert Z8.ball(1) == X
    assert X.is_symmetric


def test_ball_is_closed():
    assert Z8.ball(Fraction(1)).tolist() == [0, 1, 7]
    assert Z8.ball(Fraction(99, 100)).tolist() == [0]


def test_sets_from_different_groups_do_not_mix():
    with pytest.raises(MixedGroupsError):
        Z8.subset([1]) * cyclic_lee(8).subset([1])


def test_structural_errors_are_raised_at_construction():
    with pytest.raises(StructuralError):
        FiniteMetricGroup(np.zeros((2, 3), dtype=int), np.zeros(2, dtype=int), np.zeros((2, 2), dtype=int))
    with pytest.raises(StructuralError):
        FiniteMetricGroup(np.full((2, 2), 5), np.zeros(2, dtype=int), np.zeros((2, 2), dtype=int))


def _z3_tables():
    mult = np.array([[0, 1, 2], [1, 2, 0], [2, 0, 1]])
    inv = np.array([0, 2, 1])
    return mult, inv


def test_validate_reports_triangle_violation_with_witness():
    mult, inv = _z3_tables()
    # left-invariant but f(2) = 5 > f(1) + f(1)
    f = np.array([0, 2, 5])
    D = f[mult[inv[:, None], np.arange(3)[None, :]]]
    g = FiniteMetricGroup(mult, inv, D)
    rep = validate_group(g)
    assert rep.kinds() == {"triangle", "symmetry"} or "triangle" in rep.kinds()
    tri = next(v for v in rep.violations if v.kind == "triangle")
    x, y, z = tri.witness
    assert g.dist_num[x, z] > g.dist_num[x, y] + g.dist_num[y, z]


def test_validate_reports_broken_associativity():
    mult = np.array([[0, 1, 2], [1, 0, 1], [2, 2, 0]])
    inv = np.array([0, 1, 2])
    D = 1 - np.eye(3, dtype=int)
    rep = validate_group(FiniteMetricGroup(mult, inv, D))
    assert "associativity" in rep.kinds()
    assert not o.group_axioms_ok(mult)


def test_validate_reports_missing_left_invariance():
    mult, inv = _z3_tables()
    D = np.array([[0, 1, 2], [1, 0, 1], [2, 1, 0]])  # path metric, not invariant on Z3
    rep = validate_group(FiniteMetricGroup(mult, inv, D))
    assert "left_invariance" in rep.kinds()
    h, x, y = rep.violations[0].witness
    assert D[mult[h, x], mult[h, y]] != D[x, y]


def test_validate_full_checks_without_invariance():
    mult, inv = _z3_tables()
    D = np.array([[0, 1, 2], [1, 0, 0], [3, 0, 0]])
    kinds = validate_group(FiniteMetricGroup(mult, inv, D)).kinds()
    assert {"left_invariance", "identity_of_indiscernibles", "symmetry"} <= kinds


@pytest.mark.parametrize("g", GROUPS, ids=lambda g: g.meta.get("name", "g"))
def test_bi_invariance_flag_matches_exhaustive_scan(g):
    assert o.left_invariant(g)
    assert g.bi_invariant == o.bi_invariant(g)
    assert validate_group(g).bi_invariant == o.bi_invariant(g)


def test_known_bi_invariance_flags():
    assert symmetric_hamming(3).bi_invariant
    assert word_metric("quaternion", ["i", "-i", "j", "-j"]).bi_invariant
    assert not S3_TWISTED.bi_invariant
    assert not dihedral(5).bi_invariant


def test_lipschitz_constants_frozen():
    full = S3_TWISTED.full()
    assert lipschitz_constant(full, 1).constant == 2
    assert lipschitz_constant(dihedral(5).full(), 1).constant == 3
    assert lipschitz_constant(Z8.full(), 3).constant == 1


def test_lipschitz_witness_attains_constant():
    g = dihedral(5)
    res = lipschitz_constant(g.full(), 2)
    x, a, b = res.witness
    assert Fraction(int(g.dist_num[g.mult[a, x], g.mult[b, x]]), int(g.dist_num[a, b])) == res.constant


def test_lipschitz_degenerate_ball():
    assert lipschitz_constant(Z8.full(), Fraction(1, 2)).constant == 0


def test_lipschitz_rejects_empty_set():
    with pytest.raises(ValueError):
        lipschitz_constant(Z8.subset([]), 1)


@given(st.sampled_from(GROUPS), st.lists(st.integers(0, 11), min_size=1, max_size=4), st.integers(0, 3))
def test_lipschitz_matches_brute_force(g, members, r):
    X = g.subset([m % g.order for m in members])
    assert lipschitz_constant(X, r).constant == o.lipschitz(g, X.tolist(), Fraction(r))


@given(_subsets(), st.integers(0, 20))
def test_set_algebra_matches_python_sets(gX, seed):
    g, X = gX
    rng = np.random.default_rng(seed)
    Y = g.subset(rng.choice(g.order, size=min(3, g.order), replace=False))
    assert set((X * Y).tolist()) == o.prod(g, X.tolist(), Y.tolist())
    assert set(X.inverse().tolist()) == o.inverse(g, X.tolist())
    r = Fraction(int(rng.integers(0, 3)), int(rng.integers(1, 3)))
    assert set(X.thicken(r).tolist()) == o.thicken(g, X.tolist(), r)
    assert set(power(X, 3).tolist()) == o.power(g, X.tolist(), 3)
    assert set(commutator_set(X, Y).tolist()) == o.commutators(g, X.tolist(), Y.tolist())
    assert set(conjugation_set(Y, X).tolist()) == o.conjugates(g, Y.tolist(), X.tolist())


@given(_subsets())
def test_inverse_is_an_involution_and_symmetrisation_is_symmetric(gX):
    g, X = gX
    assert X.inverse().inverse() == X
    S = X | X.inverse() | g.one()
    assert S.is_symmetric and S.contains_identity


@given(_subsets())
def test_mask_round_trip(gX):
    g, X = gX
    assert ElementSet.from_mask(g, X.mask) == X
    assert len(X) == bin(X.mask).count("1")


def test_closure_is_a_subgroup():
    H = symmetric_hamming(3).closure([3])
    assert len(H) in (2, 3)
    assert H * H == H
