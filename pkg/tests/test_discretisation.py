from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles as o
from approxlab import BudgetExceeded, ScaleLadder, covering_number, greedy_separated, packing_number, scale_profile
from approxlab.discretisation import PROFILE_HEADER, mb_approximation
from approxlab.solvers import default_budget
from approxlab.zoo import cyclic_lee, dihedral, symmetric_hamming, word_metric

Z8 = cyclic_lee(8)
GROUPS = [Z8, cyclic_lee(12), dihedral(6), symmetric_hamming(3), symmetric_hamming(4), word_metric("quaternion", ["i", "-i", "j", "-j"])]


@st.composite
def instances(draw, max_size=10):
    g = draw(st.sampled_from(GROUPS))
    X = g.subset(draw(st.lists(st.integers(0, g.order - 1), max_size=max_size)))
    values = sorted({int(v) for v in g.dist_num[0]})
    num = draw(st.sampled_from(values + [v + 1 for v in values[:3]]))
    return g, X, Fraction(num, g.denom)


def test_z8_packing_values():
    X = Z8.full()
    assert packing_number(X, 0).count == 8
    assert packing_number(X, 1).count == 4
    assert packing_number(X, 2).count == 2
    assert packing_number(X, 4).count == 1
    for r in (0, 1, 2, 4):
        assert packing_number(X, r).count == o.brute_packing(Z8, list(range(8)), Fraction(r))


def test_packing_witness_is_separated():
    count, witness = packing_number(Z8.full(), 1)
    pts = witness.tolist()
    assert len(pts) == count
    assert all(Z8.dist(a, b) > 1 for a in pts for b in pts if a != b)


def test_z8_covering_value():
    count, witness = covering_number(Z8.full(), Z8.full(), 1)
    assert count == 3
    assert Z8.full() <= witness.thicken(1)
    assert o.brute_covering(Z8, list(range(8)), list(range(8)), Fraction(1)) == 3


def test_empty_set_has_zero_discretisation():
    e = Z8.subset([])
    assert packing_number(e, 1).count == 0
    assert covering_number(e, Z8.full(), 1).count == 0


def test_single_ball_cover():
    X = Z8.subset([7, 0, 1])
    assert covering_number(X, Z8.full(), 1).count == 1


def test_no_cover_reports_infinity():
    res = covering_number(Z8.full(), Z8.subset([0]), 1)
    assert not res.exists and res.count == math.inf
    assert covering_number(Z8.full(), Z8.subset([]), 1).count == math.inf


def test_greedy_on_z8():
    assert greedy_separated(Z8.full(), 1).tolist() == [0, 2, 4, 6]
    assert greedy_separated(Z8.subset([5]), 3).tolist() == [5]
    assert greedy_separated(Z8.full(), 1, order=[1, 0, 2, 3, 4, 5, 6, 7]).tolist() == [1, 3, 5, 7]


@given(instances(max_size=12))
def test_branch_and_bound_matches_brute_force(inst):
    g, X, r = inst
    xs = X.tolist()
    assert packing_number(X, r).count == o.brute_packing(g, xs, r)
    Y = X | g.subset(list(range(min(g.order, 6))))
    assert covering_number(X, Y, r).count == o.brute_covering(g, xs, Y.tolist(), r)


@given(instances())
def test_greedy_sits_between_covering_and_packing(inst):
    g, X, r = inst
    Z = greedy_separated(X, r)
    assert set(Z.tolist()) == set(o.greedy_oracle(g, X.tolist(), r))
    assert X <= Z.thicken(r)
    assert covering_number(X, X, r).count <= len(Z) <= packing_number(X, r).count


@given(instances())
def test_sandwich(inst):
    g, X, r = inst
    Y = X | g.subset([0, g.order - 1])
    cov = covering_number(X, Y, r).count
    assert packing_number(X, 2 * r).count <= cov <= packing_number(X, r).count


@given(instances(), instances())
def test_subadditive_and_monotone(a, b):
    g, A, r = a
    if b[0] is not g:
        return
    B = b[1]
    assert packing_number(A | B, r).count <= packing_number(A, r).count + packing_number(B, r).count
    assert packing_number(A, r).count <= packing_number(A | B, r).count
    assert packing_number(A, r + Fraction(1, g.denom)).count <= packing_number(A, r).count
    Y = g.full()
    assert covering_number(A | B, Y, r).count <= covering_number(A, Y, r).count + covering_number(B, Y, r).count
    assert covering_number(A, Y, r).count <= covering_number(A, A | B, r).count


@given(instances())
def test_locally_constant_between_distance_values(inst):
    g, X, r = inst
    eps = Fraction(1, 3 * g.denom)  # strictly below the next realisable distance
    assert packing_number(X, r + eps).count == packing_number(X, r).count


def test_budget_gives_certified_interval():
    X = dihedral(12).full()
    exact_p = packing_number(X, 2).count
    exact_c = covering_number(X, X, 2).count
    p = packing_number(X, 2, budget=1)
    c = covering_number(X, X, 2, budget=1)
    assert not p.exact and not c.exact
    assert p.lower <= exact_p <= p.upper
    assert c.lower <= exact_c <= c.upper
    assert len(p.witness) == p.lower
    with pytest.raises(BudgetExceeded) as info:
        _ = p.count
    assert (info.value.lower, info.value.upper) == (p.lower, p.upper)


def test_env_overrides_budget(monkeypatch):
    monkeypatch.setenv("APPROXLAB_NODE_BUDGET", "1")
    assert default_budget() == 1
    assert not packing_number(dihedral(12).full(), 2).exact
    monkeypatch.setenv("APPROXLAB_NODE_BUDGET", "lots")
    with pytest.raises(ValueError):
        default_budget()
    monkeypatch.delenv("APPROXLAB_NODE_BUDGET")
    assert default_budget() == 10_000_000


def test_ladder_doubling_condition():
    assert ScaleLadder.parse("1, 1/2, 1/4").radii == (1, Fraction(1, 2), Fraction(1, 4))
    assert len(ScaleLadder.dyadic(1, 5)) == 5
    with pytest.raises(ValueError):
        ScaleLadder((1, Fraction(2, 3)))
    with pytest.raises(ValueError):
        ScaleLadder((1, 0))


def test_profile_of_identity_set():
    rows = scale_profile(Z8.one(), Z8.full(), ScaleLadder.dyadic(Fraction(1, 2), 3))
    assert all(r.packing.count == r.covering.count == 1 for r in rows)
    assert all(r.mb_approx == 0 for r in rows)


def test_profile_z256_tends_to_dimension_one():
    g = cyclic_lee(256, scale=256)
    rows = scale_profile(g.full(), g.full(), ScaleLadder.dyadic(Fraction(1, 2), 6))
    for row in rows:
        t = g.threshold(row.radius)
        assert row.packing.count == 256 // (t + 1)  # points on the Lee circle spaced at least t+1 apart
        assert row.mb_approx == pytest.approx(math.log(256 // (t + 1)) / math.log(1 / row.radius))
    mb = [row.mb_approx for row in rows]
    assert mb[0] == 0
    # rises towards 1 at coarse scales; below r ~ 1/16 the lattice spacing 1/256 takes over
    assert mb[0] < mb[1] < mb[2] < mb[3] < 1
    assert abs(mb[3] - 1) < 0.025


def test_profile_csv_fields():
    rows = scale_profile(Z8.full(), Z8.full(), [1, Fraction(1, 2)])
    assert PROFILE_HEADER == ["radius_num", "radius_den", "packing", "covering", "mb_approx"]
    assert rows[0].csv_fields()[:4] == ["1", "1", "4", "3"]
    assert rows[1].csv_fields()[:4] == ["1", "2", "8", "8"]
    assert rows[0].mb_approx is None  # r >= 1


def test_mb_approximation_undefined_cases():
    assert mb_approximation(0, Fraction(1, 2)) is None
    assert mb_approximation(5, Fraction(1)) is None
    assert mb_approximation(4, Fraction(1, 2)) == pytest.approx(2.0)


def test_packing_is_deterministic():
    X = symmetric_hamming(4).full()
    a = packing_number(X, Fraction(1, 2))
    b = packing_number(X, Fraction(1, 2))
    assert a.witness == b.witness
    assert np.array_equal(a.witness.indices, b.witness.indices)
