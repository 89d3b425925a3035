from __future__ import annotations

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from approxlab.lie import (
    CHARTS,
    LieChart,
    LogDomainError,
    build_ladder,
    chart_from_spec,
    expm,
    logm,
    make_chart,
    verify_ladder,
    verify_property,
)
from approxlab.lie.chart import CONSTANT_FLOOR, so3_basis

FAST = {"n_random": 2000, "sobol_log2": 8}


@pytest.fixture(scope="module")
def so3():
    return make_chart("so3", **FAST)


def hat(w):
    x, y, z = w
    return np.array([[0, -z, y], [z, 0, -x], [-y, x, 0]], dtype=float)


def rodrigues_exp(w):
    w = np.asarray(w, dtype=float)
    t = np.linalg.norm(w)
    K = hat(w)
    if t == 0:
        return np.eye(3)
    return np.eye(3) + np.sin(t) / t * K + (1 - np.cos(t)) / t**2 * K @ K


def rodrigues_log(R):
    t = np.arccos(np.clip((np.trace(R) - 1) / 2, -1, 1))
    if t < 1e-12:
        return np.zeros(3)
    return t / (2 * np.sin(t)) * np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])


small = arrays(np.float64, (3, 3), elements=st.floats(-0.6, 0.6))


@given(small)
def test_expm_matches_scipy(A):
    assert np.allclose(expm(A), scipy.linalg.expm(A), rtol=1e-12, atol=1e-13)


@given(small)
def test_log_exp_roundtrip(A):
    assert np.abs(logm(expm(A)) - A).max() <= 1e-10


def test_expm_large_norm_and_batching():
    rng = np.random.default_rng(1)
    A = rng.normal(scale=3, size=(5, 4, 4))
    out = expm(A)
    for i in range(5):
        assert np.allclose(out[i], scipy.linalg.expm(A[i]), rtol=1e-10)


def test_logm_matches_scipy_on_general_matrix():
    rng = np.random.default_rng(2)
    M = np.eye(3) + 0.4 * rng.normal(size=(3, 3))
    assert np.allclose(logm(M), scipy.linalg.logm(M).real, atol=1e-11)


def test_log_outside_domain_raises():
    with pytest.raises(LogDomainError):
        logm(np.diag([-1.0, 2.0]))
    with pytest.raises(LogDomainError):
        logm(np.array([[-1.0, 0.0], [0.0, -1.0]]))


def test_bch_against_rodrigues(so3):
    x = np.array([0.1, 0, 0])
    y = np.array([0, 0.1, 0])
    z = so3.bch(x, y)
    direct = rodrigues_log(rodrigues_exp(x) @ rodrigues_exp(y))
    assert np.abs(z - direct).max() <= 1e-9
    assert np.allclose(so3.exp(z), rodrigues_exp(x) @ rodrigues_exp(y), atol=1e-10)


def test_bch_identity_and_commuting(so3):
    x = np.array([0.05, -0.02, 0.03])
    assert np.allclose(so3.bch(x, np.zeros(3)), x, atol=1e-13)
    assert np.allclose(so3.bch(x, 2 * x), 3 * x, atol=1e-13)


def test_bch_second_order_term(so3):
    # x*y = x + y + [x,y]/2 + O(|.|^3); in so(3) coordinates [x,y] is the cross product
    rng = np.random.default_rng(3)
    for _ in range(20):
        x, y = rng.normal(size=(2, 3)) * 1e-3
        z = so3.bch(x, y)
        assert np.abs(z - (x + y + np.cross(x, y) / 2)).max() <= 1e-8


def test_bch_associative_on_small_inputs(so3):
    rng = np.random.default_rng(4)
    x, y, w = (so3.sample_ball(rng, 200, so3.eps / 4) for _ in range(3))
    left = so3.bch(so3.bch(x, y), w)
    right = so3.bch(x, so3.bch(y, w))
    assert np.abs(left - right).max() <= 1e-8


def test_so3_constants_are_sane(so3):
    # the quadratic BCH term gives C0 close to 1/2 with unit structure constants
    assert 0.3 <= so3.raw["C0_sampled"] <= 0.7
    assert so3.C0 == pytest.approx(1.25 * so3.raw["C0_sampled_eps"]) or so3.C0 == CONSTANT_FLOOR
    assert so3.eps <= min(so3.eps1, 1 / (2 * so3.C1), 1 / (17 * so3.C0)) + 1e-15


def test_constants_hold_on_fresh_samples(so3):
    rng = np.random.default_rng(5)
    x = so3.sample_ball(rng, 4000, so3.eps)
    y = so3.sample_ball(rng, 4000, so3.eps)
    dev = so3.norm(so3.bch(x, y) - (x + y))
    assert np.all(dev <= so3.C0 * so3.norm(x) * so3.norm(y) + 1e-15)


def test_abelian_chart_uses_constant_floor():
    chart = make_chart("diag2", **FAST)
    assert chart.raw["C0_sampled"] < 1e-12
    assert chart.C0 == chart.C1 == CONSTANT_FLOOR
    assert chart.eps == chart.eps1  # floors make the other two bounds huge


def test_estimates_monotone_in_safety():
    a = make_chart("so3", safety=1.0, **FAST)
    b = make_chart("so3", safety=2.0, **FAST)
    assert b.C0 >= a.C0 and b.C1 >= a.C1 and b.eps <= a.eps


def test_ladder_radii(so3):
    lad = build_ladder(so3, 6)
    assert lad.radii[0] == pytest.approx(17 ** -0.25 * so3.eps, rel=1e-15)
    assert lad.radii[4] / lad.radii[0] == pytest.approx(1 / 17, rel=1e-12)
    ratios = lad.radii[1:] / lad.radii[:-1]
    assert np.allclose(ratios, 17 ** -0.25, rtol=1e-12, atol=0)
    assert np.all(np.diff(lad.radii) < 0)


def test_chart_validation():
    with pytest.raises(ValueError):
        LieChart(np.stack([so3_basis()[0], so3_basis()[0]]))
    with pytest.raises(ValueError):
        LieChart(so3_basis(), safety=0.5)
    with pytest.raises(ValueError):
        build_ladder(LieChart(so3_basis()), 3)
    assert set(CHARTS) == {"so3", "sl2", "diag2"}


def test_chart_from_spec_basis_rows():
    spec = {"name": "so3-rows", "basis": [m.ravel().tolist() for m in so3_basis()], "seed": 1, "n_random": 2000}
    chart = chart_from_spec(spec)
    assert chart.dim == 3 and chart.size == 3
    with pytest.raises(ValueError):
        chart_from_spec({"name": "so3", "inner_product": "killing"})


@pytest.mark.parametrize("prop", range(1, 7))
def test_properties_at_low_sample_count(so3, prop):
    lad = build_ladder(so3, 4)
    chk = verify_property(so3, lad, prop, samples=600, seed=9)
    assert chk.passed, chk.counterexamples[:3]
    assert chk.to_json()["counterexample_count"] == 0


def test_identity_satisfies_memberships(so3):
    lad = build_ladder(so3, 3)
    zero = np.zeros((1, 3))
    assert so3.norm(so3.bch(zero, zero))[0] <= lad.radii[-1]
    g17 = np.linalg.matrix_power(so3.exp(zero[0]), 17)
    assert so3.norm(so3.log(g17)) <= lad.rho(3 + 4)


def test_property_one_reports_cover_counts(so3):
    chk = verify_property(so3, build_ladder(so3, 2), 1, samples=900, seed=0)
    assert chk.details["limit"] == 17**3
    assert all(0 < c <= 17**3 for c in chk.details["cover_counts"])


@pytest.mark.parametrize("name,prop", [("so3", 4), ("sl2", 2)])
def test_inflated_eps_produces_counterexamples(name, prop):
    chart = make_chart(name, **FAST)
    chart.eps *= 40  # far outside the range the constants were estimated for
    chk = verify_property(chart, build_ladder(chart, 4), prop, samples=2000, seed=0)
    assert not chk.passed and chk.counterexamples
    assert chk.worst_margin > 1e-9


def test_verify_ladder_is_deterministic():
    a = verify_ladder(make_chart("sl2", **FAST), n_max=2, samples=300, seed=4)
    b = verify_ladder(make_chart("sl2", **FAST), n_max=2, samples=300, seed=4)
    assert a == b
    assert [p["property"] for p in a["properties"]] == [1, 2, 3, 4, 5, 6]
