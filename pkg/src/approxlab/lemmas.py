"""Hypothesis-gated checks of the quantitative statements about discretisation numbers.

Each check evaluates its hypothesis exactly first. If the hypothesis fails the
report says ``hypothesis not met`` and nothing else is claimed; otherwise the
conclusion is evaluated exactly and any failure comes with witnesses.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .approx import rough_cover
from .discretisation import ScaleLadder, covering_number, packing_number
from .group import ElementSet, as_fraction, lipschitz_constant, power, product
from .reports import Report


def _pack(X: ElementSet, r, budget) -> int:
    return packing_number(X, r, budget=budget).count


def _cover(X: ElementSet, Y: ElementSet, r, budget):
    return covering_number(X, Y, r, budget=budget).count


def geometric_sum(l: Fraction, n: int) -> Fraction:
    """``l^[n] = sum_{i<n} l^i`` (0 for n <= 0)."""
    return sum((Fraction(l) ** i for i in range(max(n, 0))), Fraction(0))


def random_subsets(X: ElementSet, count: int, seed: int) -> list[ElementSet]:
    """``count`` seeded random nonempty subsets of X with varied densities."""
    rng = np.random.default_rng(seed)
    idx = X.indices
    out = []
    for _ in range(count):
        if idx.size == 0:
            out.append(X)
            continue
        p = rng.uniform(0.1, 0.9)
        keep = idx[rng.random(idx.size) < p]
        if keep.size == 0:
            keep = idx[[int(rng.integers(idx.size))]]
        out.append(X.group.subset(keep))
    return out


# -- local packing / covering ---------------------------------------------------------


def local_packing_check(
    X: ElementSet,
    r,
    m: int,
    k,
    Ys: Sequence[ElementSet] | None = None,
    *,
    seed: int = 0,
    n_random: int = 32,
    budget: int | None = None,
) -> Report:
    """Gate ``N_r(X X^-1 X) <= k N_{(2m+1)r}(X)``; conclusions:

    * ``N_r(X ∩ D_{mr}(b)) <= k`` for every b in X;
    * ``N^cov_r(Y/X) <= k N^cov_{mr}(Y/X)`` for each Y ⊆ X in ``Ys``
      (default: ``n_random`` seeded random subsets plus X itself).
    """
    if m < 2:
        raise ValueError("m must be at least 2")
    r, k = as_fraction(r), as_fraction(k)
    g = X.group
    claim = "local packing and covering bounds"
    lhs = _pack(X * X.inverse() * X, r, budget)
    rhs = _pack(X, (2 * m + 1) * r, budget)
    gate = {"N_r(XX^-1X)": lhs, "N_(2m+1)r(X)": rhs, "k": k, "m": m, "r": r}
    if not (lhs <= k * rhs and rhs > 0):
        return Report.not_met(claim, gate)
    witnesses = []
    worst_local = 0
    t = g.threshold(m * r)
    for b in X.indices:
        near = X & g.subset(np.nonzero(g.dist_num[b] <= t)[0])
        n_b = _pack(near, r, budget)
        worst_local = max(worst_local, n_b)
        if n_b > k:
            witnesses.append({"part": 1, "b": int(b), "N_r": n_b})
    if Ys is None:
        Ys = [X] + random_subsets(X, n_random, seed)
    worst_ratio = Fraction(0)
    for j, Y in enumerate(Ys):
        if not Y <= X:
            raise ValueError("every Y must be a subset of X")
        fine = _cover(Y, X, r, budget)
        coarse = _cover(Y, X, m * r, budget)
        if coarse:
            worst_ratio = max(worst_ratio, Fraction(fine, coarse))
        if fine > k * coarse:
            witnesses.append({"part": 2, "Y": Y.tolist(), "cov_r": fine, "cov_mr": coarse})
    numbers = {"max_local_packing": worst_local, "max_cover_ratio": worst_ratio, "families": len(Ys)}
    return Report(claim, gate_values=gate, conclusion_passed=not witnesses, witnesses=witnesses, numbers=numbers)


def discretisation_counting_check(
    X: ElementSet,
    r,
    k,
    Ys: ElementSet | Sequence[ElementSet] | None = None,
    *,
    seed: int = 0,
    n_random: int = 8,
    budget: int | None = None,
) -> Report:
    """Gate ``N_r(X X^-1 X) <= k N_{9r}(X)``; with Z a maximum 2r-separated subset of X,
    check ``N^cov_{2r}(Y/X) <= |Z ∩ D_{2r}(Y)| <= k N^cov_{2r}(Y/X)`` for each Y ⊆ X."""
    r, k = as_fraction(r), as_fraction(k)
    claim = "discretisation counting sandwich"
    lhs = _pack(X * X.inverse() * X, r, budget)
    rhs = _pack(X, 9 * r, budget)
    gate = {"N_r(XX^-1X)": lhs, "N_9r(X)": rhs, "k": k, "r": r}
    if not (lhs <= k * rhs and rhs > 0):
        return Report.not_met(claim, gate)
    Z = packing_number(X, 2 * r, budget=budget).witness
    if Ys is None:
        Ys = [X, X.group.empty()] + random_subsets(X, n_random, seed)
    elif isinstance(Ys, ElementSet):
        Ys = [Ys]
    rows, witnesses = [], []
    for Y in Ys:
        if not Y <= X:
            raise ValueError("every Y must be a subset of X")
        cov = _cover(Y, X, 2 * r, budget)
        middle = len(Z & Y.thicken(2 * r))
        rows.append([cov, middle])
        if not (cov <= middle <= k * cov):
            witnesses.append({"Y": Y.tolist(), "cov_2r": cov, "middle": middle})
    numbers = {"Z": Z.tolist(), "rows": rows}
    return Report(claim, gate_values=gate, conclusion_passed=not witnesses, witnesses=witnesses, numbers=numbers)


# -- product thickening ---------------------------------------------------------------


def thickening_radii(l: Fraction, delta: Fraction, m: int) -> dict[int, Fraction]:
    """``s_2 = delta``, ``s_{n+1} = delta + l s_n``, so ``s_n = l^[n-1] delta``."""
    s = {2: Fraction(delta)}
    for n in range(2, m):
        s[n + 1] = delta + l * s[n]
    return s


def product_thickening_chain(
    X: ElementSet,
    delta,
    m: int,
    r,
    *,
    k: int | None = None,
    budget: int | None = None,
) -> Report:
    """Check ``X^n ⊆ Δ^{n-1} D_{s_n}(X)`` for n = 2..m.

    Δ is a minimal cover of X² by translates of ``D_delta(X)``. Gates: X is a
    (k, delta)-metric approximate subgroup (when k is given) and
    ``l^[m-2] delta < r`` where l is the Lipschitz constant of X on
    ``D_r(1)``; the gate is waived when ``D_r(1)`` is the whole group, since
    every radius then lies in the Lipschitz range.
    """
    delta, r = as_fraction(delta), as_fraction(r)
    if m < 2:
        raise ValueError("m must be at least 2")
    g = X.group
    claim = "product thickening inclusions"
    cert = rough_cover(X * X, X, delta, budget=budget)
    lip = lipschitz_constant(X, r).constant if X else Fraction(0)
    s = thickening_radii(lip, delta, m)
    reach = geometric_sum(lip, m - 2) * delta
    whole = len(g.ball(r)) == g.order
    gate = {
        "cover_count": cert.count,
        "k": k,
        "lipschitz": lip,
        "r": r,
        "l^[m-2]*delta": reach,
        "ball_is_group": whole,
    }
    if (k is not None and cert.count > k) or not (reach < r or whole):
        return Report.not_met(claim, gate)
    Delta = cert.translates
    witnesses = []
    Xn = X
    D_pow = g.one()
    for n in range(2, m + 1):
        Xn = Xn * X
        D_pow = D_pow * Delta
        rhs = D_pow * X.thicken(s[n])
        missing = Xn - rhs
        if missing:
            witnesses.append({"n": n, "missing": missing.tolist()[:16]})
            break
    numbers = {
        "delta_set": Delta.tolist(),
        "radii": {str(n): v for n, v in s.items()},
        "first_failure": witnesses[0]["n"] if witnesses else None,
    }
    return Report(
        claim,
        gate_values=gate,
        conclusion_passed=not witnesses,
        witnesses=witnesses,
        numbers=numbers,
        notes=["radii follow s_2 = delta, s_(n+1) = delta + l*s_n"],
    )


# -- growth in doubling scales --------------------------------------------------------


@dataclass
class GrowthReport:
    """Per-scale ``N_{r_i}(X^9)`` against ``N_{9 r_i}(X)``."""

    scales: ScaleLadder
    numerators: list[int]
    denominators: list[int]
    k_bounds: list[Fraction | float]
    passed: list[bool]
    targets: list = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(self.passed)

    def to_json(self) -> dict:
        from .reports import encode

        return {
            "scales": encode(list(self.scales)),
            "N_r(X^9)": self.numerators,
            "N_9r(X)": self.denominators,
            "k_bounds": encode(self.k_bounds),
            "targets": encode(self.targets),
            "passed": list(self.passed),
        }


def _ratio(a: int, b: int):
    return Fraction(a, b) if b else float("inf")


def growth_condition(X: ElementSet, ladder: ScaleLadder | Sequence, k_seq, *, budget: int | None = None) -> GrowthReport:
    """``N_{r_i}(X^9) <= k_i N_{9 r_i}(X)`` at every scale (a single k applies to all)."""
    if not isinstance(ladder, ScaleLadder):
        ladder = ScaleLadder(tuple(ladder))
    if not isinstance(k_seq, (list, tuple)):
        k_seq = [k_seq] * len(ladder)
    if len(k_seq) != len(ladder):
        raise ValueError("need one k per scale")
    X9 = power(X, 9)
    nums, dens, bounds, passed = [], [], [], []
    for r, k in zip(ladder, k_seq):
        a = _pack(X9, r, budget)
        b = _pack(X, 9 * r, budget)
        nums.append(a)
        dens.append(b)
        bounds.append(_ratio(a, b))
        passed.append(b > 0 and a <= as_fraction(k) * b)
    return GrowthReport(ladder, nums, dens, bounds, passed, [as_fraction(k) for k in k_seq])


def _iroot(x: int, q: int) -> int:
    """Largest integer y with y**q <= x."""
    if x < 2:
        return x
    y = 1 << -(-x.bit_length() // q)  # over-estimate
    while True:
        z = ((q - 1) * y + x // y ** (q - 1)) // q
        if z >= y:
            break
        y = z
    while y**q > x:
        y -= 1
    while (y + 1) ** q <= x:
        y += 1
    return y


def alpha_powers(m: int, n: int, extra_bits: int = 40) -> tuple[list[Fraction], bool]:
    """Radii ``alpha^-i`` for i = 0..2n with ``alpha = 2^(m/2n)``.

    Exact when 2n divides m; otherwise each radius is the dyadic floor with
    denominator ``2^(m+extra_bits)``.
    """
    q = 2 * n
    if m % q == 0:
        step = m // q
        return [Fraction(1, 2 ** (step * i)) for i in range(q + 1)], True
    P = m + extra_bits
    out = []
    for i in range(q + 1):
        # floor(2^P * 2^(-i m / q)) = floor((2^(qP - i m))^(1/q))
        out.append(Fraction(_iroot(2 ** (q * P - i * m), q), 2**P))
    return out, False


@dataclass
class ScaleSelection:
    scales: list[Fraction]
    growth: GrowthReport | None
    report: Report
    index_set: list[int] = field(default_factory=list)

    def to_json(self) -> dict:
        from .reports import encode

        return {
            "scales": encode(self.scales),
            "index_set": list(self.index_set),
            "growth": self.growth.to_json() if self.growth is not None else None,
            "report": self.report.to_json(),
        }


def select_scales(X: ElementSet, m: int, n: int, k: int, C, *, budget: int | None = None) -> ScaleSelection:
    """Pick n doubling scales at which ``N_{r_i}(X^9) <= k^8 C^(1/n) N_{9 r_i}(X)``.

    Gates: X symmetric, X a (k, 2^-m)-metric approximate subgroup (translates
    from the whole group), ``N_{2^-m}(X) <= C N_1(X)`` and
    ``m >= 2n log2(18(1 + l^[7]))`` with l the Lipschitz constant of X on
    ``D_1(1)`` (raised to 1 if smaller).
    """
    if n < 1 or m < 1:
        raise ValueError("m and n must be positive")
    C = as_fraction(C)
    claim = "doubling scale selection"
    delta = Fraction(1, 2**m)
    l = max(lipschitz_constant(X, 1).constant, Fraction(1)) if X else Fraction(1)
    l7 = geometric_sum(l, 7)
    cert = rough_cover(X * X, X, delta, budget=budget) if X else None
    fine = _pack(X, delta, budget)
    coarse = _pack(X, 1, budget)
    m_ok = 2**m >= (18 * (1 + l7)) ** (2 * n)
    gate = {
        "symmetric": X.is_symmetric,
        "cover_count": cert.count if cert else None,
        "k": k,
        "N_2^-m(X)": fine,
        "N_1(X)": coarse,
        "C": C,
        "lipschitz": l,
        "l^[7]": l7,
        "m": m,
        "n": n,
        "m_bound_holds": m_ok,
    }
    if not (X.is_symmetric and cert is not None and cert.count <= k and coarse > 0 and fine <= C * coarse and m_ok):
        return ScaleSelection([], None, Report.not_met(claim, gate))
    alpha, exact = alpha_powers(m, n)
    packs = [_pack(X, a, budget) for a in alpha]
    # ratio_i = N_{alpha^-i} / N_{alpha^-(i-1)} <= C^(1/n)  <=>  N_i^n <= C N_{i-1}^n
    I = [i for i in range(1, 2 * n + 1) if packs[i] ** n <= C * packs[i - 1] ** n]
    pigeonhole = len(I) >= n
    numbers = {"alpha_exact": exact, "alpha_powers": alpha, "packings": packs, "index_set": I, "pigeonhole": pigeonhole}
    if not pigeonhole:
        return ScaleSelection(
            [], None, Report(claim, gate_values=gate, conclusion_passed=False, witnesses=[{"index_set": I}], numbers=numbers), I
        )
    chosen = I[:n]
    scales = [2 * (l7 * delta + alpha[i]) for i in chosen]
    witnesses = []
    for j in range(n):
        if scales[j] > 1:
            witnesses.append({"scale": j, "reason": "r_i > 1"})
        if j + 1 < n and 2 * scales[j + 1] > scales[j]:
            witnesses.append({"scale": j, "reason": "2 r_(i+1) > r_i"})
    X9 = power(X, 9)
    nums, dens, bounds, passed = [], [], [], []
    bound = Fraction(k) ** (8 * n) * C
    for r in scales:
        a = _pack(X9, r, budget)
        b = _pack(X, 9 * r, budget)
        nums.append(a)
        dens.append(b)
        bounds.append(_ratio(a, b))
        ok = a**n <= bound * b**n
        passed.append(ok)
        if not ok:
            witnesses.append({"scale": str(r), "N_r(X^9)": a, "N_9r(X)": b})
    ladder = ScaleLadder(tuple(scales)) if not any(w.get("reason") for w in witnesses) else None
    growth = GrowthReport(ladder or tuple(scales), nums, dens, bounds, passed, [f"k^8*C^(1/{n})"] * n)
    numbers["scales"] = scales
    report = Report(claim, gate_values=gate, conclusion_passed=not witnesses, witnesses=witnesses, numbers=numbers)
    return ScaleSelection(scales, growth, report, I)


# -- infinitesimals -------------------------------------------------------------------


def conjugation_shift(l: Fraction) -> int:
    """``ceil(log2 l)``, taken as 0 when l <= 1."""
    k = 0
    while Fraction(2) ** k < l:
        k += 1
    return k


def infinitesimal_chain_check(ladder: ScaleLadder | Sequence, X: ElementSet, l=None) -> Report:
    """Check ``D_{r_(i+1)} D_{r_(i+1)}^-1 ⊆ D_{r_i}`` and ``x^-1 D_{r_(i+k)} x ⊆ D_{r_i}``.

    ``l`` defaults to the exact Lipschitz constant of X on ``D_{r_0}(1)``;
    a caller-supplied l is gated against it.
    """
    if not isinstance(ladder, ScaleLadder):
        ladder = ScaleLadder(tuple(ladder))
    g = X.group
    radii = list(ladder)
    claim = "infinitesimal chain inclusions"
    actual = lipschitz_constant(X, radii[0]).constant
    l = actual if l is None else as_fraction(l)
    k = conjugation_shift(l)
    gate = {"lipschitz_actual": actual, "l": l, "k": k}
    if actual > l:
        return Report.not_met(claim, gate)
    last = len(radii) - 1
    witnesses = []
    norms = g.norm_num
    for i in range(last):
        B = g.ball(radii[i + 1])
        prod = B * B.inverse()
        bad = prod - g.ball(radii[i])
        if bad:
            witnesses.append({"part": "product", "i": i, "element": int(bad.indices[0])})
    conj = g.conjugation_table()
    xs = X.indices
    for i in range(0, last - k + 1):
        B = g.ball(radii[i + k]).indices
        images = conj[np.ix_(xs, B)]
        over = norms[images] > g.threshold(radii[i])
        if over.any():
            a, b = np.argwhere(over)[0]
            witnesses.append({"part": "conjugation", "i": i, "x": int(xs[a]), "element": int(B[b])})
    numbers = {"levels": last + 1, "conjugation_checks": max(0, last - k + 1)}
    return Report(claim, gate_values=gate, conclusion_passed=not witnesses, witnesses=witnesses, numbers=numbers)
