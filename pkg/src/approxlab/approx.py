"""Rough covers, metric approximate subgroups and commensurability.

Everything here reduces to one question: how many left translates ``g T``
of a body ``T = B * D_r(1)`` are needed to contain a set ``X``? A centre
``g`` reaches ``x`` exactly when ``g^-1 x`` lies in ``T``, so the problem is
a set cover over the candidate translates and is solved exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np

from .discretisation import BudgetExceeded, packing_number
from .group import ElementSet, as_fraction, lipschitz_constant, power, product
from .reports import Report
from .solvers import min_set_cover
from .terms import SetTerm, eval_set_term, parse_term


class NoCoverError(ValueError):
    """The allowed translates of the body do not reach every point of the target."""


def _resolve(term, env: Mapping[str, ElementSet]) -> tuple[str, ElementSet]:
    if isinstance(term, ElementSet):
        return "<set>", term
    if isinstance(term, str):
        term = parse_term(term)
    if not isinstance(term, SetTerm):
        raise TypeError(f"expected an ElementSet, SetTerm or term string, got {type(term).__name__}")
    return str(term), eval_set_term(term, env)


@dataclass
class CoverCertificate:
    """``base ⊆ translates · core · D_radius(1)``, checked when the object is built.

    ``count`` is the number of translates. ``minimal`` says whether the count
    was proved optimal for the centre pool used, and ``lower_bound`` is a proven
    lower bound on that optimum (equal to ``count`` when minimal).
    """

    base: str
    core: str
    radius: Fraction
    translates: ElementSet
    base_set: ElementSet
    core_set: ElementSet
    lower_bound: int | None = None
    minimal: bool = False
    centers: str = "group"

    def __post_init__(self):
        self.radius = as_fraction(self.radius)
        missing = self.uncovered()
        if missing:
            raise AssertionError(f"cover certificate does not verify: {len(missing)} points of {self.base} uncovered")

    @property
    def count(self) -> int:
        return len(self.translates)

    @property
    def body(self) -> ElementSet:
        return product(self.core_set, self.core_set.group.ball(self.radius))

    def uncovered(self) -> ElementSet:
        return self.base_set - product(self.translates, self.body)

    def verify(self) -> bool:
        return not self.uncovered()

    def to_json(self) -> dict:
        from .reports import encode

        return {
            "base": self.base,
            "core": self.core,
            "radius": encode(self.radius),
            "translates": self.translates.tolist(),
            "count": self.count,
            "lower_bound": self.lower_bound,
            "minimal": self.minimal,
            "centers": self.centers,
        }


def _center_pool(target: ElementSet, body: ElementSet, centers) -> tuple[str, ElementSet]:
    g = target.group
    if isinstance(centers, ElementSet):
        target._check(centers)
        return "subset", centers
    if centers == "group":
        return "group", g.full()
    if centers == "relevant":
        # only centres whose translate meets the target: target * body^-1
        return "relevant", product(target, body.inverse())
    raise ValueError(f"centers must be 'group', 'relevant' or an ElementSet, got {centers!r}")


def rough_cover(
    X: ElementSet | SetTerm | str,
    body: ElementSet | SetTerm | str,
    radius=0,
    *,
    centers="group",
    env: Mapping[str, ElementSet] | None = None,
    budget: int | None = None,
) -> CoverCertificate:
    """Fewest translates ``g · body · D_radius(1)``, g in the centre pool, covering ``X``.

    ``X`` and ``body`` may be sets or set terms evaluated in ``env``.
    ``centers`` is ``"group"`` (all of G), ``"relevant"`` (centres whose
    translate meets X; same optimum, smaller search) or an explicit ElementSet.
    Raises :class:`NoCoverError` when the pool cannot cover X. On budget
    exhaustion the returned certificate is valid but ``minimal`` is false.
    """
    env = dict(env or {})
    if isinstance(X, ElementSet):
        env.setdefault("X", X)
    base_name, target = _resolve(X, env)
    core_name, core = _resolve(body, env)
    target._check(core)
    radius = as_fraction(radius)
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    g = target.group
    T = product(core, g.ball(radius))
    mode, pool = _center_pool(target, T, centers)
    if not target:
        return CoverCertificate(base_name, core_name, radius, g.empty(), target, core, 0, True, mode)
    if not core:
        raise NoCoverError("empty body: no translate covers anything")
    gs = pool.indices
    xs = target.indices
    # reach[g, x] = g^-1 x in T
    reach = T.members[g.mult[np.ix_(g.inv[gs], xs)]]
    rows = [int.from_bytes(np.packbits(row, bitorder="little").tobytes(), "little") for row in reach]
    out = min_set_cover((1 << xs.size) - 1, rows, budget)
    if out is None:
        raise NoCoverError(f"{base_name} is not covered by translates of {core_name}·D_{radius}(1) from the {mode} pool")
    translates = g.subset(gs[out.solution])
    return CoverCertificate(base_name, core_name, radius, translates, target, core, out.lower, out.exact, mode)


@dataclass
class ApproxSubgroupResult:
    holds: bool
    reason: str
    k: int
    radius: Fraction
    count: int | None = None
    lower_bound: int | None = None
    certificate: CoverCertificate | None = None

    def __bool__(self) -> bool:
        return self.holds

    def to_json(self) -> dict:
        from .reports import encode

        return {
            "holds": self.holds,
            "reason": self.reason,
            "k": self.k,
            "radius": encode(self.radius),
            "count": self.count,
            "lower_bound": self.lower_bound,
            "certificate": self.certificate.to_json() if self.certificate is not None else None,
        }


def is_metric_approx_subgroup(X: ElementSet, k: int, r=0, *, centers="group", budget: int | None = None) -> ApproxSubgroupResult:
    """Is X symmetric, with 1 in X, and X² covered by at most k translates of ``X·D_r(1)``?

    When the search budget runs out and the certified interval straddles k,
    :class:`BudgetExceeded` is raised rather than guessing.
    """
    r = as_fraction(r)
    if X != X.inverse():
        return ApproxSubgroupResult(False, "not symmetric", k, r)
    if not X.contains_identity:
        return ApproxSubgroupResult(False, "identity not in X", k, r)
    cert = rough_cover(X * X, X, r, centers=centers, budget=budget)
    cert.base, cert.core = "X^2", "X"
    lo = cert.lower_bound
    if cert.count <= k:
        return ApproxSubgroupResult(True, f"X^2 covered by {cert.count} translates", k, r, cert.count, lo, cert)
    if lo > k:
        return ApproxSubgroupResult(False, f"minimal cover count {lo} exceeds k={k}" if cert.minimal else f"cover count at least {lo} > k={k}", k, r, cert.count if cert.minimal else None, lo, cert)
    raise BudgetExceeded(f"approximate-subgroup cover count at radius {r}", lo, cert.count)


def minimal_k(X: ElementSet, r=0, *, budget: int | None = None) -> int:
    """Least k for which X is a (k, r)-metric approximate subgroup."""
    cert = rough_cover(X * X, X, r, budget=budget)
    if not cert.minimal:
        raise BudgetExceeded("approximate-subgroup cover count", cert.lower_bound, cert.count)
    return cert.count


@dataclass
class CommensurabilityResult:
    holds: bool
    k: int
    radius: Fraction
    x_by_y: CoverCertificate | None  # X covered by translates of Y·D_r(1)
    y_by_x: CoverCertificate | None

    @property
    def counts(self) -> tuple[float, float]:
        a = self.x_by_y.count if self.x_by_y is not None else math.inf
        b = self.y_by_x.count if self.y_by_x is not None else math.inf
        return a, b

    @property
    def constant(self) -> float:
        """Least k making the pair commensurable at this radius."""
        return max(self.counts)

    def to_json(self) -> dict:
        from .reports import encode

        return {
            "holds": self.holds,
            "k": self.k,
            "radius": encode(self.radius),
            "counts": encode(list(self.counts)),
            "x_by_y": self.x_by_y.to_json() if self.x_by_y is not None else None,
            "y_by_x": self.y_by_x.to_json() if self.y_by_x is not None else None,
        }


def _cover_or_none(target: ElementSet, body: ElementSet, r, budget) -> CoverCertificate | None:
    try:
        cert = rough_cover(target, body, r, budget=budget)
    except NoCoverError:
        return None
    if not cert.minimal:
        raise BudgetExceeded("commensurability cover count", cert.lower_bound, cert.count)
    return cert


def commensurable(X: ElementSet, Y: ElementSet, k: int, r=0, *, budget: int | None = None) -> CommensurabilityResult:
    """Each of X, Y covered by at most k translates of the other thickened by r."""
    X._check(Y)
    r = as_fraction(r)
    a = _cover_or_none(X, Y, r, budget)
    b = _cover_or_none(Y, X, r, budget)
    if a is not None:
        a.base, a.core = "X", "Y"
    if b is not None:
        b.base, b.core = "Y", "X"
    holds = a is not None and b is not None and a.count <= k and b.count <= k
    return CommensurabilityResult(holds, k, r, a, b)


# -- disjoint translate family ---------------------------------------------------------


@dataclass
class TranslateFamily:
    """A maximal family of pairwise disjoint translates ``a·D_r(X)``, a in X⁴.

    ``certificate`` witnesses ``X⁴ ⊆ Δ·X²·D_{2lr}(1)`` with l the Lipschitz
    constant of X on ``D_{2r}(1)``, so X² is a (|Δ|, 2lr)-metric approximate
    subgroup.
    """

    X: ElementSet
    delta: ElementSet
    radius: Fraction
    lipschitz: Fraction
    certificate: CoverCertificate

    def report(self, k: int | None = None, *, budget: int | None = None) -> Report:
        """Gate ``N_r(X⁵) <= k·N_r(X)``, conclusion ``|Δ| <= k`` plus the X⁴ inclusion."""
        r = self.radius
        inclusion = self.certificate.verify()
        numbers = {
            "delta_size": len(self.delta),
            "lipschitz": self.lipschitz,
            "thickening": 2 * self.lipschitz * r,
            "inclusion": inclusion,
        }
        claim = "X^2 is a (k,2lr)-metric approximate subgroup"
        if k is None:
            return Report(claim, gate_checked=False, conclusion_passed=inclusion, numbers=numbers)
        n5 = packing_number(power(self.X, 5), r, budget=budget).count
        n1 = packing_number(self.X, r, budget=budget).count
        gate = {"N_r(X^5)": n5, "N_r(X)": n1, "k": k}
        if not n5 <= k * n1:
            return Report.not_met(claim, gate, numbers=numbers)
        ok = len(self.delta) <= k and inclusion
        witnesses = [] if ok else [{"delta": self.delta.tolist(), "inclusion": inclusion}]
        return Report(claim, gate_values=gate, conclusion_passed=ok, witnesses=witnesses, numbers=numbers)


def disjoint_translate_family(X: ElementSet, r=0) -> TranslateFamily:
    """Greedy (ascending index) maximal Δ ⊆ X⁴ with pairwise disjoint ``a·D_r(X)``."""
    if not X.is_symmetric:
        raise ValueError("disjoint_translate_family needs a symmetric X containing the identity")
    r = as_fraction(r)
    g = X.group
    T = product(X, g.ball(r))
    forbidden = product(T, T.inverse()).members  # aT meets bT  <=>  b^-1 a in T T^-1
    X2 = X * X
    X4 = X2 * X2
    chosen: list[int] = []
    for a in X4.indices:
        a = int(a)
        if not chosen or not forbidden[g.mult[g.inv[chosen], a]].any():
            chosen.append(a)
    delta = g.subset(chosen)
    lip = lipschitz_constant(X, 2 * r).constant
    cert = CoverCertificate("X^4", "X^2", 2 * lip * r, delta, X4, X2, None, False, "X^4")
    return TranslateFamily(X, delta, r, lip, cert)


# -- subgroup search -------------------------------------------------------------------


@dataclass
class SubgroupSearchResult:
    subgroup: ElementSet | None
    constant: int | None
    radius: Fraction
    generators: list[int] = field(default_factory=list)
    examined: int = 0
    commensurability: CommensurabilityResult | None = None

    @property
    def found(self) -> bool:
        return self.subgroup is not None

    def to_json(self) -> dict:
        from .reports import encode

        return {
            "found": self.found,
            "subgroup": self.subgroup.tolist() if self.subgroup is not None else None,
            "order": len(self.subgroup) if self.subgroup is not None else None,
            "constant": self.constant,
            "radius": encode(self.radius),
            "generators": list(self.generators),
            "examined": self.examined,
        }


def _subgroups_inside(X4: ElementSet, max_generators: int, limit: int) -> list[tuple[ElementSet, list[int]]]:
    """Distinct subgroups ``<g_1, ..., g_j>`` (j <= max_generators, g_i in X4) contained in X4."""
    g = X4.group
    found: dict[int, tuple[ElementSet, list[int]]] = {}
    level: list[tuple[ElementSet, list[int]]] = [(g.one(), [])]
    found[g.one().mask] = level[0]
    for _ in range(max_generators):
        nxt: list[tuple[ElementSet, list[int]]] = []
        for H, gens in level:
            for x in X4.indices:
                x = int(x)
                if x in H:
                    continue
                S = g.closure(gens + [x])
                if S.mask in found or not S <= X4:
                    continue
                found[S.mask] = (S, gens + [x])
                nxt.append(found[S.mask])
                if len(found) >= limit:
                    return list(found.values())
        level = nxt
        if not level:
            break
    return list(found.values())


def find_commensurable_subgroup(
    X: ElementSet,
    c_max: int,
    r=0,
    *,
    max_generators: int = 3,
    max_subgroups: int = 5000,
    budget: int | None = None,
) -> SubgroupSearchResult:
    """Best-effort search for a subgroup S ⊆ X⁴ commensurable with X.

    Candidates are subgroups generated by at most ``max_generators`` elements
    of X⁴. Among those with commensurability constant at most ``c_max`` the
    smallest constant wins, ties going to the larger subgroup and then to the
    smaller member list. Each reported constant is exact; the candidate list
    is not exhaustive over all subgroups.
    """
    if not X.is_symmetric:
        raise ValueError("find_commensurable_subgroup needs a symmetric X containing the identity")
    r = as_fraction(r)
    g = X.group
    X4 = power(X, 4)
    cands = _subgroups_inside(X4, max_generators, max_subgroups)
    ball = g.ball(r)
    best: tuple | None = None
    best_res = None
    for S, gens in cands:
        # translates of S·D_r(1) have |S·D_r(1)| points, so at least |X|/that many are needed
        lower = -(-len(X) // len(product(S, ball)))
        lower = max(lower, -(-len(S) // len(product(X, ball))))
        if lower > c_max or (best is not None and lower > best[0]):
            continue
        res = commensurable(X, S, c_max, r, budget=budget)
        c = res.constant
        if c > c_max:
            continue
        key = (int(c), -len(S), S.tolist())
        if best is None or key < best:
            best, best_res = key, (S, gens, res)
    if best_res is None:
        return SubgroupSearchResult(None, None, r, examined=len(cands))
    S, gens, res = best_res
    return SubgroupSearchResult(S, int(res.constant), r, sorted(gens), len(cands), res)
