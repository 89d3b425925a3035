"""Exact checker for the seven properties of a nested chain ``X_N ⊆ ... ⊆ X_0``.

With ``D = D_{r_s}`` thickening and c the commensurability constant, the
properties checked for every level n < N are

1. X² and X_1 (also X_0, reported separately) are (c, r_s)-commensurable
2. ``X_{n+1} X_{n+1} ⊆ D(X_n)``
3. X_n is covered by c translates of ``D(X_{n+1})``
4. ``x^-1 X_{n+1} x ⊆ D(X_n)`` for x in X_1
5. ``[X_{n1}, X_{n2}] ⊆ D(X_n)`` whenever n < n1 + n2
6. ``{x in X_0 : x^17 in X_n} ⊆ X_{n+1}``
7. x, y in X_0 with x² = y² gives ``y^-1 x in D(X_N)``
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .approx import commensurable, rough_cover
from .discretisation import BudgetExceeded
from .group import ElementSet, as_fraction, commutator_set, conjugation_set


class FiltrationError(ValueError):
    pass


@dataclass
class Filtration:
    """A chain ``X_0 ⊇ X_1 ⊇ ... ⊇ X_N`` of symmetric sets containing 1."""

    chain: tuple[ElementSet, ...]
    ambient: ElementSet
    r_s: Fraction
    c: int

    def __post_init__(self):
        self.chain = tuple(self.chain)
        self.r_s = as_fraction(self.r_s)
        if len(self.chain) < 1:
            raise FiltrationError("chain needs at least X_0")
        if self.r_s < 0 or int(self.c) < 1:
            raise FiltrationError("need r_s >= 0 and c >= 1")
        self.c = int(self.c)
        for n, X in enumerate(self.chain):
            self.ambient._check(X)
            if not X.is_symmetric:
                raise FiltrationError(f"X_{n} must be symmetric and contain the identity")
        for n in range(len(self.chain) - 1):
            if not self.chain[n + 1] <= self.chain[n]:
                raise FiltrationError(f"chain does not nest: X_{n + 1} is not inside X_{n}")

    @property
    def N(self) -> int:
        return len(self.chain) - 1

    @property
    def group(self):
        return self.ambient.group


@dataclass
class PropertyResult:
    prop: str
    passed: bool
    level: int | None = None
    witness: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"property": self.prop, "level": self.level, "passed": self.passed, "witness": self.witness}


@dataclass
class FiltrationReport:
    results: list[PropertyResult]

    def passed(self, prop: str) -> bool:
        return all(r.passed for r in self.results if r.prop == prop)

    @property
    def properties(self) -> dict[str, bool]:
        names = sorted({r.prop for r in self.results}, key=_prop_key)
        return {p: self.passed(p) for p in names}

    @property
    def failed(self) -> list[str]:
        return [p for p, ok in self.properties.items() if not ok]

    @property
    def all_passed(self) -> bool:
        return not self.failed

    def to_json(self) -> dict:
        return {
            "claim": "filtration properties",
            "properties": self.properties,
            "failed": self.failed,
            "results": [r.to_json() for r in self.results],
        }


def _prop_key(p: str):
    head = p.split("_")[0]
    return (int(head), p)


def _first(s: ElementSet):
    return int(s.indices[0]) if s else None


def filtration_check(f: Filtration, *, budget: int | None = None) -> FiltrationReport:
    g = f.group
    X, chain, r, c, N = f.ambient, f.chain, f.r_s, f.c, f.N
    out: list[PropertyResult] = []
    D = [Xn.thicken(r) for Xn in chain]
    X2 = X * X

    # (1): commensurability with X^2, for X_1 (statement) and X_0 (proof)
    for name, idx in (("1_X1", 1), ("1_X0", 0)):
        if idx > N:
            continue
        res = commensurable(X2, chain[idx], c, r, budget=budget)
        a, b = (x if x != float("inf") else "inf" for x in res.counts)
        out.append(PropertyResult(name, res.holds, None, {"X2_by_Xn": a, "Xn_by_X2": b}))

    x1 = chain[1] if N >= 1 else chain[0]
    for n in range(N):
        nxt = chain[n + 1]
        # (2)
        bad = (nxt * nxt) - D[n]
        out.append(PropertyResult("2", not bad, n, {"element": _first(bad)} if bad else {}))
        # (3)
        cert = rough_cover(chain[n], nxt, r, budget=budget)
        if cert.count > c and cert.lower_bound <= c:
            raise BudgetExceeded(f"property (3) cover count at level {n}", cert.lower_bound, cert.count)
        ok3 = cert.count <= c
        out.append(PropertyResult("3", ok3, n, {"count": cert.count, "minimal": cert.minimal}))
        # (4)
        bad = conjugation_set(nxt, x1) - D[n]
        out.append(PropertyResult("4", not bad, n, {"element": _first(bad)} if bad else {}))
        # (5)
        fails = []
        for n1 in range(N + 1):
            for n2 in range(N + 1):
                if n < n1 + n2:
                    bad = commutator_set(chain[n1], chain[n2]) - D[n]
                    if bad:
                        fails.append({"n1": n1, "n2": n2, "element": _first(bad)})
        out.append(PropertyResult("5", not fails, n, {"failures": fails[:8]} if fails else {}))
        # (6)
        x0 = chain[0].indices
        p17 = g.power_map(17)[x0]
        pre = g.subset(x0[chain[n].members[p17]])
        bad = pre - nxt
        out.append(PropertyResult("6", not bad, n, {"element": _first(bad)} if bad else {}))

    # (7)
    x0 = chain[0].indices
    sq = g.power_map(2)[x0]
    order = np.argsort(sq, kind="stable")
    fails = []
    DN = D[N]
    sq_sorted = sq[order]
    starts = np.flatnonzero(np.r_[True, sq_sorted[1:] != sq_sorted[:-1]])
    ends = np.r_[starts[1:], sq_sorted.size]
    for s, e in zip(starts, ends):
        if e - s < 2:
            continue
        members = x0[order[s:e]]
        quot = g.mult[np.ix_(g.inv[members], members)]  # y^-1 x
        bad = ~DN.members[quot]
        if bad.any():
            i, j = np.argwhere(bad)[0]
            fails.append({"x": int(members[j]), "y": int(members[i])})
            break
    out.append(PropertyResult("7", not fails, None, fails[0] if fails else {}))
    return FiltrationReport(out)


def build_filtration(chain: Sequence[ElementSet], ambient: ElementSet, r_s, c: int) -> Filtration:
    return Filtration(tuple(chain), ambient, r_s, c)
