"""Packing and covering numbers of subsets of a finite metric group.

``packing_number(X, r)`` is the largest size of an r-separated subset of X
(pairwise distances strictly greater than r). ``covering_number(X, Y, r)`` is
the least number of closed r-balls centred in Y whose union contains X.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .group import ElementSet, as_fraction
from .solvers import max_independent_set, min_set_cover


class BudgetExceeded(RuntimeError):
    """An exact value was requested but the search stopped at its node budget."""

    def __init__(self, what: str, lower, upper):
        super().__init__(f"{what}: exact value unavailable, search budget exceeded (bounds [{lower}, {upper}])")
        self.what = what
        self.lower = lower
        self.upper = upper


@dataclass
class Discretisation:
    """Outcome of a packing or covering computation.

    ``lower``/``upper`` always bracket the true value. When ``exact`` is true
    they coincide and ``count`` returns it; otherwise reading ``count`` raises
    :class:`BudgetExceeded`. A covering problem with no feasible cover has
    ``exists = False`` and ``count == math.inf``.
    """

    kind: str
    radius: Fraction
    lower: int | float
    upper: int | float
    witness: ElementSet | None
    exact: bool
    exists: bool = True
    nodes: int = 0

    @property
    def count(self) -> int | float:
        if not self.exists:
            return math.inf
        if not self.exact:
            raise BudgetExceeded(f"{self.kind} number at radius {self.radius}", self.lower, self.upper)
        return self.lower

    def __int__(self) -> int:
        return int(self.count)

    def __iter__(self):
        return iter((self.count, self.witness))

    def to_json(self) -> dict:
        from .reports import encode

        return {
            "kind": self.kind,
            "radius": encode(self.radius),
            "exact": self.exact,
            "exists": self.exists,
            "lower": encode(self.lower),
            "upper": encode(self.upper),
            "witness": self.witness.tolist() if self.witness is not None else None,
        }


def conflict_bitsets(X: ElementSet, r) -> tuple[np.ndarray, list[int]]:
    """Members of X and, per member, the bitset of members within distance r."""
    g = X.group
    idx = X.indices
    t = g.threshold(r)
    close = g.dist_num[np.ix_(idx, idx)] <= t
    rows = []
    for row in close:
        packed = np.packbits(row, bitorder="little")
        rows.append(int.from_bytes(packed.tobytes(), "little"))
    return idx, rows


def packing_number(X: ElementSet, r, *, budget: int | None = None) -> Discretisation:
    """Exact ``N_r(X)`` with a maximum r-separated witness."""
    r = as_fraction(r)
    g = X.group
    if not X:
        return Discretisation("packing", r, 0, 0, g.empty(), True)
    idx, conflict = conflict_bitsets(X, r)
    out = max_independent_set(conflict, budget)
    witness = g.subset(idx[out.solution])
    return Discretisation("packing", r, out.lower, out.upper, witness, out.exact, nodes=out.nodes)


def covering_number(X: ElementSet, Y: ElementSet, r, *, budget: int | None = None) -> Discretisation:
    """Exact ``N^cov_r(X/Y)`` with a minimum set of centres in Y."""
    X._check(Y)
    r = as_fraction(r)
    g = X.group
    if not X:
        return Discretisation("covering", r, 0, 0, g.empty(), True)
    xs, ys = X.indices, Y.indices
    t = g.threshold(r)
    universe = (1 << xs.size) - 1
    if ys.size == 0:
        return Discretisation("covering", r, math.inf, math.inf, None, True, exists=False)
    close = g.dist_num[np.ix_(ys, xs)] <= t
    cands = [int.from_bytes(np.packbits(row, bitorder="little").tobytes(), "little") for row in close]
    out = min_set_cover(universe, cands, budget)
    if out is None:
        return Discretisation("covering", r, math.inf, math.inf, None, True, exists=False)
    witness = g.subset(ys[out.solution])
    return Discretisation("covering", r, out.lower, out.upper, witness, out.exact, nodes=out.nodes)


def greedy_separated(X: ElementSet, r, order: Sequence[int] | None = None) -> ElementSet:
    """Inclusion-maximal r-separated subset of X, scanning in ``order`` (default ascending)."""
    g = X.group
    t = g.threshold(r)
    scan = X.indices if order is None else [int(i) for i in order if i in X]
    kept: list[int] = []
    for x in scan:
        if not kept or bool(np.all(g.dist_num[x, kept] > t)):
            kept.append(int(x))
    return g.subset(kept)


@dataclass
class ScaleLadder:
    """Radii ``r_0 > r_1 > ... `` with ``2 r_i <= r_{i-1}``."""

    radii: tuple[Fraction, ...]

    def __post_init__(self):
        radii = tuple(as_fraction(r) for r in self.radii)
        if not radii:
            raise ValueError("a scale ladder needs at least one radius")
        if any(r <= 0 for r in radii):
            raise ValueError("ladder radii must be positive")
        for i in range(1, len(radii)):
            if 2 * radii[i] > radii[i - 1]:
                raise ValueError(f"doubling condition fails at index {i}: 2*{radii[i]} > {radii[i - 1]}")
        self.radii = radii

    @classmethod
    def parse(cls, text: str) -> "ScaleLadder":
        return cls(tuple(Fraction(p.strip()) for p in text.split(",") if p.strip()))

    @classmethod
    def dyadic(cls, top, length: int) -> "ScaleLadder":
        top = as_fraction(top)
        return cls(tuple(top / 2**i for i in range(length)))

    def __len__(self) -> int:
        return len(self.radii)

    def __iter__(self):
        return iter(self.radii)

    def __getitem__(self, i):
        return self.radii[i]


@dataclass
class ProfileRow:
    radius: Fraction
    packing: Discretisation
    covering: Discretisation
    mb_approx: float | None = field(default=None)

    def csv_fields(self) -> list[str]:
        def show(d: Discretisation) -> str:
            if not d.exists:
                return "inf"
            if d.exact:
                return str(d.lower)
            return f"[{d.lower};{d.upper}]"

        mb = "" if self.mb_approx is None else repr(self.mb_approx)
        return [str(self.radius.numerator), str(self.radius.denominator), show(self.packing), show(self.covering), mb]


PROFILE_HEADER = ["radius_num", "radius_den", "packing", "covering", "mb_approx"]


def mb_approximation(packing: int, r: Fraction) -> float | None:
    """``ln N_r(X) / ln(1/r)``; undefined when ``r >= 1`` or ``N_r(X) == 0``."""
    if r >= 1 or r <= 0 or packing == 0:
        return None
    return math.log(packing) / math.log(1 / r)


def scale_profile(X: ElementSet, Y: ElementSet, ladder: ScaleLadder | Sequence, *, budget: int | None = None) -> list[ProfileRow]:
    rows = []
    for r in ladder:
        r = as_fraction(r)
        p = packing_number(X, r, budget=budget)
        c = covering_number(X, Y, r, budget=budget)
        mb = mb_approximation(p.lower, r) if p.exact else None
        rows.append(ProfileRow(r, p, c, mb))
    return rows
