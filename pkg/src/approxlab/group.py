"""Finite groups with exact left-invariant metrics and their subset algebra.

Elements are the integers ``0..order-1`` with ``0`` the identity. Distances
are stored as an integer matrix over one common denominator, so every
comparison against a rational radius is exact integer arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, reduce
from math import gcd, lcm
from typing import Iterable, Iterator, Sequence

import numpy as np

MAX_ORDER = 4096


class StructuralError(ValueError):
    """Tables have inconsistent shapes or out-of-range entries."""


class MixedGroupsError(ValueError):
    pass


def as_fraction(value) -> Fraction:
    """Coerce ints, strings like ``"3/4"``, fractions and floats to a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, dict):
        return Fraction(int(value["num"]), int(value["den"]))
    if isinstance(value, (tuple, list)) and len(value) == 2:
        return Fraction(int(value[0]), int(value[1]))
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, (float, np.floating)):
        return Fraction(float(value))
    return Fraction(str(value).strip())


class FiniteMetricGroup:
    """A multiplication table together with an exact metric.

    ``dist(a, b) == dist_num[a, b] / denom``. The metric is not validated here;
    call :func:`validate_group` (the constructors in :mod:`approxlab.zoo` and
    :mod:`approxlab.io` always do).
    """

    def __init__(
        self,
        mult,
        inv,
        dist_num,
        denom: int = 1,
        *,
        labels: Sequence | None = None,
        meta: dict | None = None,
    ):
        mult = np.asarray(mult)
        inv = np.asarray(inv)
        dist_num = np.asarray(dist_num)
        if mult.ndim != 2 or mult.shape[0] != mult.shape[1]:
            raise StructuralError(f"mult must be square, got shape {mult.shape}")
        n = mult.shape[0]
        if n < 1:
            raise StructuralError("group must have at least one element")
        if n > MAX_ORDER:
            raise StructuralError(f"order {n} exceeds the supported limit {MAX_ORDER}")
        if inv.shape != (n,):
            raise StructuralError(f"inv must have shape ({n},), got {inv.shape}")
        if dist_num.shape != (n, n):
            raise StructuralError(f"dist must have shape ({n}, {n}), got {dist_num.shape}")
        if not np.issubdtype(mult.dtype, np.integer) or not np.issubdtype(inv.dtype, np.integer):
            raise StructuralError("mult and inv must be integer tables")
        if not np.issubdtype(dist_num.dtype, np.integer):
            raise StructuralError("dist numerators must be integers")
        if mult.min() < 0 or mult.max() >= n or inv.min() < 0 or inv.max() >= n:
            raise StructuralError("table entries must be element indices in [0, order)")
        denom = int(denom)
        if denom <= 0:
            raise StructuralError("distance denominator must be positive")

        self.order = n
        self.identity = 0
        self.mult = mult.astype(np.int32)
        self.inv = inv.astype(np.int32)
        self.dist_num = dist_num.astype(np.int64)
        self.denom = denom
        for arr in (self.mult, self.inv, self.dist_num):
            arr.flags.writeable = False
        self.labels = list(labels) if labels is not None else None
        self.meta = dict(meta or {})

    @classmethod
    def from_fractions(cls, mult, inv, dist, **kw) -> "FiniteMetricGroup":
        """Build from a matrix of rationals (anything :func:`as_fraction` accepts)."""
        rows = [[as_fraction(v) for v in row] for row in dist]
        den = reduce(lcm, (v.denominator for row in rows for v in row), 1)
        num = np.array([[v.numerator * (den // v.denominator) for v in row] for row in rows], dtype=np.int64)
        return cls(mult, inv, num, den, **kw)

    def __repr__(self) -> str:
        name = self.meta.get("name", "group")
        return f"FiniteMetricGroup({name}, order={self.order})"

    def __len__(self) -> int:
        return self.order

    # -- metric ---------------------------------------------------------------

    def dist(self, a: int, b: int) -> Fraction:
        return Fraction(int(self.dist_num[a, b]), self.denom)

    @property
    def norm_num(self) -> np.ndarray:
        """Numerators of d(1, g) for every g."""
        return self.dist_num[self.identity]

    def threshold(self, r) -> int:
        """Largest numerator n with n/denom <= r; ``d <= r`` iff ``dist_num <= threshold(r)``."""
        r = as_fraction(r)
        if r < 0:
            return -1
        return (r.numerator * self.denom) // r.denominator

    @cached_property
    def diameter(self) -> Fraction:
        return Fraction(int(self.dist_num.max()), self.denom)

    @cached_property
    def distance_values(self) -> list[Fraction]:
        """Sorted distinct realised distances."""
        return [Fraction(int(v), self.denom) for v in np.unique(self.dist_num)]

    @cached_property
    def bi_invariant(self) -> bool:
        """Right translations are isometries too (assumes left invariance)."""
        conj = self.conjugation_table()
        f = self.norm_num
        return bool(np.all(f[conj] == f[None, :]))

    def conjugation_table(self) -> np.ndarray:
        """``table[g, a] = g^-1 a g``."""
        left = self.mult[self.inv]  # left[g, a] = g^-1 a
        return self.mult[left, np.arange(self.order)[:, None]]

    # -- elements -------------------------------------------------------------

    def op(self, a: int, b: int) -> int:
        return int(self.mult[a, b])

    def power(self, a: int, k: int) -> int:
        if k < 0:
            a, k = int(self.inv[a]), -k
        result, base = self.identity, int(a)
        while k:
            if k & 1:
                result = int(self.mult[result, base])
            base = int(self.mult[base, base])
            k >>= 1
        return result

    def power_map(self, k: int) -> np.ndarray:
        """Vectorised ``g -> g^k`` over all elements."""
        idx = np.arange(self.order)
        if k < 0:
            idx, k = self.inv.astype(np.int64), -k
        result = np.zeros(self.order, dtype=np.int64)
        base = idx.copy()
        while k:
            if k & 1:
                result = self.mult[result, base]
            base = self.mult[base, base]
            k >>= 1
        return result

    def label(self, a: int):
        return self.labels[a] if self.labels is not None else int(a)

    def index_of(self, label) -> int:
        if self.labels is None:
            return int(label)
        try:
            return self.labels.index(label)
        except ValueError:
            pass
        # labels survive JSON as lists; compare structurally
        for i, lab in enumerate(self.labels):
            if _normalise_label(lab) == _normalise_label(label):
                return i
        raise KeyError(f"no element labelled {label!r}")

    # -- canonical subsets ----------------------------------------------------

    def ball(self, r) -> "ElementSet":
        """Closed ball ``D_r(1)``."""
        return ElementSet(self, self.norm_num <= self.threshold(r))

    def full(self) -> "ElementSet":
        return ElementSet(self, np.ones(self.order, dtype=bool))

    def empty(self) -> "ElementSet":
        return ElementSet(self, np.zeros(self.order, dtype=bool))

    def one(self) -> "ElementSet":
        return self.subset([self.identity])

    def subset(self, members: Iterable[int]) -> "ElementSet":
        arr = np.zeros(self.order, dtype=bool)
        idx = np.fromiter((int(m) for m in members), dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= self.order):
            raise IndexError("member index out of range")
        arr[idx] = True
        return ElementSet(self, arr)

    def closure(self, generators: Iterable[int]) -> "ElementSet":
        """Subgroup generated by ``generators``."""
        gens = np.unique(np.fromiter((int(g) for g in generators), dtype=np.int64))
        seen = np.zeros(self.order, dtype=bool)
        seen[self.identity] = True
        frontier = np.array([self.identity])
        while frontier.size:
            nxt = np.unique(self.mult[np.ix_(frontier, gens)]) if gens.size else np.array([], dtype=np.int64)
            nxt = nxt[~seen[nxt]]
            seen[nxt] = True
            frontier = nxt
        return ElementSet(self, seen)


def _normalise_label(label):
    if isinstance(label, (list, tuple)):
        return tuple(_normalise_label(x) for x in label)
    return label


class ElementSet:
    """An immutable subset of a :class:`FiniteMetricGroup`.

    Supports ``|``, ``&``, ``-``, subset comparisons, and the group set algebra:
    ``A * B`` is the pairwise product set, ``A ** n`` the n-fold product (with
    ``A ** 0 == {1}`` and negative powers of the inverse set).
    """

    def __init__(self, group: FiniteMetricGroup, members: np.ndarray):
        members = np.asarray(members, dtype=bool)
        if members.shape != (group.order,):
            raise ValueError("membership vector has the wrong length")
        members = members.copy()
        members.flags.writeable = False
        self.group = group
        self._members = members

    # -- views ----------------------------------------------------------------

    @property
    def members(self) -> np.ndarray:
        return self._members

    @cached_property
    def indices(self) -> np.ndarray:
        return np.flatnonzero(self._members)

    @cached_property
    def mask(self) -> int:
        """The set as a Python int bitset (bit i set iff element i is a member)."""
        packed = np.packbits(self._members, bitorder="little")
        return int.from_bytes(packed.tobytes(), "little")

    @classmethod
    def from_mask(cls, group: FiniteMetricGroup, mask: int) -> "ElementSet":
        nbytes = (group.order + 7) // 8
        raw = np.frombuffer(int(mask).to_bytes(nbytes, "little"), dtype=np.uint8)
        return cls(group, np.unpackbits(raw, bitorder="little")[: group.order].astype(bool))

    def __len__(self) -> int:
        return int(self._members.sum())

    def __iter__(self) -> Iterator[int]:
        return iter(int(i) for i in self.indices)

    def __contains__(self, item) -> bool:
        return bool(self._members[int(item)])

    def __bool__(self) -> bool:
        return bool(self._members.any())

    def __hash__(self) -> int:
        return hash((id(self.group), self.mask))

    def __repr__(self) -> str:
        items = list(self)
        shown = ", ".join(map(str, items[:12])) + (", ..." if len(items) > 12 else "")
        return f"ElementSet({{{shown}}}, size={len(items)})"

    def tolist(self) -> list[int]:
        return [int(i) for i in self.indices]

    # -- boolean algebra -------------------------------------------------------

    def _check(self, other: "ElementSet") -> None:
        if not isinstance(other, ElementSet):
            raise TypeError(f"expected ElementSet, got {type(other).__name__}")
        if other.group is not self.group:
            raise MixedGroupsError("sets belong to different groups")

    def __eq__(self, other) -> bool:
        if not isinstance(other, ElementSet):
            return NotImplemented
        return other.group is self.group and bool(np.array_equal(self._members, other._members))

    def __or__(self, other: "ElementSet") -> "ElementSet":
        self._check(other)
        return ElementSet(self.group, self._members | other._members)

    def __and__(self, other: "ElementSet") -> "ElementSet":
        self._check(other)
        return ElementSet(self.group, self._members & other._members)

    def __sub__(self, other: "ElementSet") -> "ElementSet":
        self._check(other)
        return ElementSet(self.group, self._members & ~other._members)

    def __le__(self, other: "ElementSet") -> bool:
        self._check(other)
        return not bool(np.any(self._members & ~other._members))

    def __ge__(self, other: "ElementSet") -> bool:
        return other <= self

    def issubset(self, other: "ElementSet") -> bool:
        return self <= other

    # -- group algebra ----------------------------------------------------------

    def __mul__(self, other: "ElementSet") -> "ElementSet":
        self._check(other)
        return product(self, other)

    def __pow__(self, n: int) -> "ElementSet":
        return power(self, n)

    def inverse(self) -> "ElementSet":
        out = np.zeros(self.group.order, dtype=bool)
        out[self.group.inv[self.indices]] = True
        return ElementSet(self.group, out)

    def thicken(self, r) -> "ElementSet":
        """Closed r-thickening ``D_r(X) = {y : d(x, y) <= r for some x in X}``."""
        return thicken(self, r)

    def translate(self, g: int) -> "ElementSet":
        """Left translate ``g X``."""
        out = np.zeros(self.group.order, dtype=bool)
        out[self.group.mult[int(g), self.indices]] = True
        return ElementSet(self.group, out)

    @property
    def contains_identity(self) -> bool:
        return bool(self._members[self.group.identity])

    @property
    def is_symmetric(self) -> bool:
        """``1 in X`` and ``X == X^-1``."""
        return self.contains_identity and self == self.inverse()

    @property
    def is_subgroup(self) -> bool:
        return self.contains_identity and bool(self) and (self * self) == self and self.inverse() == self


def product(a: ElementSet, b: ElementSet) -> ElementSet:
    g = a.group
    out = np.zeros(g.order, dtype=bool)
    ia, ib = a.indices, b.indices
    if ia.size and ib.size:
        # chunk rows to keep the temporary below ~16M entries
        step = max(1, (1 << 24) // ib.size)
        for start in range(0, ia.size, step):
            out[g.mult[np.ix_(ia[start : start + step], ib)].ravel()] = True
    return ElementSet(g, out)


def power(a: ElementSet, n: int) -> ElementSet:
    n = int(n)
    if n < 0:
        return power(a.inverse(), -n)
    result = a.group.one()
    for _ in range(n):
        nxt = product(result, a)
        if nxt == result and a.contains_identity:
            break
        result = nxt
    return result


def thicken(a: ElementSet, r) -> ElementSet:
    """Thickening computed from the distance matrix directly."""
    g = a.group
    t = g.threshold(r)
    if not a:
        return g.empty()
    out = np.zeros(g.order, dtype=bool)
    idx = a.indices
    step = max(1, (1 << 22) // g.order)
    for start in range(0, idx.size, step):
        out |= np.any(g.dist_num[idx[start : start + step]] <= t, axis=0)
    return ElementSet(g, out)


def commutator_set(a: ElementSet, b: ElementSet) -> ElementSet:
    """``[A, B] = {x^-1 y^-1 x y}``."""
    a._check(b)
    g = a.group
    ia, ib = a.indices, b.indices
    out = np.zeros(g.order, dtype=bool)
    if ia.size and ib.size:
        left = g.mult[np.ix_(g.inv[ia], g.inv[ib])]
        right = g.mult[np.ix_(ia, ib)]
        out[g.mult[left, right].ravel()] = True
    return ElementSet(g, out)


def conjugation_set(y: ElementSet, x: ElementSet) -> ElementSet:
    """``Y^X = {x^-1 y x}``."""
    y._check(x)
    g = y.group
    iy, ix = y.indices, x.indices
    out = np.zeros(g.order, dtype=bool)
    if iy.size and ix.size:
        left = g.mult[np.ix_(g.inv[ix], iy)]  # x^-1 y, rows indexed by x
        out[g.mult[left, ix[:, None]].ravel()] = True
    return ElementSet(g, out)


# -- validation -------------------------------------------------------------------


@dataclass
class Violation:
    kind: str
    message: str
    witness: tuple = ()

    def to_json(self) -> dict:
        return {"kind": self.kind, "message": self.message, "witness": [int(w) for w in self.witness]}


@dataclass
class ValidationReport:
    order: int
    violations: list[Violation] = field(default_factory=list)
    bi_invariant: bool | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}

    def to_json(self) -> dict:
        return {
            "claim": "finite left-invariant metric group",
            "valid": self.valid,
            "order": self.order,
            "bi_invariant": self.bi_invariant,
            "violations": [v.to_json() for v in self.violations],
            "notes": list(self.notes),
        }


def _first(mask: np.ndarray) -> tuple:
    return tuple(int(i) for i in np.argwhere(mask)[0])


def _generating_set(mult: np.ndarray) -> list[int]:
    """Greedy generators whose left-nested products reach every element."""
    n = mult.shape[0]
    gens: list[int] = []
    reached = np.zeros(n, dtype=bool)
    reached[0] = True  # the empty product
    while not reached.all():
        gens.append(int(np.flatnonzero(~reached)[0]))
        reached[:] = False
        reached[0] = True
        garr = np.array(gens)
        reached[garr] = True
        frontier = garr
        while frontier.size:
            nxt = np.unique(mult[np.ix_(frontier, garr)])
            nxt = nxt[~reached[nxt]]
            reached[nxt] = True
            frontier = nxt
    return gens


_BLOCK = 256


def _row_blocks(n: int):
    for lo in range(0, n, _BLOCK):
        yield lo, min(n, lo + _BLOCK)


def validate_group(g: FiniteMetricGroup, *, triangle_full_scan_limit: int = 160) -> ValidationReport:
    """Check the group axioms, the metric axioms and left invariance.

    Associativity uses Light's test against a generating set, which is exact.
    Left invariance is checked first: once ``d(x, y) = f(x^-1 y)`` with
    ``f = d(1, .)`` is known, the metric axioms reduce to properties of f and
    the triangle inequality to subadditivity of f. Without left invariance the
    axioms are checked on the full matrix (the triangle scan only for small
    orders). Every violation carries a witness tuple of element indices.
    """
    n = g.order
    rep = ValidationReport(order=n)
    mult, inv, D = g.mult, g.inv, g.dist_num
    e = g.identity
    ar = np.arange(n)

    bad = mult[e] != ar
    if bad.any():
        rep.violations.append(Violation("identity", "identity is not a left unit", (e, int(np.argmax(bad)))))
    bad = mult[:, e] != ar
    if bad.any():
        rep.violations.append(Violation("identity", "identity is not a right unit", (int(np.argmax(bad)), e)))
    bad = (mult[ar, inv] != e) | (mult[inv, ar] != e)
    if bad.any():
        a = int(np.argmax(bad))
        rep.violations.append(Violation("inverse", "inv does not give a two-sided inverse", (a, int(inv[a]))))

    group_ok = not rep.violations
    if group_ok:
        for gen in _generating_set(mult):
            right = mult[:, gen]  # b g
            for lo, hi in _row_blocks(n):
                bad = right[mult[lo:hi]] != mult[lo:hi][:, right]  # (a b) g vs a (b g)
                if bad.any():
                    a, b = _first(bad)
                    rep.violations.append(Violation("associativity", "(ab)c != a(bc)", (lo + a, b, gen)))
                    group_ok = False
                    break
            if not group_ok:
                break

    f = D[e]
    left_ok = False
    if group_ok:
        left_ok = True
        for lo, hi in _row_blocks(n):
            bad = D[lo:hi] != f[mult[inv[lo:hi]]]
            if bad.any():
                x, y = _first(bad)
                x += lo
                rep.violations.append(
                    Violation("left_invariance", "d(g x, g y) != d(x, y) with g = x^-1", (int(inv[x]), x, y))
                )
                left_ok = False
                break

    if left_ok:
        _metric_from_norm(rep, g, f)
    else:
        _metric_full(rep, D, triangle_full_scan_limit)
    return rep


def _metric_from_norm(rep: ValidationReport, g: FiniteMetricGroup, f: np.ndarray) -> None:
    """Metric axioms for a left-invariant D, read off ``f = d(1, .)``."""
    e, n, mult, inv = g.identity, g.order, g.mult, g.inv
    bad = np.flatnonzero(f < 0)
    if bad.size:
        rep.violations.append(Violation("nonnegative", "distances must be nonnegative", (e, int(bad[0]))))
    if f[e] != 0:
        rep.violations.append(Violation("identity_of_indiscernibles", "d(a, a) must be 0", (e, e)))
    zero = f == 0
    zero[e] = False
    if zero.any():
        rep.violations.append(
            Violation("identity_of_indiscernibles", "d(a, b) = 0 for a != b", (e, int(np.argmax(zero))))
        )
    bad = f[inv] != f
    if bad.any():
        a = int(np.argmax(bad))
        rep.violations.append(Violation("symmetry", "d(a, b) != d(b, a)", (e, a)))
    # with x = 1, y = a, z = ab: d(1, ab) <= d(1, a) + d(a, ab) = f(a) + f(b)
    bi = True
    for lo, hi in _row_blocks(n):
        fm = f[mult[lo:hi]]
        bad = fm > f[lo:hi, None] + f[None, :]
        if bad.any():
            a, b = _first(bad)
            a += lo
            rep.violations.append(Violation("triangle", "d(x, z) > d(x, y) + d(y, z)", (e, a, int(mult[a, b]))))
            break
        # right invariance for all pairs iff f(ab) = f(ba)
        if bi and np.any(fm != f[mult[:, lo:hi].T]):
            bi = False
    if rep.valid:
        rep.bi_invariant = bi
        g.__dict__.setdefault("bi_invariant", bi)


def _metric_full(rep: ValidationReport, D: np.ndarray, triangle_full_scan_limit: int) -> None:
    n = D.shape[0]
    bad = D < 0
    if bad.any():
        rep.violations.append(Violation("nonnegative", "distances must be nonnegative", _first(bad)))
    diag = np.diag(D)
    if np.any(diag != 0):
        a = int(np.argmax(diag != 0))
        rep.violations.append(Violation("identity_of_indiscernibles", "d(a, a) must be 0", (a, a)))
    off = D == 0
    np.fill_diagonal(off, False)
    if off.any():
        rep.violations.append(Violation("identity_of_indiscernibles", "d(a, b) = 0 for a != b", _first(off)))
    bad = D != D.T
    if bad.any():
        rep.violations.append(Violation("symmetry", "d(a, b) != d(b, a)", _first(bad)))
    if n <= triangle_full_scan_limit:
        for y in range(n):
            bad = D[:, y][:, None] + D[y][None, :] < D
            if bad.any():
                x, z = _first(bad)
                rep.violations.append(Violation("triangle", "d(x, z) > d(x, y) + d(y, z)", (x, y, z)))
                break
    else:
        rep.notes.append("triangle inequality not checked: metric is not left-invariant and order is large")


def check_valid(g: FiniteMetricGroup) -> FiniteMetricGroup:
    """Raise ``ValueError`` describing the first violation, else return ``g``."""
    rep = validate_group(g)
    if not rep.valid:
        v = rep.violations[0]
        raise ValueError(f"invalid metric group: {v.kind}: {v.message} (witness {list(v.witness)})")
    return g


# -- Lipschitz data ------------------------------------------------------------------


@dataclass(frozen=True)
class LipschitzResult:
    constant: Fraction
    witness: tuple[int, int, int] | None  # (x, a, b) attaining the maximum

    def __iter__(self):
        return iter((self.constant, self.witness))


def lipschitz_constant(X: ElementSet, r) -> LipschitzResult:
    """Smallest l such that right translation by each x in X is l-Lipschitz on ``D_r(1)``.

    Returns 0 when the ball has fewer than two points.
    """
    if not X:
        raise ValueError("empty set has no Lipschitz data")
    g = X.group
    ball = g.ball(r).indices
    if ball.size < 2:
        return LipschitzResult(Fraction(0), None)
    if g.bi_invariant:
        # right translations are isometries
        return LipschitzResult(Fraction(1), (int(X.indices[0]), int(ball[0]), int(ball[1])))
    base = g.dist_num[np.ix_(ball, ball)]
    off = ~np.eye(ball.size, dtype=bool)
    safe_base = np.where(off, base, 1)
    best_n, best_d = -1, 1
    witness = None
    for x in X.indices:
        moved = g.mult[ball, x]
        num = g.dist_num[np.ix_(moved, moved)]
        ratio = np.where(off, num / safe_base, -1.0)
        top = ratio.max()
        if top * (1 + 1e-9) < best_n / best_d:
            continue
        # exact maximum among the float near-maxima by integer cross-multiplication
        ii, jj = np.nonzero(ratio >= top * (1 - 1e-9))
        cn = [int(v) for v in num[ii, jj]]
        cd = [int(v) for v in base[ii, jj]]
        k = 0
        for t in range(1, len(cn)):
            if cn[t] * cd[k] > cn[k] * cd[t]:
                k = t
        if cn[k] * best_d > best_n * cd[k]:
            best_n, best_d = cn[k], cd[k]
            witness = (int(x), int(ball[ii[k]]), int(ball[jj[k]]))
    return LipschitzResult(Fraction(best_n, best_d), witness)
