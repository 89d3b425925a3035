"""Brute-force references that share no code with the package solvers.

Everything here works from the raw ``mult`` and ``dist_num`` tables (or from
closed-form formulas) with plain Python sets and exhaustive subset tables.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np


def lee(n: int, a: int, b: int) -> int:
    t = abs(a - b) % n
    return min(t, n - t)


def close(g, a: int, b: int, r: Fraction) -> bool:
    """d(a, b) <= r, decided with a fresh Fraction comparison."""
    return Fraction(int(g.dist_num[a, b]), g.denom) <= r


def subset_tables(n: int, rows: list[int]) -> np.ndarray:
    """``out[mask] = OR of rows[i] over the bits i of mask``, for all 2^n masks."""
    out = np.zeros(1, dtype=np.int64)
    for i in range(n):
        out = np.concatenate([out, out | rows[i]])
    return out


def brute_packing(g, X: list[int], r: Fraction) -> int:
    """Maximum r-separated subset size by scanning all 2^|X| subsets."""
    n = len(X)
    if n == 0:
        return 0
    conflicts = []
    for i in range(n):
        m = 0
        for j in range(n):
            if j != i and close(g, X[i], X[j], r):
                m |= 1 << j
        conflicts.append(m)
    masks = np.arange(1 << n, dtype=np.int64)
    clash = subset_tables(n, conflicts)  # union of neighbourhoods of the chosen points
    ok = (clash & masks) == 0
    return int(np.bitwise_count(masks[ok]).max())


def brute_covering(g, X: list[int], Y: list[int], r: Fraction) -> float:
    """Minimum number of closed r-balls centred in Y covering X; inf if impossible."""
    if not X:
        return 0
    full = (1 << len(X)) - 1
    reach = []
    for y in Y:
        m = 0
        for i, x in enumerate(X):
            if close(g, x, y, r):
                m |= 1 << i
        reach.append(m)
    covered = subset_tables(len(Y), reach)
    masks = np.arange(1 << len(Y), dtype=np.int64)
    hits = masks[covered == full]
    return float("inf") if hits.size == 0 else int(np.bitwise_count(hits).min())


def greedy_oracle(g, X: list[int], r: Fraction) -> list[int]:
    kept: list[int] = []
    for x in sorted(X):
        if all(not close(g, x, k, r) for k in kept):
            kept.append(x)
    return kept


def prod(g, A, B) -> set[int]:
    return {int(g.mult[a, b]) for a in A for b in B}


def inverse(g, A) -> set[int]:
    e = 0
    return {b for a in A for b in range(g.order) if g.mult[a, b] == e}


def thicken(g, A, r: Fraction) -> set[int]:
    return {x for x in range(g.order) if any(close(g, x, a, r) for a in A)}


def ball(g, r: Fraction) -> set[int]:
    return thicken(g, {0}, r)


def power(g, A, k: int) -> set[int]:
    out = {0}
    for _ in range(k):
        out = prod(g, out, A)
    return out


def commutators(g, A, B) -> set[int]:
    """{x^-1 y^-1 x y : x in A, y in B}."""
    inv = {a: next(b for b in range(g.order) if g.mult[a, b] == 0) for a in range(g.order)}
    out = set()
    for x in A:
        for y in B:
            left = g.mult[inv[x], inv[y]]
            out.add(int(g.mult[g.mult[left, x], y]))
    return out


def conjugates(g, Y, X) -> set[int]:
    """{x^-1 y x : x in X, y in Y}."""
    inv = {a: next(b for b in range(g.order) if g.mult[a, b] == 0) for a in range(g.order)}
    return {int(g.mult[g.mult[inv[x], y], x]) for x in X for y in Y}


def group_axioms_ok(mult: np.ndarray) -> bool:
    n = mult.shape[0]
    for a, b, c in itertools.product(range(n), repeat=3):
        if mult[mult[a, b], c] != mult[a, mult[b, c]]:
            return False
    return all(mult[0, a] == a == mult[a, 0] for a in range(n)) and all(
        any(mult[a, b] == 0 for b in range(n)) for a in range(n)
    )


def left_invariant(g) -> bool:
    n = g.order
    return all(
        g.dist_num[g.mult[h, x], g.mult[h, y]] == g.dist_num[x, y] for h in range(n) for x in range(n) for y in range(n)
    )


def bi_invariant(g) -> bool:
    n = g.order
    return left_invariant(g) and all(
        g.dist_num[g.mult[x, h], g.mult[y, h]] == g.dist_num[x, y] for h in range(n) for x in range(n) for y in range(n)
    )


def lipschitz(g, X, r: Fraction) -> Fraction:
    """max over x in X and distinct a, b in D_r(1) of d(a x, b x) / d(a, b)."""
    B = sorted(ball(g, r))
    best = Fraction(0)
    for x in X:
        for a, b in itertools.combinations(B, 2):
            num = Fraction(int(g.dist_num[g.mult[a, x], g.mult[b, x]]), int(g.dist_num[a, b]))
            best = max(best, num)
    return best


def min_translates(g, target, body) -> int:
    """Fewest left translates t*body (t anywhere in G) covering target, by increasing size."""
    target = set(target)
    if not target:
        return 0
    shapes = [frozenset(prod(g, {t}, body)) for t in range(g.order)]
    useful = sorted({s & frozenset(target) for s in shapes if s & target}, key=len, reverse=True)
    for k in range(1, len(target) + 1):
        for combo in itertools.combinations(useful, k):
            if set().union(*combo) >= target:
                return k
    raise AssertionError("no cover")


def filtration_failures(g, chain, r_s: Fraction, c: int, ambient=None, min_cover=None) -> set[str]:
    """Direct evaluation of the seven chain properties with Python sets.

    ``ambient`` defaults to X_0; ``min_cover(target, body)`` defaults to
    :func:`min_translates` and may be swapped for a closed form on big groups.
    """
    min_cover = min_cover or (lambda target, body: min_translates(g, target, body))
    N = len(chain) - 1
    chain = [set(x) for x in chain]
    D = [thicken(g, x, r_s) for x in chain]
    X0 = chain[0]
    amb = X0 if ambient is None else set(ambient)
    X2 = prod(g, amb, amb)
    failed = set()

    def cover(target, body):
        return min_cover(target, thicken(g, body, r_s))

    for name, idx in (("1_X1", 1), ("1_X0", 0)):
        if idx <= N and (cover(X2, chain[idx]) > c or cover(chain[idx], X2) > c):
            failed.add(name)
    X1 = chain[1] if N >= 1 else chain[0]
    for n in range(N):
        if not prod(g, chain[n + 1], chain[n + 1]) <= D[n]:
            failed.add("2")
        if cover(chain[n], chain[n + 1]) > c:
            failed.add("3")
        if not conjugates(g, chain[n + 1], X1) <= D[n]:
            failed.add("4")
        for n1 in range(N + 1):
            for n2 in range(N + 1):
                if n < n1 + n2 and not commutators(g, chain[n1], chain[n2]) <= D[n]:
                    failed.add("5")
        for x in X0:
            if power(g, {x}, 17) <= chain[n] and x not in chain[n + 1]:
                failed.add("6")
    for x in X0:
        for y in X0:
            if g.mult[x, x] == g.mult[y, y]:
                yinv = next(b for b in range(g.order) if g.mult[y, b] == 0)
                if int(g.mult[yinv, x]) not in D[N]:
                    failed.add("7")
    return failed
