"""Exact branch-and-bound over Python int bitsets.

Two searches back the discretisation numbers:

* :func:`max_independent_set` for packing numbers, run as a maximum clique
  search on the complement graph with greedy-colouring bounds.
* :func:`min_set_cover` for covering numbers, branching on the element with
  the fewest covering candidates and pruning with a disjoint-neighbourhood
  lower bound.

Both count search nodes against a budget. When the budget runs out they
return the best solution found plus a proven bound instead of a guess.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Sequence

DEFAULT_NODE_BUDGET = 10_000_000


def default_budget() -> int:
    raw = os.environ.get("APPROXLAB_NODE_BUDGET")
    if raw:
        try:
            value = int(raw)
        except ValueError as exc:
            raise ValueError(f"APPROXLAB_NODE_BUDGET must be an integer, got {raw!r}") from exc
        if value <= 0:
            raise ValueError("APPROXLAB_NODE_BUDGET must be positive")
        return value
    return DEFAULT_NODE_BUDGET


class _OutOfBudget(Exception):
    pass


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def popcount(mask: int) -> int:
    return bin(mask).count("1")


@dataclass
class SearchOutcome:
    """Best solution found (as positions) with a certified ``[lower, upper]`` interval."""

    solution: list[int]
    lower: int
    upper: int
    exact: bool
    nodes: int


# -- maximum independent set -------------------------------------------------------


def _colour_classes(P: int, adj: Sequence[int]) -> list[tuple[int, int]]:
    """Greedy sequential colouring of the vertices in P (adjacency = compatibility).

    Returns ``(vertex, colour)`` pairs in nondecreasing colour order. Each colour
    class is a set of pairwise non-adjacent vertices, so a clique meets each
    class at most once.
    """
    order: list[tuple[int, int]] = []
    U = P
    colour = 0
    while U:
        colour += 1
        Q = U
        while Q:
            low = Q & -Q
            v = low.bit_length() - 1
            Q &= ~adj[v]
            Q ^= low
            U ^= low
            order.append((v, colour))
    return order


def max_independent_set(conflict: Sequence[int], budget: int | None = None) -> SearchOutcome:
    """Maximum set of vertices with no conflict edge between any two of them.

    ``conflict[i]`` is the bitset of vertices conflicting with ``i`` (the bit
    for ``i`` itself is ignored). Ties between optimal solutions resolve to the
    first one found in ascending vertex order.
    """
    n = len(conflict)
    budget = default_budget() if budget is None else budget
    if n == 0:
        return SearchOutcome([], 0, 0, True, 0)
    full = (1 << n) - 1
    compat = [(~conflict[i] & full) & ~(1 << i) for i in range(n)]

    # greedy seed: ascending index scan
    seed: list[int] = []
    taken = 0
    for v in range(n):
        if not (conflict[v] & taken & ~(1 << v)):
            seed.append(v)
            taken |= 1 << v
    best = list(seed)

    root_colours = _colour_classes(full, compat)
    upper_root = root_colours[-1][1] if root_colours else 0
    nodes = 0

    def expand(R: list[int], P: int) -> None:
        nonlocal nodes, best
        nodes += 1
        if nodes > budget:
            raise _OutOfBudget
        order = _colour_classes(P, compat)
        for v, colour in reversed(order):
            if len(R) + colour <= len(best):
                return
            R.append(v)
            newP = P & compat[v]
            if newP:
                expand(R, newP)
            elif len(R) > len(best):
                best = list(R)
            R.pop()
            P &= ~(1 << v)

    exact = True
    if len(best) < upper_root:
        try:
            expand([], full)
        except _OutOfBudget:
            exact = False
    best.sort()
    upper = len(best) if exact else upper_root
    return SearchOutcome(best, len(best), upper, exact, nodes)


# -- minimum set cover -------------------------------------------------------------


def greedy_cover(universe: int, candidates: Sequence[int]) -> list[int] | None:
    """Repeatedly take the candidate covering the most uncovered elements (lowest index on ties)."""
    uncovered = universe
    chosen: list[int] = []
    while uncovered:
        best_j, best_gain = -1, 0
        for j, c in enumerate(candidates):
            gain = popcount(c & uncovered)
            if gain > best_gain:
                best_j, best_gain = j, gain
        if best_j < 0:
            return None
        chosen.append(best_j)
        uncovered &= ~candidates[best_j]
    return chosen


def _dual_lower_bound(uncovered: int, reach: Sequence[int], counts: Sequence[int]) -> int:
    """Elements whose candidate neighbourhoods are pairwise disjoint each need their own set."""
    elems = sorted(_bits(uncovered), key=lambda e: (counts[e], e))
    blocked = 0
    bound = 0
    for e in elems:
        if not (blocked >> e) & 1:
            bound += 1
            blocked |= reach[e]
    return bound


def min_set_cover(universe: int, candidates: Sequence[int], budget: int | None = None) -> SearchOutcome | None:
    """Fewest candidates whose union contains ``universe``.

    Returns ``None`` when the candidates do not cover the universe at all.
    ``solution`` holds candidate positions in ascending order.
    """
    budget = default_budget() if budget is None else budget
    if universe == 0:
        return SearchOutcome([], 0, 0, True, 0)
    # restrict to the universe, drop useless and duplicate candidates (keep lowest index)
    seen: dict[int, int] = {}
    for j, c in enumerate(candidates):
        c &= universe
        if c and c not in seen:
            seen[c] = j
    union = 0
    for c in seen:
        union |= c
    if union != universe:
        return None
    cand = list(seen.keys())
    label = list(seen.values())
    if len(cand) <= 1500:
        # remove candidates strictly contained in another
        keep = []
        by_size = sorted(range(len(cand)), key=lambda j: (-popcount(cand[j]), label[j]))
        for j in by_size:
            cj = cand[j]
            if not any(cj & ~cand[k] == 0 for k in keep):
                keep.append(j)
        cand = [cand[j] for j in keep]
        label = [label[j] for j in keep]
    m = len(cand)
    max_elem = universe.bit_length()
    covering: list[list[int]] = [[] for _ in range(max_elem)]
    for j, c in enumerate(cand):
        for e in _bits(c):
            covering[e].append(j)
    counts = [len(cs) for cs in covering]
    reach = [0] * max_elem
    for e in _bits(universe):
        r = 0
        for j in covering[e]:
            r |= cand[j]
        reach[e] = r

    seed = greedy_cover(universe, cand)
    best = list(seed)
    nodes = 0
    max_size = max(popcount(c) for c in cand)

    def lower(uncovered: int) -> int:
        size_bound = -(-popcount(uncovered) // max_size)
        return max(size_bound, _dual_lower_bound(uncovered, reach, counts))

    def search(uncovered: int, chosen: list[int]) -> None:
        nonlocal nodes, best
        nodes += 1
        if nodes > budget:
            raise _OutOfBudget
        if not uncovered:
            if len(chosen) < len(best):
                best = list(chosen)
            return
        if len(chosen) + lower(uncovered) >= len(best):
            return
        # branch on the uncovered element with the fewest options
        pivot = min(_bits(uncovered), key=lambda e: (counts[e], e))
        options = sorted(covering[pivot], key=lambda j: (-popcount(cand[j] & uncovered), label[j]))
        for j in options:
            chosen.append(j)
            search(uncovered & ~cand[j], chosen)
            chosen.pop()
            if len(chosen) + 1 >= len(best):
                return

    root_lower = lower(universe)
    exact = True
    if root_lower < len(best):
        try:
            search(universe, [])
        except _OutOfBudget:
            exact = False
    else:
        root_lower = len(best)
    solution = sorted(label[j] for j in best)
    lo = len(best) if exact else root_lower
    return SearchOutcome(solution, lo, len(best), exact, nodes)
