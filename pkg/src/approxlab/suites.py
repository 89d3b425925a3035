"""Seeded random lemma suites.

Every instance is drawn from its own generator seeded by ``(seed, suite, index)``,
so results do not depend on how a run is split across workers. A suite result
counts, per claim, how many instances met the hypothesis and how many of those
violated the conclusion. Hypothesis failures are tallied but never counted as
evidence either way.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable

import numpy as np
import orjson

from .approx import disjoint_translate_family, minimal_k
from .discretisation import covering_number, packing_number
from .group import ElementSet, FiniteMetricGroup, power
from .lemmas import (
    discretisation_counting_check,
    geometric_sum,
    infinitesimal_chain_check,
    local_packing_check,
    product_thickening_chain,
    select_scales,
)
from .reports import Report, encode
from .zoo import GroupSpec, make_group

SUITES = ("1.1", "1.2", "1.3", "1.4", "1.5", "1.6", "1.7", "1.8", "1.9")
SUITE_TITLES = {
    "1.1": "subadditivity and monotonicity of discretisation numbers",
    "1.2": "local constancy in the radius",
    "1.3": "infinitesimal chain inclusions",
    "1.4": "packing/covering sandwich",
    "1.5": "local packing and covering bounds",
    "1.6": "discretisation counting sandwich",
    "1.7": "product thickening inclusions",
    "1.8": "disjoint translate family",
    "1.9": "doubling scale selection",
}


# -- the random corpus ------------------------------------------------------------------


def _cyc(n, scale="auto"):
    return GroupSpec("cyclic_lee", {"n": n}, scale)


def _word(base, gens, scale="auto", **params):
    return GroupSpec("word_metric", {"base": {"group": base, "params": params}, "generators": gens}, scale)


def _corpus_spec(rng: np.random.Generator) -> GroupSpec:
    pick = int(rng.integers(9))
    if pick == 0:
        return _cyc(int(rng.integers(5, 41)))
    if pick == 1:
        return _cyc(int(rng.integers(12, 65)), None)
    if pick == 2:
        return GroupSpec("dihedral", {"n": int(rng.integers(3, 13))}, "auto")
    if pick == 3:
        return GroupSpec("symmetric_hamming", {"m": int(rng.integers(3, 5))}, None)
    if pick == 4:
        return _word("quaternion", ["i", "-i", "j", "-j"])
    if pick == 5:
        return _word("symmetric", [[1, 0, 2], [0, 2, 1], [2, 1, 0]], m=3)
    if pick == 6:
        return _word("symmetric", [[1, 0, 2], [1, 2, 0], [2, 0, 1]], m=3)
    if pick == 7:
        return _word("heisenberg", [[1, 0, 0], [2, 0, 0], [0, 1, 0], [0, 2, 0]], p=3)
    a, b = int(rng.integers(2, 9)), int(rng.integers(2, 9))
    combine = "sum" if rng.random() < 0.5 else "max"
    return GroupSpec("product", {"factors": [_cyc(a, None), _cyc(b, None)], "combine": combine}, "auto")


@lru_cache(maxsize=256)
def _group_from_key(key: bytes) -> FiniteMetricGroup:
    return make_group(GroupSpec.from_json(orjson.loads(key)))


def corpus_group(spec: GroupSpec) -> FiniteMetricGroup:
    return _group_from_key(orjson.dumps(spec.to_json(), option=orjson.OPT_SORT_KEYS))


def random_subset(g: FiniteMetricGroup, rng: np.random.Generator, size: int, *, symmetric: bool = False) -> ElementSet:
    size = max(1, min(size, g.order))
    picks = rng.choice(g.order, size=size, replace=False)
    s = g.subset(picks)
    if symmetric:
        s = s | s.inverse() | g.one()
    return s


def random_radius(g: FiniteMetricGroup, rng: np.random.Generator, *, positive: bool = True) -> Fraction:
    """A realised distance value, or occasionally a point halfway between two of them."""
    vals = np.unique(g.dist_num[0])
    if positive:
        vals = vals[vals > 0]
    j = int(rng.integers(vals.size))
    num = Fraction(int(vals[j]))
    if rng.random() < 0.25 and j + 1 < vals.size:
        num = (num + int(vals[j + 1])) / 2
    return num / g.denom


# -- per-instance records ---------------------------------------------------------------


@dataclass
class InstanceResult:
    index: int
    instance: dict
    reports: list[Report]

    def to_json(self) -> dict:
        return {"index": self.index, "instance": encode(self.instance), "reports": [r.to_json() for r in self.reports]}


def _instance_info(spec: GroupSpec, **sets_and_params) -> dict:
    out = {"group": spec.to_json()}
    for key, val in sets_and_params.items():
        out[key] = val.tolist() if isinstance(val, ElementSet) else val
    return out


def _check(claim: str, ok: bool, witness: dict | None = None, **numbers) -> Report:
    return Report(claim, gate_checked=False, conclusion_passed=ok, witnesses=[] if ok else [witness or {}], numbers=numbers)


def _pk(X, r, budget):
    return packing_number(X, r, budget=budget).count


def _cv(X, Y, r, budget):
    return covering_number(X, Y, r, budget=budget).count


def _le(a, b) -> bool:
    return a <= b  # inf compares correctly against ints


def _suite_11(rng, budget):
    spec = _corpus_spec(rng)
    g = corpus_group(spec)
    A = random_subset(g, rng, int(rng.integers(1, 10)))
    B = random_subset(g, rng, int(rng.integers(1, 10)))
    U = A | B
    Y = U | random_subset(g, rng, int(rng.integers(1, 8)))
    Y2 = Y | random_subset(g, rng, int(rng.integers(1, 8)))
    r = random_radius(g, rng, positive=rng.random() < 0.9)
    r2 = r + random_radius(g, rng)
    pa, pb, pu = _pk(A, r, budget), _pk(B, r, budget), _pk(U, r, budget)
    ca, cb, cu = _cv(A, Y, r, budget), _cv(B, Y, r, budget), _cv(U, Y, r, budget)
    cu_big = _cv(U, Y2, r, budget)
    pu2, cu2 = _pk(U, r2, budget), _cv(U, Y, r2, budget)
    reports = [
        _check("packing subadditive", pu <= pa + pb, {"N(A)": pa, "N(B)": pb, "N(AuB)": pu}),
        _check("covering subadditive", _le(cu, ca + cb), {"cov(A)": ca, "cov(B)": cb, "cov(AuB)": cu}),
        _check("packing increasing in X", pa <= pu and pb <= pu, {"N(A)": pa, "N(B)": pb, "N(AuB)": pu}),
        _check("covering increasing in X", _le(ca, cu) and _le(cb, cu), {"cov(A)": ca, "cov(B)": cb, "cov(AuB)": cu}),
        _check("packing decreasing in r", pu2 <= pu, {"N_r": pu, "N_r'": pu2}),
        _check("covering decreasing in r", _le(cu2, cu), {"cov_r": cu, "cov_r'": cu2}),
        _check("covering decreasing in Y", _le(cu_big, cu), {"cov(U/Y)": cu, "cov(U/Y')": cu_big}),
        _check(
            "zero iff empty",
            (_pk(g.empty(), r, budget) == 0 == _cv(g.empty(), Y, r, budget)) and pu > 0 and cu > 0,
        ),
    ]
    info = _instance_info(spec, A=A, B=B, Y=Y, Y2=Y2, r=r, r2=r2)
    return info, reports


def _suite_12(rng, budget):
    spec = _corpus_spec(rng)
    g = corpus_group(spec)
    X = random_subset(g, rng, int(rng.integers(2, 16)))
    Y = X | random_subset(g, rng, int(rng.integers(1, 6)))
    vals = np.unique(g.dist_num[0])
    j = int(rng.integers(vals.size - 1))
    lo, hi = Fraction(int(vals[j]), g.denom), Fraction(int(vals[j + 1]), g.denom)
    eps = (hi - lo) * Fraction(int(rng.integers(1, 100)), 100)
    p0, p1 = _pk(X, lo, budget), _pk(X, lo + eps, budget)
    c0, c1 = _cv(X, Y, lo, budget), _cv(X, Y, lo + eps, budget)
    reports = [
        _check("packing locally constant", p0 == p1, {"r": lo, "r+eps": lo + eps, "N_r": p0, "N_r+eps": p1}),
        _check("covering locally constant", c0 == c1, {"r": lo, "r+eps": lo + eps, "cov_r": c0, "cov_r+eps": c1}),
    ]
    return _instance_info(spec, X=X, Y=Y, r=lo, eps=eps), reports


def _random_ladder(g: FiniteMetricGroup, rng, length: int) -> list[Fraction]:
    diam = Fraction(int(g.dist_num[0].max()), g.denom)
    r = diam * Fraction(int(rng.integers(50, 201)), 100)
    out = [r]
    for _ in range(length - 1):
        r = r / 2 * Fraction(int(rng.integers(60, 101)), 100)
        out.append(r)
    return out


def _suite_13(rng, budget):
    spec = _corpus_spec(rng)
    g = corpus_group(spec)
    X = random_subset(g, rng, int(rng.integers(1, 12)))
    ladder = _random_ladder(g, rng, int(rng.integers(4, 8)))
    rep = infinitesimal_chain_check(ladder, X)
    return _instance_info(spec, X=X, ladder=ladder), [rep]


def _suite_14(rng, budget):
    spec = _corpus_spec(rng)
    g = corpus_group(spec)
    X = random_subset(g, rng, int(rng.integers(1, 16)))
    Y = X | random_subset(g, rng, int(rng.integers(1, 10)))
    r = random_radius(g, rng)
    a, b, c = _pk(X, 2 * r, budget), _cv(X, Y, r, budget), _pk(X, r, budget)
    rep = _check("packing/covering sandwich", a <= b <= c, {"N_2r": a, "cov_r": b, "N_r": c}, N_2r=a, cov_r=b, N_r=c)
    return _instance_info(spec, X=X, Y=Y, r=r), [rep]


def _tuned_k(ratio: Fraction, rng) -> Fraction:
    """Mostly at or just above the observed ratio, sometimes below it."""
    u = rng.random()
    if u < 0.15:
        return Fraction(max(0, math.ceil(ratio) - 1))
    if u < 0.25:
        return Fraction(int(rng.integers(1, 4)))
    return Fraction(math.ceil(ratio) + int(rng.integers(0, 2)))


def _gate_ratio(X: ElementSet, fine, coarse, budget) -> Fraction:
    a = _pk(X * X.inverse() * X, fine, budget)
    b = _pk(X, coarse, budget)
    return Fraction(a, b) if b else Fraction(a)


def _suite_15(rng, budget):
    spec = _corpus_spec(rng)
    g = corpus_group(spec)
    X = random_subset(g, rng, int(rng.integers(2, 13)), symmetric=rng.random() < 0.5)
    r = random_radius(g, rng) / int(rng.integers(1, 5))
    m = int(rng.integers(2, 4))
    k = _tuned_k(_gate_ratio(X, r, (2 * m + 1) * r, budget), rng)
    seed = int(rng.integers(2**31))
    rep = local_packing_check(X, r, m, k, seed=seed, budget=budget)
    return _instance_info(spec, X=X, r=r, m=m, k=k, subset_seed=seed), [rep]


def _suite_16(rng, budget):
    spec = _corpus_spec(rng)
    g = corpus_group(spec)
    X = random_subset(g, rng, int(rng.integers(2, 13)), symmetric=rng.random() < 0.5)
    r = random_radius(g, rng) / int(rng.integers(1, 7))
    k = _tuned_k(_gate_ratio(X, r, 9 * r, budget), rng)
    seed = int(rng.integers(2**31))
    rep = discretisation_counting_check(X, r, k, seed=seed, budget=budget)
    return _instance_info(spec, X=X, r=r, k=k, subset_seed=seed), [rep]


def _suite_17(rng, budget):
    spec = _corpus_spec(rng)
    g = corpus_group(spec)
    X = random_subset(g, rng, int(rng.integers(1, 7)), symmetric=True)
    delta = random_radius(g, rng, positive=rng.random() < 0.8)
    r = random_radius(g, rng) * int(rng.integers(1, 4))
    m = int(rng.integers(2, 5))
    rep = product_thickening_chain(X, delta, m, r, budget=budget)
    return _instance_info(spec, X=X, delta=delta, r=r, m=m), [rep]


def _suite_18(rng, budget):
    spec = _corpus_spec(rng)
    g = corpus_group(spec)
    X = random_subset(g, rng, int(rng.integers(1, 7)), symmetric=True)
    r = random_radius(g, rng, positive=rng.random() < 0.85)
    a, b = _pk(power(X, 5), r, budget), _pk(X, r, budget)
    ratio = Fraction(a, b)
    k = int(math.ceil(ratio)) + int(rng.integers(0, 2)) if rng.random() < 0.9 else max(1, math.ceil(ratio) - 1)
    fam = disjoint_translate_family(X, r)
    rep = fam.report(k, budget=budget)
    return _instance_info(spec, X=X, r=r, k=k), [rep]


def scale_instance(rng, budget=None):
    """A symmetric set with m, n, k, C chosen so every gate of the scale selection holds."""
    from .group import lipschitz_constant

    spec = _corpus_spec(rng)
    g = corpus_group(spec)
    X = random_subset(g, rng, int(rng.integers(1, 6)), symmetric=True)
    n = 1 if rng.random() < 0.6 else 2
    lip = max(lipschitz_constant(X, 1).constant, Fraction(1))
    base = 18 * (1 + geometric_sum(lip, 7))
    m = 1
    while 2**m < base ** (2 * n):
        m += 1
    m += int(rng.integers(0, 3))
    delta = Fraction(1, 2**m)
    k = minimal_k(X, delta, budget=budget)
    C = Fraction(_pk(X, delta, budget), _pk(X, 1, budget))
    return spec, X, m, n, k, C


def _suite_19(rng, budget):
    spec, X, m, n, k, C = scale_instance(rng, budget)
    sel = select_scales(X, m, n, k, C, budget=budget)
    return _instance_info(spec, X=X, m=m, n=n, k=k, C=C), [sel.report]


_GENERATORS: dict[str, Callable] = {
    "1.1": _suite_11,
    "1.2": _suite_12,
    "1.3": _suite_13,
    "1.4": _suite_14,
    "1.5": _suite_15,
    "1.6": _suite_16,
    "1.7": _suite_17,
    "1.8": _suite_18,
    "1.9": _suite_19,
}


def instance_rng(seed: int, suite: str, index: int) -> np.random.Generator:
    major, minor = suite.split(".")
    return np.random.default_rng([int(seed), int(major), int(minor), int(index)])


def run_instance(suite: str, seed: int, index: int, budget: int | None = None) -> InstanceResult:
    info, reports = _GENERATORS[suite](instance_rng(seed, suite, index), budget)
    return InstanceResult(index, info, reports)


# -- aggregation ------------------------------------------------------------------------


@dataclass
class SuiteResult:
    suite: str
    seed: int
    count: int
    instances: list[InstanceResult] = field(default_factory=list)

    def tally(self) -> dict[str, dict[str, int]]:
        out: dict[str, dict[str, int]] = {}
        for inst in self.instances:
            for rep in inst.reports:
                t = out.setdefault(rep.claim, {"instances": 0, "gate_passed": 0, "not_met": 0, "violations": 0})
                t["instances"] += 1
                if rep.gate_passed:
                    t["gate_passed"] += 1
                    t["violations"] += int(rep.violated)
                else:
                    t["not_met"] += 1
        return out

    @property
    def violations(self) -> int:
        return sum(t["violations"] for t in self.tally().values())

    @property
    def gate_passed(self) -> int:
        """Instances where every report met its hypothesis."""
        return sum(all(r.gate_passed for r in inst.reports) for inst in self.instances)

    def violating_instances(self) -> list[InstanceResult]:
        return [i for i in self.instances if any(r.violated for r in i.reports)]

    def to_json(self, *, full: bool = True) -> dict:
        out = {
            "suite": self.suite,
            "title": SUITE_TITLES[self.suite],
            "seed": self.seed,
            "count": self.count,
            "gate_passed": self.gate_passed,
            "violations": self.violations,
            "vacuous": self.gate_passed == 0,
            "claims": self.tally(),
        }
        shown = self.instances if full else self.violating_instances()
        out["instances"] = [i.to_json() for i in shown]
        return out


def _run_chunk(args) -> list[InstanceResult]:
    suite, seed, indices, budget = args
    return [run_instance(suite, seed, i, budget) for i in indices]


def run_suite(suite: str, count: int, seed: int, *, budget: int | None = None, workers: int = 1) -> SuiteResult:
    if suite not in _GENERATORS:
        raise KeyError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    if count < 0:
        raise ValueError("count must be nonnegative")
    indices = list(range(count))
    if workers <= 1 or count < 2:
        results = _run_chunk((suite, seed, indices, budget))
    else:
        chunks = [indices[w::workers] for w in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, [(suite, seed, c, budget) for c in chunks]))
        results = sorted((r for p in parts for r in p), key=lambda r: r.index)
    return SuiteResult(suite, seed, count, results)


def run_suites(names, count: int, seed: int, *, budget: int | None = None, workers: int = 1) -> list[SuiteResult]:
    if names == "all":
        names = SUITES
    elif isinstance(names, str):
        names = [names]
    return [run_suite(s, count, seed, budget=budget, workers=workers) for s in names]
