"""Constructors for the finite metric groups and subsets used in experiments.

Group kinds:

``cyclic_lee``         Z_n with d(a, b) = min(|a-b|, n-|a-b|)
``dihedral``           D_n with the word metric for {r, r^-1, s} (or given generators)
``symmetric_hamming``  S_m with d(s, t) = #{i : s(i) != t(i)}, scaled by m by default
``word_metric``        any base group with the word metric of a symmetric generating set
``product``            direct product of specs, metric combined by ``sum`` or ``max``

Every distance is finally divided by the rational ``scale`` (``"auto"`` uses
the diameter), so radii like 1/2, 1/4 mean the same thing across groups.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import numpy as np

from .group import MAX_ORDER, ElementSet, FiniteMetricGroup, as_fraction, check_valid, power, product


class SpecError(ValueError):
    pass


# -- abstract groups: (labels, mult) with identity at index 0 -------------------------


def _table(labels: list, op) -> np.ndarray:
    index = {lab: i for i, lab in enumerate(labels)}
    n = len(labels)
    mult = np.empty((n, n), dtype=np.int32)
    for i, a in enumerate(labels):
        for j, b in enumerate(labels):
            mult[i, j] = index[op(a, b)]
    return mult


def _cyclic(n: int):
    labels = list(range(n))
    ar = np.arange(n)
    return labels, ((ar[:, None] + ar[None, :]) % n).astype(np.int32)


def _dihedral(n: int):
    labels = [(k, s) for k in range(n) for s in (0, 1)]

    def op(a, b):
        k, s = a
        m, t = b
        return ((k + (m if s == 0 else -m)) % n, s ^ t)

    return labels, _table(labels, op)


def _symmetric(m: int):
    labels = list(itertools.permutations(range(m)))  # lexicographic, identity first

    def op(p, q):  # (p q)(i) = p(q(i))
        return tuple(p[q[i]] for i in range(m))

    return labels, _table(labels, op)


_Q8 = ["1", "-1", "i", "-i", "j", "-j", "k", "-k"]


def _quaternion():
    unit = {("1", x): x for x in "1ijk"}
    rules = {
        ("i", "i"): "-1", ("j", "j"): "-1", ("k", "k"): "-1",
        ("i", "j"): "k", ("j", "k"): "i", ("k", "i"): "j",
        ("j", "i"): "-k", ("k", "j"): "-i", ("i", "k"): "-j",
    }

    def split(x):
        return (x[0] == "-", x.lstrip("-"))

    def op(a, b):
        na, ua = split(a)
        nb, ub = split(b)
        if ua == "1":
            res = ub
        elif ub == "1":
            res = ua
        else:
            res = rules[(ua, ub)]
        neg, base = split(res)
        neg ^= na ^ nb
        if base == "1":
            return "-1" if neg else "1"
        return ("-" if neg else "") + base

    del unit
    return list(_Q8), _table(_Q8, op)


def _heisenberg(p: int):
    labels = [(a, b, c) for a in range(p) for b in range(p) for c in range(p)]

    def op(x, y):
        return ((x[0] + y[0]) % p, (x[1] + y[1]) % p, (x[2] + y[2] + x[0] * y[1]) % p)

    return labels, _table(labels, op)


def _direct_product(parts: list[tuple[list, np.ndarray]]):
    labels = [tuple(t) for t in itertools.product(*[p[0] for p in parts])]
    sizes = [len(p[0]) for p in parts]
    n = int(np.prod(sizes))
    coords = np.array(list(itertools.product(*[range(s) for s in sizes])), dtype=np.int64).reshape(n, len(sizes))
    strides = np.array([int(np.prod(sizes[i + 1 :])) for i in range(len(sizes))], dtype=np.int64)
    mult = np.zeros((n, n), dtype=np.int64)
    for f, (_, m) in enumerate(parts):
        mult += m[coords[:, f][:, None], coords[:, f][None, :]].astype(np.int64) * strides[f]
    return labels, mult.astype(np.int32), coords


BASE_GROUPS = {
    "cyclic": lambda p: _cyclic(int(p["n"])),
    "dihedral": lambda p: _dihedral(int(p["n"])),
    "symmetric": lambda p: _symmetric(int(p["m"])),
    "quaternion": lambda p: _quaternion(),
    "heisenberg": lambda p: _heisenberg(int(p["p"])),
}


def _inverse_table(mult: np.ndarray) -> np.ndarray:
    rows, cols = np.nonzero(mult == 0)
    inv = np.empty(mult.shape[0], dtype=np.int32)
    inv[rows] = cols
    return inv


def _normalise_label(lab):
    if isinstance(lab, (list, tuple)):
        return tuple(_normalise_label(x) for x in lab)
    return lab


# -- specs -----------------------------------------------------------------------------


@dataclass
class GroupSpec:
    kind: str
    params: dict = field(default_factory=dict)
    scale: Any = None  # rational, "auto", or None for the kind's default

    def to_json(self) -> dict:
        scale = self.scale
        if isinstance(scale, Fraction):
            scale = {"num": scale.numerator, "den": scale.denominator}
        params = dict(self.params)
        if "factors" in params:
            params["factors"] = [f.to_json() if isinstance(f, GroupSpec) else f for f in params["factors"]]
        return {"kind": self.kind, "params": params, "scale": scale}

    @classmethod
    def from_json(cls, data: dict) -> "GroupSpec":
        params = dict(data.get("params", {}))
        if "factors" in params:
            params["factors"] = [cls.from_json(f) if isinstance(f, dict) else f for f in params["factors"]]
        scale = data.get("scale")
        if isinstance(scale, (dict, int)) or (isinstance(scale, str) and scale != "auto"):
            scale = as_fraction(scale)
        return cls(data["kind"], params, scale)


def _raw_metric(spec: GroupSpec):
    """Return (labels, mult, raw distance matrix as Fractions or ints, default scale)."""
    kind, p = spec.kind, spec.params
    if kind == "cyclic_lee":
        n = int(p["n"])
        labels, mult = _cyclic(n)
        ar = np.arange(n)
        diff = np.abs(ar[:, None] - ar[None, :])
        return labels, mult, np.minimum(diff, n - diff).astype(np.int64), Fraction(1)
    if kind == "symmetric_hamming":
        m = int(p["m"])
        labels, mult = _symmetric(m)
        perms = np.array(labels, dtype=np.int64)
        raw = (perms[:, None, :] != perms[None, :, :]).sum(axis=2)
        return labels, mult, raw.astype(np.int64), Fraction(m)
    if kind in ("word_metric", "dihedral"):
        if kind == "dihedral":
            n = int(p["n"])
            base_labels, base_mult = _dihedral(n)
            gens = p.get("generators") or [(1, 0), (n - 1, 0), (0, 1)]
        else:
            base = p["base"]
            bkind = base["group"] if isinstance(base, dict) else base
            bparams = base.get("params", {}) if isinstance(base, dict) else {}
            if bkind not in BASE_GROUPS:
                raise SpecError(f"unknown base group {bkind!r}")
            base_labels, base_mult = BASE_GROUPS[bkind](bparams)
            gens = p["generators"]
        return _word_metric(base_labels, base_mult, gens) + (Fraction(1),)
    if kind == "product":
        factors = [f if isinstance(f, GroupSpec) else GroupSpec.from_json(f) for f in p["factors"]]
        combine = p.get("combine", "sum")
        parts = []
        dists = []
        for f in factors:
            g = make_group(f)
            parts.append((g.labels, np.asarray(g.mult)))
            dists.append([Fraction(int(v), g.denom) for v in np.asarray(g.norm_num)])
        labels, mult, coords = _direct_product(parts)
        den = 1
        for f_d in dists:
            for v in f_d:
                den = den * v.denominator // np.gcd(den, v.denominator)
        norms = [np.array([int(v * den) for v in f_d], dtype=np.int64) for f_d in dists]
        n = len(labels)
        # left-invariant: d(x, y) = sum_f d_f(x_f, y_f) per coordinate
        raw = np.zeros((n, n), dtype=np.int64)
        for f, (flabels, fmult) in enumerate(parts):
            finv = _inverse_table(fmult)
            c = coords[:, f]
            diff = fmult[finv[c][:, None], c[None, :]]
            term = norms[f][diff]
            raw = raw + term if combine == "sum" else np.maximum(raw, term)
        if combine not in ("sum", "max"):
            raise SpecError("product combine must be 'sum' or 'max'")
        return labels, mult, (raw, den), Fraction(1)
    raise SpecError(f"unknown group kind {kind!r}")


def _word_metric(labels: list, mult: np.ndarray, gens: list):
    index = {_normalise_label(lab): i for i, lab in enumerate(labels)}
    try:
        gidx = [index[_normalise_label(gl)] for gl in gens]
    except KeyError as exc:
        raise SpecError(f"generator {exc.args[0]!r} is not an element of the base group") from None
    inv = _inverse_table(mult)
    if set(int(inv[g]) for g in gidx) != set(gidx):
        raise SpecError("generating set must be symmetric (closed under inverses)")
    if 0 in gidx:
        raise SpecError("generating set must not contain the identity")
    n = len(labels)
    length = np.full(n, -1, dtype=np.int64)
    length[0] = 0
    order = [0]
    frontier = [0]
    while frontier:
        nxt = []
        for x in frontier:
            for g in gidx:
                y = int(mult[x, g])
                if length[y] < 0:
                    length[y] = length[x] + 1
                    order.append(y)
                    nxt.append(y)
        frontier = nxt
    if len(order) != n:
        raise SpecError(f"generators reach only {len(order)} of {n} elements")
    # relabel in BFS order
    perm = np.array(order)
    pos = np.empty(n, dtype=np.int64)
    pos[perm] = np.arange(n)
    new_mult = pos[mult[np.ix_(perm, perm)]].astype(np.int32)
    new_labels = [labels[i] for i in perm]
    new_len = length[perm]
    new_inv = _inverse_table(new_mult)
    raw = new_len[new_mult[new_inv[:, None], np.arange(n)[None, :]]]
    return new_labels, new_mult, raw


def make_group(spec: GroupSpec | dict) -> FiniteMetricGroup:
    """Build and validate the group described by ``spec``."""
    if isinstance(spec, dict):
        spec = GroupSpec.from_json(spec)
    try:
        labels, mult, raw, default_scale = _raw_metric(spec)
    except KeyError as exc:
        raise SpecError(f"{spec.kind}: missing parameter {exc.args[0]!r}") from None
    if isinstance(raw, tuple):
        raw, den = raw
    else:
        den = 1
    if len(labels) > MAX_ORDER:
        raise SpecError(f"order {len(labels)} exceeds {MAX_ORDER}")
    scale = spec.scale
    if scale is None:
        scale = default_scale
    elif scale == "auto":
        scale = Fraction(int(raw.max()), den) or Fraction(1)
    scale = as_fraction(scale)
    if scale <= 0:
        raise SpecError("metric scale must be positive")
    # distance = raw / (den * scale)
    num = raw.astype(np.int64) * scale.denominator
    denom = den * scale.numerator
    g_ = np.gcd.reduce(np.append(num.ravel(), denom))
    if g_ > 1:
        num //= g_
        denom //= int(g_)
    inv = _inverse_table(mult)
    meta = {"spec": spec.to_json(), "name": _spec_name(spec)}
    g = FiniteMetricGroup(mult, inv, num, int(denom), labels=[_jsonable(l) for l in labels], meta=meta)
    check_valid(g)
    g.meta["bi_invariant"] = g.bi_invariant
    return g


def _jsonable(label):
    if isinstance(label, tuple):
        return [_jsonable(x) for x in label]
    return label


def _spec_name(spec: GroupSpec) -> str:
    p = spec.params
    if spec.kind == "cyclic_lee":
        return f"Z{p['n']}"
    if spec.kind == "dihedral":
        return f"D{p['n']}"
    if spec.kind == "symmetric_hamming":
        return f"S{p['m']}"
    if spec.kind == "word_metric":
        base = p["base"]
        bkind = base["group"] if isinstance(base, dict) else base
        return f"word({bkind})"
    if spec.kind == "product":
        return "x".join(_spec_name(f if isinstance(f, GroupSpec) else GroupSpec.from_json(f)) for f in p["factors"])
    return spec.kind


def cyclic_lee(n: int, scale=None) -> FiniteMetricGroup:
    return make_group(GroupSpec("cyclic_lee", {"n": n}, scale))


def symmetric_hamming(m: int, scale=None) -> FiniteMetricGroup:
    return make_group(GroupSpec("symmetric_hamming", {"m": m}, scale))


def dihedral(n: int, scale=None) -> FiniteMetricGroup:
    return make_group(GroupSpec("dihedral", {"n": n}, scale))


def word_metric(base: str, generators: list, scale=None, **base_params) -> FiniteMetricGroup:
    return make_group(GroupSpec("word_metric", {"base": {"group": base, "params": base_params}, "generators": generators}, scale))


def direct_product(*factors: GroupSpec, combine: str = "sum", scale=None) -> FiniteMetricGroup:
    return make_group(GroupSpec("product", {"factors": list(factors), "combine": combine}, scale))


# -- instances -------------------------------------------------------------------------


SET_KINDS = ("ball", "subgroup", "coset_union", "planted_progression", "random_symmetric", "explicit")


@dataclass
class InstanceSpec:
    group: GroupSpec
    set_kind: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def to_json(self) -> dict:
        return {"group": self.group.to_json(), "set_kind": self.set_kind, "params": dict(self.params), "seed": int(self.seed)}

    @classmethod
    def from_json(cls, data: dict) -> "InstanceSpec":
        return cls(GroupSpec.from_json(data["group"]), data["set_kind"], dict(data.get("params", {})), int(data.get("seed", 0)))


def _element(g: FiniteMetricGroup, ref) -> int:
    """Element by label, or by index when given as {"index": i}."""
    if isinstance(ref, dict) and "index" in ref:
        return int(ref["index"])
    return g.index_of(ref)


def _symmetrise(s: ElementSet) -> ElementSet:
    return s | s.inverse() | s.group.one()


def build_set(g: FiniteMetricGroup, set_kind: str, params: dict, seed: int = 0) -> ElementSet:
    rng = np.random.default_rng(seed)
    if set_kind == "ball":
        return g.ball(as_fraction(params.get("radius", 1)))
    if set_kind == "explicit":
        return g.subset(_element(g, m) for m in params["members"])
    if set_kind == "subgroup":
        gens = params.get("generators")
        if gens is None:
            k = int(params.get("random_generators", 1))
            gidx = [int(x) for x in rng.integers(0, g.order, size=k)]
        else:
            gidx = [_element(g, x) for x in gens]
        return g.closure(gidx)
    if set_kind in ("coset_union", "planted_progression"):
        hgens = params.get("subgroup_generators")
        if hgens is None:
            hidx = [int(rng.integers(0, g.order))]
        else:
            hidx = [_element(g, x) for x in hgens]
        H = g.closure(hidx)
        shift = params.get("shift")
        gidx = int(rng.integers(0, g.order)) if shift is None else _element(g, shift)
        gH = H.translate(gidx)
        core = H | gH | gH.inverse()
        if set_kind == "coset_union":
            return core
        thick = product(core, g.ball(as_fraction(params.get("radius", 0))))
        return _symmetrise(thick)
    if set_kind == "random_symmetric":
        size = int(params.get("size", max(1, g.order // 4)))
        picks = rng.choice(g.order, size=min(size, g.order), replace=False)
        return _symmetrise(g.subset(picks))
    raise SpecError(f"unknown set kind {set_kind!r}")


def make_instance(spec: InstanceSpec | dict) -> tuple[FiniteMetricGroup, ElementSet]:
    """Deterministic in ``spec`` (including its seed)."""
    if isinstance(spec, dict):
        spec = InstanceSpec.from_json(spec)
    if spec.set_kind not in SET_KINDS:
        raise SpecError(f"unknown set kind {spec.set_kind!r}")
    g = make_group(spec.group)
    X = build_set(g, spec.set_kind, spec.params, spec.seed)
    if spec.set_kind in ("subgroup", "coset_union", "planted_progression", "random_symmetric", "ball"):
        assert X.is_symmetric, f"{spec.set_kind} instance should be symmetric"
    return g, X


__all__ = [
    "GroupSpec",
    "InstanceSpec",
    "SpecError",
    "make_group",
    "make_instance",
    "build_set",
    "cyclic_lee",
    "symmetric_hamming",
    "dihedral",
    "word_metric",
    "direct_product",
    "power",
]
