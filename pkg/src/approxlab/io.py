"""JSON persistence for groups, instances and filtration chains.

Group file layout (keys sorted, no whitespace)::

    {"dist": {"den": D, "num": [row-major ints]}, "format": "approxlab-group",
     "identity": 0, "labels": [...], "meta": {...}, "mult": [row-major ints],
     "order": n, "version": 1}

Distances are ``num / den`` with one common denominator. On load the two
large arrays are parsed with numpy's text scanner; anything it does not
recognise falls back to the ordinary JSON parser. Loading also accepts ``dist``
as a row-major list (flat or nested) whose entries are integers, ``"p/q"``
strings or ``{"num", "den"}`` objects, and files whose identity is not index 0
(they are relabelled so that it is). Two-element ``[p, q]`` pairs are not
accepted there, since they cannot be told apart from rows.
"""

from __future__ import annotations

import hashlib
import re
from pathlib import Path

import numpy as np
import orjson

from .group import ElementSet, FiniteMetricGroup, StructuralError, check_valid

GROUP_FORMAT = "approxlab-group"
INSTANCE_FORMAT = "approxlab-instance"
_OPTS = orjson.OPT_SERIALIZE_NUMPY | orjson.OPT_SORT_KEYS


class GroupFileError(ValueError):
    pass


def group_to_json(g: FiniteMetricGroup) -> dict:
    meta = dict(g.meta)
    meta["bi_invariant"] = bool(g.bi_invariant)
    return {
        "format": GROUP_FORMAT,
        "version": 1,
        "order": g.order,
        "identity": 0,
        "labels": g.labels,
        "meta": meta,
        "mult": np.ascontiguousarray(g.mult, dtype=np.int32).ravel(),
        "dist": {"den": g.denom, "num": np.ascontiguousarray(g.dist_num, dtype=np.int64).ravel()},
    }


def dumps_group(g: FiniteMetricGroup) -> bytes:
    return orjson.dumps(group_to_json(g), option=_OPTS)


def save_group(g: FiniteMetricGroup, path) -> Path:
    path = Path(path)
    path.write_bytes(dumps_group(g))
    return path


def group_digest(g: FiniteMetricGroup) -> str:
    return hashlib.sha256(dumps_group(g)).hexdigest()


def _scan_ints(buf: bytes, expected: int) -> np.ndarray | None:
    """Parse a comma-separated integer list; None if it does not yield ``expected`` values."""
    if expected == 0:
        return np.zeros(0, dtype=np.int64) if not buf.strip() else None
    vals = np.fromstring(buf, dtype=np.int64, sep=",")
    return vals if vals.size == expected else None


_MULT = re.compile(rb'"mult":\[')
_DIST = re.compile(rb'"dist":\{"den":(\d+),"num":\[')


def _cut_array(raw: bytes, m: re.Match) -> tuple[bytes, int, int]:
    start = m.end()
    end = raw.index(b"]", start)
    return raw[start:end], start, end


def loads_group(raw: bytes | str, *, validate: bool = True) -> FiniteMetricGroup:
    if isinstance(raw, str):
        raw = raw.encode()
    fast = None
    mm, dm = _MULT.search(raw), _DIST.search(raw)
    if mm and dm:
        mult_b, ms, me = _cut_array(raw, mm)
        num_b, ds, de = _cut_array(raw, dm)
        order = re.search(rb'"order":(\d+)', raw)
        nn = int(order.group(1)) ** 2 if order else -1
        mult = _scan_ints(mult_b, nn)
        num = _scan_ints(num_b, nn)
        if mult is not None and num is not None:
            spans = sorted([(ms, me), (ds, de)])
            rest = raw[: spans[0][0]] + raw[spans[0][1] : spans[1][0]] + raw[spans[1][1] :]
            try:
                doc = orjson.loads(rest)
                fast = (doc, mult, num, int(dm.group(1)))
            except orjson.JSONDecodeError:
                fast = None
    if fast is None:
        try:
            doc = orjson.loads(raw)
        except orjson.JSONDecodeError as exc:
            raise GroupFileError(f"malformed JSON: {exc}") from None
        mult, num, den = _generic_arrays(doc)
    else:
        doc, mult, num, den = fast
    return _build(doc, mult, num, den, validate)


def _generic_arrays(doc: dict):
    from fractions import Fraction
    from functools import reduce
    from math import lcm

    from .group import as_fraction

    for key in ("order", "mult", "dist"):
        if key not in doc:
            raise GroupFileError(f"missing key {key!r}")
    mult = np.asarray(doc["mult"], dtype=np.int64).ravel()
    dist = doc["dist"]
    if isinstance(dist, dict) and "num" in dist:
        return mult, np.asarray(dist["num"], dtype=np.int64).ravel(), int(dist.get("den", 1))
    flat = []

    def walk(x):
        if isinstance(x, list):
            for y in x:
                walk(y)
        else:
            flat.append(x)

    walk(dist)
    fr = [as_fraction(v) for v in flat]
    den = reduce(lcm, (f.denominator for f in fr), 1)
    num = np.array([int(f * den) if isinstance(f, Fraction) else int(f) for f in fr], dtype=np.int64)
    return mult, num, den


def _build(doc: dict, mult: np.ndarray, num: np.ndarray, den: int, validate: bool) -> FiniteMetricGroup:
    if doc.get("format", GROUP_FORMAT) != GROUP_FORMAT:
        raise GroupFileError(f"not a group file (format {doc.get('format')!r})")
    try:
        n = int(doc["order"])
    except (KeyError, TypeError, ValueError):
        raise GroupFileError("missing or invalid 'order'") from None
    if mult.size != n * n or num.size != n * n:
        raise StructuralError(f"table sizes do not match order {n}")
    mult = mult.reshape(n, n)
    num = num.reshape(n, n)
    ident = int(doc.get("identity", 0))
    labels = doc.get("labels")
    if not 0 <= ident < n:
        raise StructuralError("identity index out of range")
    if mult.min() < 0 or mult.max() >= n:
        raise StructuralError("table entries must be element indices in [0, order)")
    if ident != 0:
        perm = np.r_[ident, np.delete(np.arange(n), ident)]
        pos = np.empty(n, dtype=np.int64)
        pos[perm] = np.arange(n)
        mult = pos[mult[np.ix_(perm, perm)]]
        num = num[np.ix_(perm, perm)]
        if labels is not None:
            labels = [labels[i] for i in perm]
    rows, cols = np.nonzero(mult == 0)
    inv = np.zeros(n, dtype=np.int64)
    inv[rows] = cols
    if "inv" in doc and ident == 0:
        inv = np.asarray(doc["inv"], dtype=np.int64)
    g = FiniteMetricGroup(mult, inv, num, den, labels=labels, meta=doc.get("meta") or {})
    if validate:
        check_valid(g)
    return g


def load_group(path, *, validate: bool = True) -> FiniteMetricGroup:
    return loads_group(Path(path).read_bytes(), validate=validate)


# -- instances -------------------------------------------------------------------------


def instance_to_json(spec, g: FiniteMetricGroup, X: ElementSet, group_path: str | None = None) -> dict:
    out = {
        "format": INSTANCE_FORMAT,
        "version": 1,
        "spec": spec.to_json() if hasattr(spec, "to_json") else spec,
        "members": X.tolist(),
        "group_sha256": group_digest(g),
        "order": g.order,
    }
    if group_path is not None:
        out["group_path"] = str(group_path)
    return out


def save_instance(path, spec, g: FiniteMetricGroup, X: ElementSet, group_path: str | None = None) -> Path:
    path = Path(path)
    path.write_bytes(orjson.dumps(instance_to_json(spec, g, X, group_path), option=_OPTS))
    return path


def load_instance(path) -> tuple[FiniteMetricGroup, ElementSet, dict]:
    """Group comes from ``group_path`` when present (hash-checked), else is rebuilt from the spec."""
    from .zoo import GroupSpec, make_group

    path = Path(path)
    doc = orjson.loads(path.read_bytes())
    if doc.get("format") != INSTANCE_FORMAT:
        raise GroupFileError(f"{path} is not an instance file")
    if "group_path" in doc:
        gp = Path(doc["group_path"])
        if not gp.is_absolute():
            gp = path.parent / gp
        g = load_group(gp)
    else:
        g = make_group(GroupSpec.from_json(doc["spec"]["group"]))
    if "group_sha256" in doc and group_digest(g) != doc["group_sha256"]:
        raise GroupFileError("group content hash does not match the instance file")
    return g, g.subset(doc["members"]), doc


def load_any_group(path) -> FiniteMetricGroup:
    """Group from a group file or from an instance file."""
    raw = Path(path).read_bytes()
    if b'"format":"approxlab-instance"' in raw:
        return load_instance(path)[0]
    return loads_group(raw)
