"""Command-line front end.

JSON goes to stdout (compact, sorted keys; ``--pretty`` indents it) and
profiles are CSV. Exit codes: 0 success, 1 a checked claim failed, 2 bad usage
or unreadable input, 3 a solver budget left an answer undecided (for
``profile`` only when ``--require-exact`` is given, since its rows can carry
intervals).
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from fractions import Fraction
from pathlib import Path

import orjson

from . import io as gio
from .discretisation import PROFILE_HEADER, BudgetExceeded, ScaleLadder, scale_profile
from .group import ElementSet, FiniteMetricGroup, StructuralError, as_fraction, validate_group
from .reports import dumps, encode

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit itself; route through main instead
        raise UsageError(f"{self.prog}: {message}")


# -- argument types -----------------------------------------------------------------------


def _rational(text: str) -> Fraction:
    try:
        return as_fraction(text)
    except (ValueError, ZeroDivisionError, TypeError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def _nonneg_rational(text: str) -> Fraction:
    v = _rational(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be nonnegative")
    return v


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def _nonneg_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError("must be nonnegative")
    return v


def _ladder(text: str) -> ScaleLadder:
    try:
        return ScaleLadder.parse(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


# -- inputs ---------------------------------------------------------------------------------


def _read_json(text_or_path: str):
    """Inline JSON or a path to a JSON file."""
    s = text_or_path.strip()
    if s.startswith("{") or s.startswith("["):
        return orjson.loads(s)
    return orjson.loads(Path(text_or_path).read_bytes())


def _load_group(ref: str, *, validate: bool = True) -> tuple[FiniteMetricGroup, ElementSet | None]:
    """A group file, an instance file (its set comes along), or a group spec (inline or file)."""
    from .zoo import GroupSpec, make_group

    s = ref.strip()
    if s.startswith("{"):
        return make_group(GroupSpec.from_json(orjson.loads(s))), None
    raw = Path(ref).read_bytes()
    if b'"format":"approxlab-instance"' in raw:
        g, X, _ = gio.load_instance(ref)
        return g, X
    if b'"format":"approxlab-group"' in raw:
        return gio.loads_group(raw, validate=validate), None
    doc = orjson.loads(raw)
    if isinstance(doc, dict) and "kind" in doc:
        return make_group(GroupSpec.from_json(doc)), None
    return gio.loads_group(raw, validate=validate), None


def _parse_set(g: FiniteMetricGroup, text: str | None, default: ElementSet | None) -> ElementSet:
    """``all``, ``ball:R``, a JSON list of element indices, or an instance file."""
    if text is None:
        if default is None:
            raise UsageError("--set is required unless --group is an instance file")
        return default
    s = text.strip()
    if s == "all":
        return g.full()
    if s.startswith("ball:"):
        return g.ball(_rational(s[5:]))
    if s.startswith("["):
        idx = orjson.loads(s)
        if not all(isinstance(i, int) and 0 <= i < g.order for i in idx):
            raise UsageError("set members must be element indices in [0, order)")
        return g.subset(idx)
    g2, X, _ = gio.load_instance(s)
    if gio.group_digest(g2) != gio.group_digest(g):
        raise UsageError("the instance file belongs to a different group")
    return g.subset(X.indices)


# -- commands ---------------------------------------------------------------------------------


def cmd_validate(args, out) -> int:
    try:
        g, _ = _load_group(args.group, validate=False)
    except (StructuralError, gio.GroupFileError) as exc:
        out.json(
            {
                "claim": "finite left-invariant metric group",
                "valid": False,
                "order": None,
                "bi_invariant": None,
                "violations": [{"kind": "structure", "message": str(exc), "witness": []}],
                "notes": [],
            }
        )
        return EXIT_VIOLATION
    rep = validate_group(g)
    out.json(rep.to_json())
    return EXIT_OK if rep.valid else EXIT_VIOLATION


def cmd_profile(args, out) -> int:
    g, inst = _load_group(args.group)
    X = _parse_set(g, args.set, inst)
    Y = _parse_set(g, args.cover_set, X) if args.cover_set else X
    rows = scale_profile(X, Y, args.ladder, budget=args.budget)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PROFILE_HEADER)
    for row in rows:
        w.writerow(row.csv_fields())
    out.text(buf.getvalue())
    inexact = any(not (r.packing.exact and r.covering.exact) for r in rows)
    return EXIT_BUDGET if inexact and args.require_exact else EXIT_OK


def cmd_detect(args, out) -> int:
    from .approx import is_metric_approx_subgroup

    g, inst = _load_group(args.group)
    X = _parse_set(g, args.set, inst)
    res = is_metric_approx_subgroup(X, args.k, args.r, centers=args.centers, budget=args.budget)
    payload = res.to_json()
    payload["claim"] = "metric approximate subgroup"
    payload["set"] = X.tolist()
    out.json(payload)
    return EXIT_OK if res.holds else EXIT_VIOLATION


def cmd_scales(args, out) -> int:
    from .lemmas import select_scales

    g, inst = _load_group(args.group)
    X = _parse_set(g, args.set, inst)
    sel = select_scales(X, args.m, args.n, args.k, args.C, budget=args.budget)
    out.json(sel.to_json())
    return EXIT_VIOLATION if sel.report.violated else EXIT_OK


def cmd_lemmas(args, out) -> int:
    from .suites import run_suites

    results = run_suites(args.suite, args.count, args.seed, budget=args.budget, workers=args.threads)
    payload = {
        "seed": args.seed,
        "count": args.count,
        "suites": [r.to_json(full=not args.summary) for r in results],
        "violations": sum(r.violations for r in results),
    }
    out.json(payload)
    return EXIT_VIOLATION if payload["violations"] else EXIT_OK


def cmd_filtration(args, out) -> int:
    from .filtration import Filtration, FiltrationError, filtration_check

    path = Path(args.chain_file)
    doc = orjson.loads(path.read_bytes())
    gref = doc.get("group")
    if isinstance(gref, dict):
        g, _ = _load_group(orjson.dumps(gref).decode())
    elif isinstance(gref, str):
        gp = Path(gref)
        g, _ = _load_group(str(gp if gp.is_absolute() else path.parent / gp))
    else:
        raise UsageError("chain file needs a 'group' (spec object or path)")
    try:
        chain = [g.subset(level) for level in doc["chain"]]
        ambient = g.subset(doc["ambient"]) if "ambient" in doc else chain[0]
        f = Filtration(tuple(chain), ambient, as_fraction(doc.get("r_s", 0)), int(doc.get("c", 1)))
    except (KeyError, TypeError, FiltrationError) as exc:
        raise UsageError(f"bad chain file: {exc}") from None
    rep = filtration_check(f, budget=args.budget)
    payload = rep.to_json()
    payload.update({"N": f.N, "r_s": encode(f.r_s), "c": f.c})
    out.json(payload)
    return EXIT_OK if rep.all_passed else EXIT_VIOLATION


def cmd_lie(args, out) -> int:
    from .lie import CHARTS, LieChart, chart_from_spec, verify_ladder

    if args.chart in CHARTS:
        chart = LieChart(CHARTS[args.chart](), name=args.chart, safety=args.safety).estimate_constants(seed=args.seed)
    else:
        spec = _read_json(args.chart)
        spec.setdefault("safety", args.safety)
        spec.setdefault("seed", args.seed)
        chart = chart_from_spec(spec)
    res = verify_ladder(chart, args.nmax, args.samples, args.seed)
    out.json(res)
    return EXIT_OK if res["passed"] else EXIT_VIOLATION


def cmd_gen(args, out) -> int:
    from .zoo import InstanceSpec, SpecError, make_instance

    try:
        doc = _read_json(args.spec)
        specs = doc if isinstance(doc, list) else [doc]
        specs = [InstanceSpec.from_json(s) for s in specs]
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"bad instance spec: {exc}") from None
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for i, spec in enumerate(specs):
        if args.seed is not None:
            spec.seed = args.seed + i
        try:
            g, X = make_instance(spec)
        except SpecError as exc:
            raise UsageError(str(exc)) from None
        stem = f"{args.prefix}{i:03d}"
        gpath = gio.save_group(g, outdir / f"{stem}.group.json")
        ipath = gio.save_instance(outdir / f"{stem}.instance.json", spec, g, X, group_path=gpath.name)
        written.append({"instance": str(ipath), "group": str(gpath), "order": g.order, "size": len(X), "seed": spec.seed})
    out.json({"written": written})
    return EXIT_OK


# -- parser ---------------------------------------------------------------------------------


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    """Global flags are accepted before or after the subcommand; the copy on
    each subcommand has suppressed defaults so it never overwrites the first."""

    def d(value):
        return argparse.SUPPRESS if suppress else value

    parser.add_argument("--pretty", action="store_true", default=d(False), help="indent JSON output")
    parser.add_argument(
        "--require-exact", action="store_true", default=d(False), help="exit 3 when a solver budget leaves an interval"
    )
    parser.add_argument("--threads", type=_positive_int, default=d(1), help="worker processes for suites")
    parser.add_argument(
        "--budget", type=_positive_int, default=d(None), help="search node budget (default: APPROXLAB_NODE_BUDGET or 10^7)"
    )


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="approxlab", description="Exact discretisation and approximate-subgroup toolkit.")
    _global_flags(p, suppress=False)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_text):
        s = sub.add_parser(name, help=help_text)
        _global_flags(s, suppress=True)
        return s

    s = add("validate", "validate a group file")
    s.add_argument("group")
    s.set_defaults(func=cmd_validate)

    s = add("profile", "packing/covering profile over a scale ladder (CSV)")
    s.add_argument("--group", required=True)
    s.add_argument("--set")
    s.add_argument("--cover-set", help="centre set Y for the covering numbers (default: the set itself)")
    s.add_argument("--ladder", required=True, type=_ladder, help="comma-separated radii, e.g. 1,1/2,1/4")
    s.set_defaults(func=cmd_profile)

    s = add("detect", "decide the (k, r)-metric approximate subgroup property")
    s.add_argument("--group", required=True)
    s.add_argument("--set")
    s.add_argument("--k", required=True, type=_positive_int)
    s.add_argument("--r", default=Fraction(0), type=_nonneg_rational)
    s.add_argument("--centers", choices=("group", "relevant"), default="group")
    s.set_defaults(func=cmd_detect)

    s = add("scales", "select doubling scales")
    s.add_argument("--group", required=True)
    s.add_argument("--set")
    s.add_argument("--m", required=True, type=_positive_int)
    s.add_argument("--n", required=True, type=_positive_int)
    s.add_argument("--k", required=True, type=_positive_int)
    s.add_argument("--C", required=True, type=_nonneg_rational)
    s.set_defaults(func=cmd_scales)

    s = add("lemmas", "run seeded lemma suites")
    s.add_argument("--suite", required=True, help="all or one of 1.1 ... 1.9")
    s.add_argument("--seed", required=True, type=_nonneg_int)
    s.add_argument("--count", type=_nonneg_int, default=100)
    s.add_argument("--summary", action="store_true", help="list only violating instances")
    s.set_defaults(func=cmd_lemmas)

    s = add("filtration", "check the seven chain properties")
    s.add_argument("--chain-file", required=True)
    s.set_defaults(func=cmd_filtration)

    s = add("lie", "build and verify a Lie neighbourhood ladder")
    s.add_argument("--chart", required=True, help="so3, sl2, diag2 or a chart spec JSON file")
    s.add_argument("--nmax", type=_nonneg_int, default=6)
    s.add_argument("--samples", type=_positive_int, default=10_000)
    s.add_argument("--seed", type=_nonneg_int, default=0)
    s.add_argument("--safety", type=float, default=1.25)
    s.set_defaults(func=cmd_lie)

    s = add("gen", "generate instance and group files")
    s.add_argument("--spec", required=True, help="instance spec JSON (object or list), inline or a file")
    s.add_argument("--seed", type=_nonneg_int, default=None, help="overrides the spec seeds (seed + position)")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--prefix", default="instance")
    s.set_defaults(func=cmd_gen)
    return p


class _Out:
    def __init__(self, pretty: bool, stream):
        self.pretty = pretty
        self.stream = stream

    def json(self, payload) -> None:
        self.stream.write(dumps(payload, self.pretty) + "\n")

    def text(self, s: str) -> None:
        self.stream.write(s)


def main(argv: list[str] | None = None, *, stdout=None, stderr=None) -> int:
    from .suites import SUITES

    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        if args.command == "lemmas" and args.suite != "all" and args.suite not in SUITES:
            raise UsageError(f"unknown suite {args.suite!r}; choose all or one of {', '.join(SUITES)}")
        if args.command == "lie" and args.safety < 1:
            raise UsageError("--safety must be at least 1")
        if args.budget is None and os.environ.get("APPROXLAB_NODE_BUDGET"):
            args.budget = _positive_int(os.environ["APPROXLAB_NODE_BUDGET"])
        return args.func(args, _Out(args.pretty, stdout))
    except (UsageError, argparse.ArgumentTypeError) as exc:
        stderr.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    except BudgetExceeded as exc:
        stderr.write(f"budget exceeded: {exc}\n")
        stdout.write(dumps({"error": "budget_exceeded", "what": exc.what, "lower": encode(exc.lower), "upper": encode(exc.upper)}) + "\n")
        return EXIT_BUDGET
    except (FileNotFoundError, IsADirectoryError, orjson.JSONDecodeError, gio.GroupFileError, StructuralError, ValueError) as exc:
        stderr.write(f"input error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
