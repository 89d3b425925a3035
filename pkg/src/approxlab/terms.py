"""Set expressions such as ``X^9``, ``X*X^-1*X``, ``D[1/2](X)`` and ``[X, Y]``.

Terms are small immutable trees. They can be built with Python operators
(``var("X") ** 2``) or parsed from text with :func:`parse_term`::

    term   := factor ('*' factor)*
    factor := atom ('^' ['-'] INT)?
    atom   := NAME | '1' | '(' term ')' | 'inv(' term ')'
            | 'D[' RATIONAL '](' term ')' | '[' term ',' term ']'
            | 'conj(' term ',' term ')'

``conj(Y, X)`` denotes ``Y^X = {x^-1 y x}``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .group import ElementSet, MixedGroupsError, as_fraction, commutator_set, conjugation_set, power, product


class SetTerm:
    def __mul__(self, other: "SetTerm") -> "SetTerm":
        return Product(self, other)

    def __pow__(self, n: int) -> "SetTerm":
        return Power(self, int(n))

    def __invert__(self) -> "SetTerm":
        return Inverse(self)

    def variables(self) -> set[str]:
        return set()


@dataclass(frozen=True)
class Var(SetTerm):
    name: str

    def __str__(self) -> str:
        return self.name

    def variables(self) -> set[str]:
        return {self.name}


@dataclass(frozen=True)
class One(SetTerm):
    def __str__(self) -> str:
        return "1"


@dataclass(frozen=True)
class Product(SetTerm):
    left: SetTerm
    right: SetTerm

    def __str__(self) -> str:
        return f"{self.left}*{self.right}"

    def variables(self) -> set[str]:
        return self.left.variables() | self.right.variables()


@dataclass(frozen=True)
class Inverse(SetTerm):
    arg: SetTerm

    def __str__(self) -> str:
        return f"inv({self.arg})"

    def variables(self) -> set[str]:
        return self.arg.variables()


@dataclass(frozen=True)
class Power(SetTerm):
    arg: SetTerm
    n: int

    def __str__(self) -> str:
        inner = str(self.arg)
        if not isinstance(self.arg, (Var, One)):
            inner = f"({inner})"
        return f"{inner}^{self.n}"

    def variables(self) -> set[str]:
        return self.arg.variables()


@dataclass(frozen=True)
class Thicken(SetTerm):
    radius: Fraction
    arg: SetTerm

    def __post_init__(self):
        r = as_fraction(self.radius)
        if r < 0:
            raise ValueError("thickening radius must be nonnegative")
        object.__setattr__(self, "radius", r)

    def __str__(self) -> str:
        return f"D[{self.radius}]({self.arg})"

    def variables(self) -> set[str]:
        return self.arg.variables()


@dataclass(frozen=True)
class Commutator(SetTerm):
    left: SetTerm
    right: SetTerm

    def __str__(self) -> str:
        return f"[{self.left},{self.right}]"

    def variables(self) -> set[str]:
        return self.left.variables() | self.right.variables()


@dataclass(frozen=True)
class Conjugate(SetTerm):
    """``base^by = {x^-1 y x : y in base, x in by}``."""

    base: SetTerm
    by: SetTerm

    def __str__(self) -> str:
        return f"conj({self.base},{self.by})"

    def variables(self) -> set[str]:
        return self.base.variables() | self.by.variables()


def var(name: str) -> Var:
    return Var(name)


def thicken(radius, arg: SetTerm) -> Thicken:
    return Thicken(as_fraction(radius), arg)


class UnboundVariableError(KeyError):
    pass


def eval_set_term(term: SetTerm | str, env: Mapping[str, ElementSet]) -> ElementSet:
    """Evaluate ``term`` exactly with variables bound in ``env``."""
    if isinstance(term, str):
        term = parse_term(term)
    missing = term.variables() - set(env)
    if missing:
        raise UnboundVariableError(f"unbound variable(s): {', '.join(sorted(missing))}")
    groups = {id(s.group): s.group for s in env.values()}
    if len(groups) > 1:
        raise MixedGroupsError("environment mixes sets from different groups")
    if not groups:
        raise ValueError("empty environment: cannot determine the group")
    group = next(iter(groups.values()))
    cache: dict[SetTerm, ElementSet] = {}

    def ev(t: SetTerm) -> ElementSet:
        if t in cache:
            return cache[t]
        if isinstance(t, Var):
            out = env[t.name]
        elif isinstance(t, One):
            out = group.one()
        elif isinstance(t, Product):
            out = product(ev(t.left), ev(t.right))
        elif isinstance(t, Inverse):
            out = ev(t.arg).inverse()
        elif isinstance(t, Power):
            out = power(ev(t.arg), t.n)
        elif isinstance(t, Thicken):
            out = product(ev(t.arg), group.ball(t.radius))
        elif isinstance(t, Commutator):
            out = commutator_set(ev(t.left), ev(t.right))
        elif isinstance(t, Conjugate):
            out = conjugation_set(ev(t.base), ev(t.by))
        else:
            raise TypeError(f"unknown term node {type(t).__name__}")
        cache[t] = out
        return out

    return ev(term)


_TOKEN = re.compile(r"\s*(?:(?P<num>-?\d+(?:/\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[*^()\[\],-]))")


class TermSyntaxError(ValueError):
    pass


def _tokenize(text: str) -> list[tuple[str, str]]:
    pos, out = 0, []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise TermSyntaxError(f"unexpected character at {pos}: {text[pos:]!r}")
        kind = m.lastgroup
        out.append((kind, m.group(kind)))
        pos = m.end()
    return out


def parse_term(text: str) -> SetTerm:
    toks = _tokenize(text)
    i = 0

    def peek(value: str | None = None):
        if i < len(toks) and (value is None or toks[i][1] == value):
            return toks[i]
        return None

    def expect(value: str):
        nonlocal i
        if not peek(value):
            got = toks[i][1] if i < len(toks) else "end of input"
            raise TermSyntaxError(f"expected {value!r}, got {got!r}")
        i += 1

    def term() -> SetTerm:
        node = factor()
        while peek("*"):
            expect("*")
            node = Product(node, factor())
        return node

    def factor() -> SetTerm:
        nonlocal i
        node = atom()
        if peek("^"):
            expect("^")
            sign = 1
            if peek("-"):
                expect("-")
                sign = -1
            if i >= len(toks) or toks[i][0] != "num" or "/" in toks[i][1]:
                raise TermSyntaxError("exponent must be an integer")
            n = int(toks[i][1])
            i += 1
            node = Power(node, sign * n)
        return node

    def atom() -> SetTerm:
        nonlocal i
        if i >= len(toks):
            raise TermSyntaxError("unexpected end of input")
        kind, val = toks[i]
        if val == "(":
            expect("(")
            node = term()
            expect(")")
            return node
        if val == "[":
            expect("[")
            left = term()
            expect(",")
            right = term()
            expect("]")
            return Commutator(left, right)
        if kind == "num" and val == "1":
            i += 1
            return One()
        if kind == "name":
            i += 1
            if val == "inv" and peek("("):
                expect("(")
                node = term()
                expect(")")
                return Inverse(node)
            if val == "conj" and peek("("):
                expect("(")
                base = term()
                expect(",")
                by = term()
                expect(")")
                return Conjugate(base, by)
            if val == "D" and peek("["):
                expect("[")
                if i >= len(toks) or toks[i][0] != "num":
                    raise TermSyntaxError("thickening radius must be a rational")
                radius = Fraction(toks[i][1])
                i += 1
                expect("]")
                expect("(")
                node = term()
                expect(")")
                return Thicken(radius, node)
            return Var(val)
        raise TermSyntaxError(f"unexpected token {val!r}")

    node = term()
    if i != len(toks):
        raise TermSyntaxError(f"trailing input starting at {toks[i][1]!r}")
    return node
