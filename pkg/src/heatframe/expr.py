"""Exact affine expressions over named parameters.

Domain bounds and face locators in problem statements are affine in the
declared symbols (``L_f + L_p``, ``2L``, ``- b``).  Keeping them as exact
rational combinations lets topology be decided by equality tests rather than
floating-point tolerances.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .errors import ExpressionError, MissingBinding

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d+)?(?:[eE][-+]?\d+)?)|(?P<sym>[A-Za-z][A-Za-z0-9_^]*)|(?P<op>[-+*/()]))"
)
_REL_RE = re.compile(r"(<=|>=|<|>|=)")


def parse_number(text: str) -> Fraction:
    try:
        return Fraction(text.replace(" ", ""))
    except (ValueError, ZeroDivisionError) as exc:
        raise ExpressionError(f"not a numeric literal: {text!r}") from exc


def is_number(text: str) -> bool:
    try:
        parse_number(text)
    except ExpressionError:
        return False
    return True


@dataclass(frozen=True)
class Affine:
    """``const + sum(coef * symbol)`` with rational coefficients."""

    terms: tuple[tuple[str, Fraction], ...] = ()
    const: Fraction = Fraction(0)

    @staticmethod
    def constant(value) -> "Affine":
        return Affine((), Fraction(value))

    @staticmethod
    def symbol(name: str) -> "Affine":
        return Affine(((name, Fraction(1)),), Fraction(0))

    @staticmethod
    def _make(coeffs: Mapping[str, Fraction], const: Fraction) -> "Affine":
        return Affine(tuple(sorted((k, v) for k, v in coeffs.items() if v != 0)), const)

    @property
    def symbols(self) -> frozenset[str]:
        return frozenset(k for k, _ in self.terms)

    def is_constant(self) -> bool:
        return not self.terms

    def __add__(self, other: "Affine") -> "Affine":
        c = dict(self.terms)
        for k, v in other.terms:
            c[k] = c.get(k, Fraction(0)) + v
        return Affine._make(c, self.const + other.const)

    def __neg__(self) -> "Affine":
        return Affine(tuple((k, -v) for k, v in self.terms), -self.const)

    def __sub__(self, other: "Affine") -> "Affine":
        return self + (-other)

    def scale(self, factor: Fraction) -> "Affine":
        return Affine._make({k: v * factor for k, v in self.terms}, self.const * factor)

    def evaluate(self, bindings: Mapping[str, Fraction]) -> Fraction:
        total = self.const
        for k, v in self.terms:
            if k not in bindings:
                raise MissingBinding(f"symbol {k!r} has no numeric value")
            total += v * Fraction(bindings[k])
        return total

    def __str__(self) -> str:
        parts = []
        for k, v in self.terms:
            coef = "" if v == 1 else "-" if v == -1 else f"{v}*"
            parts.append(f"{coef}{k}")
        if self.const != 0 or not parts:
            parts.append(str(self.const))
        return " + ".join(parts).replace("+ -", "- ")


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks: list[tuple[str, str]] = []
        pos = 0
        text = text.strip()
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if not m or m.end() == pos:
                raise ExpressionError(f"cannot parse expression {self.text!r}")
            kind = m.lastgroup
            self.toks.append((kind, m.group(kind)))
            pos = m.end()
            while pos < len(text) and text[pos].isspace():
                pos += 1
        self.i = 0

    def peek(self) -> tuple[str, str] | None:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self) -> tuple[str, str]:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def parse(self) -> Affine:
        if not self.toks:
            raise ExpressionError("empty expression")
        e = self.expr()
        if self.peek() is not None:
            raise ExpressionError(f"trailing input in {self.text!r}")
        return e

    def expr(self) -> Affine:
        e = self.term()
        while (t := self.peek()) is not None and t[1] in "+-" and t[0] == "op":
            self.take()
            rhs = self.term()
            e = e + rhs if t[1] == "+" else e - rhs
        return e

    def term(self) -> Affine:
        e = self.factor()
        while (t := self.peek()) is not None:
            if t == ("op", "*"):
                self.take()
                e = _mul(e, self.factor(), self.text)
            elif t == ("op", "/"):
                self.take()
                d = self.factor()
                if not d.is_constant() or d.const == 0:
                    raise ExpressionError(f"non-affine division in {self.text!r}")
                e = e.scale(1 / d.const)
            elif t[0] in ("num", "sym") or t == ("op", "("):
                e = _mul(e, self.factor(), self.text)  # implicit product, e.g. 2L
            else:
                break
        return e

    def factor(self) -> Affine:
        t = self.peek()
        if t is None:
            raise ExpressionError(f"unexpected end of {self.text!r}")
        kind, val = self.take()
        if kind == "op" and val in "+-":
            f = self.factor()
            return -f if val == "-" else f
        if kind == "num":
            return Affine.constant(parse_number(val))
        if kind == "sym":
            return Affine.symbol(val)
        if val == "(":
            e = self.expr()
            if self.peek() != ("op", ")"):
                raise ExpressionError(f"unbalanced parentheses in {self.text!r}")
            self.take()
            return e
        raise ExpressionError(f"unexpected {val!r} in {self.text!r}")


def _mul(a: Affine, b: Affine, text: str) -> Affine:
    if a.is_constant():
        return b.scale(a.const)
    if b.is_constant():
        return a.scale(b.const)
    raise ExpressionError(f"non-affine product in {text!r}")


def parse_affine(text: str) -> Affine:
    return _Parser(text).parse()


def split_relation(text: str) -> list[str]:
    """``'0 < x < L'`` -> ``['0', '<', 'x', '<', 'L']``."""
    return [p.strip() for p in _REL_RE.split(text)]


def parse_equality(text: str) -> tuple[str, str] | None:
    """Return (lhs, rhs) for a single ``lhs = rhs`` relation, else None."""
    parts = split_relation(text)
    if len(parts) == 3 and parts[1] == "=":
        return parts[0], parts[2]
    return None


def parse_interval(text: str) -> tuple[str, Affine, Affine] | None:
    """Parse a double inequality ``lo < v < hi`` (or the reversed form)."""
    parts = split_relation(text)
    if len(parts) != 5 or parts[1] != parts[3] or parts[1] not in ("<", "<=", ">", ">="):
        return None
    var = parts[2]
    if not re.fullmatch(r"[A-Za-z][A-Za-z0-9_^]*", var):
        return None
    a, b = parse_affine(parts[0]), parse_affine(parts[4])
    if parts[1] in (">", ">="):
        a, b = b, a
    return var, a, b
