"""
Infix parser for coefficient expressions.

Grammar (``^`` binds tightest and associates to the right)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | '+' unary | power
    power  := atom ('^' unary)?
    atom   := number | 't' | name | name '(' args ')' | '(' expr ')'

Functions: sin, cos, exp, ln, sqrt and ``cumint(expr[, lower])``; the lower
limit defaults to the problem's t0. Numbers take an optional ``j`` suffix
for imaginary literals. Any other identifier is a parameter.
"""

import re
from fractions import Fraction

from stability_lab.coeffexpr.nodes import (
    FUNCTIONS,
    Const,
    Expr,
    Param,
    T,
    add,
    cumint,
    func,
    mul,
    negate,
    power,
)
from stability_lab.errors import ParseError

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?j?)"
    r"|(?P<name>[^\W\d]\w*)"
    r"|(?P<op>\*\*|[-+*/^(),])"
    r")"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        match = _TOKEN.match(text, pos)
        if not match or match.end() == pos:
            raise ParseError("unexpected character", text, pos)
        kind = match.lastgroup
        value = match.group(kind)
        tokens.append((kind, "^" if value == "**" else value, match.start(kind)))
        pos = match.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:

    def __init__(self, text: str, t0: float):
        self.text = text
        self.t0 = t0
        self.tokens = _tokenize(text)
        self.index = 0

    # -- token helpers ------------------------------------------------------

    def _peek(self) -> tuple[str, str, int]:
        return self.tokens[self.index]

    def _take(self) -> tuple[str, str, int]:
        token = self.tokens[self.index]
        self.index += 1
        return token

    def _expect(self, value: str) -> None:
        kind, got, pos = self._take()
        if got != value or kind == "end":
            raise ParseError(f"expected {value!r}, got {got or 'end of input'!r}", self.text, pos)

    def _at(self, *values: str) -> bool:
        kind, value, _ = self._peek()
        return kind == "op" and value in values

    # -- grammar ------------------------------------------------------------

    def parse(self) -> Expr:
        expr = self.expr()
        kind, value, pos = self._peek()
        if kind != "end":
            raise ParseError(f"unexpected {value!r}", self.text, pos)
        return expr

    def expr(self) -> Expr:
        node = self.term()
        while self._at("+", "-"):
            _, op, _ = self._take()
            rhs = self.term()
            node = add(node, rhs) if op == "+" else add(node, negate(rhs))
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self._at("*", "/"):
            _, op, pos = self._take()
            rhs = self.unary()
            if op == "*":
                node = mul(node, rhs)
            else:
                try:
                    node = mul(node, power(rhs, -1))
                except ZeroDivisionError:
                    raise ParseError("division by zero", self.text, pos) from None
        return node

    def unary(self) -> Expr:
        if self._at("-"):
            self._take()
            return negate(self.unary())
        if self._at("+"):
            self._take()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self._at("^"):
            _, _, pos = self._take()
            exponent = self.unary()
            if not isinstance(exponent, Const) or exponent.value.imag != 0:
                raise ParseError("exponent must be a real constant", self.text, pos)
            value = exponent.value.real
            n = Fraction(value).limit_denominator(2)
            if n.denominator not in (1, 2) or float(n) != value:
                raise ParseError("exponent must be an integer or half-integer", self.text, pos)
            try:
                return power(base, n)
            except ZeroDivisionError:
                raise ParseError("zero raised to a negative power", self.text, pos) from None
        return base

    def atom(self) -> Expr:
        kind, value, pos = self._take()
        if kind == "number":
            if value.endswith("j"):
                return Const(complex(0, float(value[:-1])))
            return Const(float(value))
        if kind == "name":
            if value == "t":
                return T
            if value in FUNCTIONS:
                self._expect("(")
                arg = self.expr()
                self._expect(")")
                return func(value, arg)
            if value == "cumint":
                self._expect("(")
                integrand = self.expr()
                lower = self.t0
                if self._at(","):
                    self._take()
                    bound = self.expr()
                    if not isinstance(bound, Const) or bound.value.imag != 0:
                        raise ParseError("cumint lower limit must be a real constant", self.text, pos)
                    lower = bound.value.real
                self._expect(")")
                return cumint(integrand, lower)
            return Param(value)
        if kind == "op" and value == "(":
            node = self.expr()
            self._expect(")")
            return node
        raise ParseError(f"unexpected {value or 'end of input'!r}", self.text, pos)


def parse(text: str, t0: float = 0.0) -> Expr:
    """Parse an infix expression; ``cumint`` without a lower limit starts at t0."""
    if not text or not text.strip():
        raise ParseError("empty expression")
    return _Parser(text, float(t0)).parse()
