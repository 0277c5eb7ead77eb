"""
Coefficient expression tree.

Nodes are frozen dataclasses, so trees are immutable, hashable and compare
structurally. Arithmetic operators build new trees through the folding
constructors ``add``/``mul``/``power``, which is the only simplification
performed (constant folding, flattening, neutral elements).

Differentiation and printing are single-dispatch functions over node types.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import singledispatch
import numbers
from typing import Iterator

from stability_lab.errors import NonDifferentiable

FUNCTIONS = ("sin", "cos", "exp", "ln", "sqrt")


class Expr:
    """Base class of all expression nodes."""

    def children(self) -> tuple[Expr, ...]:
        return ()

    def __add__(self, other) -> Expr:
        return add(self, as_expr(other))

    def __radd__(self, other) -> Expr:
        return add(as_expr(other), self)

    def __sub__(self, other) -> Expr:
        return add(self, negate(as_expr(other)))

    def __rsub__(self, other) -> Expr:
        return add(as_expr(other), negate(self))

    def __mul__(self, other) -> Expr:
        return mul(self, as_expr(other))

    def __rmul__(self, other) -> Expr:
        return mul(as_expr(other), self)

    def __truediv__(self, other) -> Expr:
        return mul(self, power(as_expr(other), -1))

    def __rtruediv__(self, other) -> Expr:
        return mul(as_expr(other), power(self, -1))

    def __neg__(self) -> Expr:
        return negate(self)

    def __pow__(self, exponent) -> Expr:
        return power(self, exponent)

    def __str__(self) -> str:
        return to_string(self)


@dataclass(frozen=True, eq=True, repr=True)
class Const(Expr):
    value: complex

    def __post_init__(self):
        object.__setattr__(self, "value", complex(self.value))


@dataclass(frozen=True, eq=True, repr=True)
class Var(Expr):
    """The independent variable t."""


@dataclass(frozen=True, eq=True, repr=True)
class Param(Expr):
    name: str


@dataclass(frozen=True, eq=True, repr=True)
class Add(Expr):
    terms: tuple[Expr, ...]

    def children(self) -> tuple[Expr, ...]:
        return self.terms


@dataclass(frozen=True, eq=True, repr=True)
class Mul(Expr):
    factors: tuple[Expr, ...]

    def children(self) -> tuple[Expr, ...]:
        return self.factors


@dataclass(frozen=True, eq=True, repr=True)
class Neg(Expr):
    arg: Expr

    def children(self) -> tuple[Expr, ...]:
        return (self.arg,)


@dataclass(frozen=True, eq=True, repr=True)
class Pow(Expr):
    """Integer or half-integer power."""

    base: Expr
    exponent: Fraction

    def children(self) -> tuple[Expr, ...]:
        return (self.base,)


@dataclass(frozen=True, eq=True, repr=True)
class Func(Expr):
    name: str
    arg: Expr

    def __post_init__(self):
        if self.name not in FUNCTIONS:
            raise ValueError(f"unknown function {self.name!r}")

    def children(self) -> tuple[Expr, ...]:
        return (self.arg,)


@dataclass(frozen=True, eq=True, repr=True)
class CumInt(Expr):
    """Cumulative integral of ``integrand`` from ``lower`` to t."""

    integrand: Expr
    lower: float

    def children(self) -> tuple[Expr, ...]:
        return (self.integrand,)


ZERO = Const(0)
ONE = Const(1)
T = Var()


# ---------------------------------------------------------------------------
# Folding constructors
# ---------------------------------------------------------------------------

def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, numbers.Number):
        return Const(complex(value))
    raise TypeError(f"cannot convert {type(value).__name__} to an expression")


def _exponent(value) -> Fraction:
    n = Fraction(value).limit_denominator(2) if isinstance(value, float) else Fraction(value)
    if n.denominator not in (1, 2) or float(n) != float(value):
        raise ValueError(f"exponent must be an integer or half-integer, got {value!r}")
    return n


def add(*terms: Expr) -> Expr:
    flat: list[Expr] = []
    constant = 0j
    for term in terms:
        parts = term.terms if isinstance(term, Add) else (term,)
        for part in parts:
            if isinstance(part, Const):
                constant += part.value
            else:
                flat.append(part)
    if constant != 0 or not flat:
        flat.append(Const(constant))
    return flat[0] if len(flat) == 1 else Add(tuple(flat))


def mul(*factors: Expr) -> Expr:
    flat: list[Expr] = []
    constant = 1 + 0j
    for factor in factors:
        parts = factor.factors if isinstance(factor, Mul) else (factor,)
        for part in parts:
            if isinstance(part, Const):
                constant *= part.value
            elif isinstance(part, Neg):
                constant = -constant
                flat.append(part.arg)
            else:
                flat.append(part)
    if constant == 0:
        return ZERO
    if not flat:
        return Const(constant)
    if constant != 1:
        flat.insert(0, Const(constant))
    return flat[0] if len(flat) == 1 else Mul(tuple(flat))


def negate(arg: Expr) -> Expr:
    if isinstance(arg, Const):
        return Const(-arg.value)
    if isinstance(arg, Neg):
        return arg.arg
    return Neg(arg)


def power(base: Expr, exponent) -> Expr:
    n = _exponent(exponent)
    if n == 0:
        return ONE
    if n == 1:
        return base
    if isinstance(base, Const) and n.denominator == 1:
        if base.value == 0 and n < 0:
            raise ZeroDivisionError("zero raised to a negative power")
        return Const(base.value ** int(n))
    if isinstance(base, Pow) and n.denominator == 1 and base.exponent.denominator == 1:
        return power(base.base, base.exponent * n)
    return Pow(base, n)


def func(name: str, arg: Expr) -> Expr:
    return Func(name, as_expr(arg))


def sin(arg) -> Expr:
    return func("sin", arg)


def cos(arg) -> Expr:
    return func("cos", arg)


def exp(arg) -> Expr:
    return func("exp", arg)


def ln(arg) -> Expr:
    return func("ln", arg)


def sqrt(arg) -> Expr:
    return func("sqrt", arg)


def cumint(integrand, lower: float) -> Expr:
    return CumInt(as_expr(integrand), float(lower))


# ---------------------------------------------------------------------------
# Traversal helpers
# ---------------------------------------------------------------------------

def walk(expr: Expr) -> Iterator[Expr]:
    """Pre-order traversal."""
    stack = [expr]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(node.children()))


def free_params(expr: Expr) -> set[str]:
    return {node.name for node in walk(expr) if isinstance(node, Param)}


def cumulative_integrals(expr: Expr) -> list[CumInt]:
    seen: dict[CumInt, None] = {}
    for node in walk(expr):
        if isinstance(node, CumInt):
            seen.setdefault(node, None)
    return list(seen)


@singledispatch
def substitute(expr: Expr, bindings: dict[str, complex]) -> Expr:
    raise TypeError(f"cannot substitute into {type(expr).__name__}")


@substitute.register
def _(expr: Const, bindings):
    return expr


@substitute.register
def _(expr: Var, bindings):
    return expr


@substitute.register
def _(expr: Param, bindings):
    return Const(bindings[expr.name]) if expr.name in bindings else expr


@substitute.register
def _(expr: Add, bindings):
    return add(*(substitute(term, bindings) for term in expr.terms))


@substitute.register
def _(expr: Mul, bindings):
    return mul(*(substitute(factor, bindings) for factor in expr.factors))


@substitute.register
def _(expr: Neg, bindings):
    return negate(substitute(expr.arg, bindings))


@substitute.register
def _(expr: Pow, bindings):
    return power(substitute(expr.base, bindings), expr.exponent)


@substitute.register
def _(expr: Func, bindings):
    return Func(expr.name, substitute(expr.arg, bindings))


@substitute.register
def _(expr: CumInt, bindings):
    return CumInt(substitute(expr.integrand, bindings), expr.lower)


# ---------------------------------------------------------------------------
# Differentiation
# ---------------------------------------------------------------------------

@singledispatch
def differentiate(expr: Expr) -> Expr:
    """Symbolic d/dt. Simplification is limited to constant folding."""
    raise NonDifferentiable(f"cannot differentiate a {type(expr).__name__}")


@differentiate.register
def _(expr: Const):
    return ZERO


@differentiate.register
def _(expr: Param):
    return ZERO


@differentiate.register
def _(expr: Var):
    return ONE


@differentiate.register
def _(expr: Add):
    return add(*(differentiate(term) for term in expr.terms))


@differentiate.register
def _(expr: Mul):
    # (f g h)' = f' g h + f g' h + f g h'
    terms = []
    for i, factor in enumerate(expr.factors):
        rest = expr.factors[:i] + expr.factors[i + 1:]
        terms.append(mul(differentiate(factor), *rest))
    return add(*terms)


@differentiate.register
def _(expr: Neg):
    return negate(differentiate(expr.arg))


@differentiate.register
def _(expr: Pow):
    inner = differentiate(expr.base)
    if inner == ZERO:
        return ZERO
    coefficient = Const(float(expr.exponent))
    return mul(coefficient, power(expr.base, expr.exponent - 1), inner)


@differentiate.register
def _(expr: Func):
    inner = differentiate(expr.arg)
    if inner == ZERO:
        return ZERO
    a = expr.arg
    match expr.name:
        case "sin":
            outer = cos(a)
        case "cos":
            outer = negate(sin(a))
        case "exp":
            outer = expr
        case "ln":
            outer = power(a, -1)
        case "sqrt":
            outer = mul(Const(0.5), power(expr, -1))
        case _:
            raise NonDifferentiable(f"no derivative rule for {expr.name}")
    return mul(outer, inner)


@differentiate.register
def _(expr: CumInt):
    return expr.integrand


# ---------------------------------------------------------------------------
# Printing (output re-parses to an equal tree)
# ---------------------------------------------------------------------------

def _number(value: complex) -> str:
    if value.imag == 0:
        text = repr(float(value.real))
        return f"({text})" if value.real < 0 else text
    if value.real == 0:
        return f"({float(value.imag)!r}j)"
    return f"({float(value.real)!r} + {float(value.imag)!r}j)"


def _fraction(exp: Fraction) -> str:
    if exp.denominator == 1:
        return str(exp.numerator) if exp >= 0 else f"({exp.numerator})"
    return f"({exp.numerator}/{exp.denominator})"


@singledispatch
def to_string(expr: Expr) -> str:
    raise TypeError(f"cannot print {type(expr).__name__}")


@to_string.register
def _(expr: Const):
    return _number(expr.value)


@to_string.register
def _(expr: Var):
    return "t"


@to_string.register
def _(expr: Param):
    return expr.name


@to_string.register
def _(expr: Add):
    return "(" + " + ".join(to_string(term) for term in expr.terms) + ")"


@to_string.register
def _(expr: Mul):
    return "(" + "*".join(to_string(factor) for factor in expr.factors) + ")"


@to_string.register
def _(expr: Neg):
    return f"(-{to_string(expr.arg)})"


@to_string.register
def _(expr: Pow):
    base = to_string(expr.base)
    if isinstance(expr.base, Pow):
        base = f"({base})"
    return f"{base}^{_fraction(expr.exponent)}"


@to_string.register
def _(expr: Func):
    return f"{expr.name}({to_string(expr.arg)})"


@to_string.register
def _(expr: CumInt):
    return f"cumint({to_string(expr.integrand)}, {expr.lower!r})"
