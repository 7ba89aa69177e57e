"""Scalar expression trees.

Expressions are immutable values: column references, literals, comparisons,
boolean and arithmetic combinators, and named function calls. They carry no
dialect or binding information; rendering and evaluation decide how a
`Column` resolves.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from .errors import InvalidIdentifierError, PlanShapeError

_IDENT_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")

COMPARE_OPS = ("=", "!=", "<", "<=", ">", ">=")
BOOL_OPS = ("AND", "OR")
ARITH_OPS = ("+", "-", "*", "/")

LiteralValue = Union[int, str, bool]


def check_identifier(name: str, what: str = "identifier") -> str:
    if not isinstance(name, str) or not _IDENT_RE.match(name):
        raise InvalidIdentifierError(f"invalid {what}: {name!r}")
    return name


@dataclass(frozen=True)
class Expr:
    """Base class for expression nodes."""

    def children(self) -> tuple["Expr", ...]:
        return ()


@dataclass(frozen=True)
class Column(Expr):
    name: str

    def __post_init__(self):
        check_identifier(self.name, "column name")


@dataclass(frozen=True)
class Literal(Expr):
    value: LiteralValue

    def __post_init__(self):
        if not isinstance(self.value, (int, str, bool)):
            raise PlanShapeError(
                f"literal must be int, str, or bool, got {type(self.value).__name__}"
            )


@dataclass(frozen=True)
class Compare(Expr):
    op: str
    lhs: Expr
    rhs: Expr

    def __post_init__(self):
        if self.op not in COMPARE_OPS:
            raise PlanShapeError(f"unknown comparison operator {self.op!r}")

    def children(self):
        return (self.lhs, self.rhs)


@dataclass(frozen=True)
class BoolOp(Expr):
    op: str
    lhs: Expr
    rhs: Expr

    def __post_init__(self):
        if self.op not in BOOL_OPS:
            raise PlanShapeError(f"unknown boolean operator {self.op!r}")

    def children(self):
        return (self.lhs, self.rhs)


@dataclass(frozen=True)
class Not(Expr):
    operand: Expr

    def children(self):
        return (self.operand,)


@dataclass(frozen=True)
class Arith(Expr):
    op: str
    lhs: Expr
    rhs: Expr

    def __post_init__(self):
        if self.op not in ARITH_OPS:
            raise PlanShapeError(f"unknown arithmetic operator {self.op!r}")

    def children(self):
        return (self.lhs, self.rhs)


@dataclass(frozen=True)
class FuncCall(Expr):
    """Call of a registered named function; resolution happens at render time."""

    name: str
    args: tuple[Expr, ...]

    def __post_init__(self):
        check_identifier(self.name, "function name")
        object.__setattr__(self, "args", tuple(self.args))

    def children(self):
        return self.args


@dataclass(frozen=True)
class BindingRef(Expr):
    """Reference to a whole source binding (the record itself, or one join side).

    Internal to rendering/execution; the frame API never exposes it directly.
    """

    name: str

    def __post_init__(self):
        check_identifier(self.name, "binding name")


@dataclass(frozen=True)
class QualifiedColumn(Expr):
    """Column resolved against a named binding, e.g. the left side of a join."""

    binding: str
    name: str

    def __post_init__(self):
        check_identifier(self.binding, "binding name")
        check_identifier(self.name, "column name")


def col(name: str) -> Column:
    return Column(name)


def lit(value: LiteralValue) -> Literal:
    return Literal(value)


def conjoin(parts: list[Expr]) -> Expr:
    """Left-associated AND of one or more predicates."""
    if not parts:
        raise PlanShapeError("conjoin requires at least one predicate")
    acc = parts[0]
    for p in parts[1:]:
        acc = BoolOp("AND", acc, p)
    return acc


def expr_depth(expr: Expr) -> int:
    """Iterative depth computation; safe on very deep trees."""
    depth = 0
    stack: list[tuple[Expr, int]] = [(expr, 1)]
    while stack:
        node, d = stack.pop()
        depth = max(depth, d)
        for child in node.children():
            stack.append((child, d + 1))
    return depth
