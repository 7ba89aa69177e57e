"""Immutable logical query plans.

A plan is a tree of relational operators accumulated by lazy frame
operations and rendered by a dialect. Composing a new plan never mutates
its input, so earlier frames stay valid and renderable.

Shape rules are enforced at construction: the aggregate, group, sort, and
join operators may each appear at most once on any root-to-leaf path
(queries stay single-level, matching what the dialects can render), and
every violation raises :class:`~lazydf.errors.PlanShapeError`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Union

from .errors import PlanShapeError
from .expr import Column, Expr, check_identifier

DEFAULT_BINDING = "t"
LEFT_BINDING = "l"
RIGHT_BINDING = "r"


class AggFn(enum.Enum):
    COUNT = "COUNT"
    MAX = "MAX"
    MIN = "MIN"


class SortDir(enum.Enum):
    ASC = "ASC"
    DESC = "DESC"


class JoinKind(enum.Enum):
    INNER = "INNER"


# (function, argument or None for star, output name or None)
AggSpec = tuple[AggFn, Optional[Expr], Optional[str]]

# Operator kinds restricted to one occurrence per root-to-leaf path.
_RESTRICTED = ("scalar_agg", "group_agg", "sort", "join")


def _validate_aggs(aggs, require_names: bool) -> tuple[AggSpec, ...]:
    aggs = tuple(aggs)
    if not aggs:
        raise PlanShapeError("aggregate list must not be empty")
    seen = set()
    for fn, arg, name in aggs:
        if not isinstance(fn, AggFn):
            raise PlanShapeError(f"aggregate function must be AggFn, got {fn!r}")
        if arg is None:
            if fn is not AggFn.COUNT:
                raise PlanShapeError(f"{fn.value} requires a column expression, not *")
        elif not isinstance(arg, Expr):
            raise PlanShapeError(f"aggregate argument must be an expression, got {arg!r}")
        if name is None:
            if require_names:
                raise PlanShapeError("grouped aggregates require an output name")
        else:
            check_identifier(name, "aggregate output name")
            if name in seen:
                raise PlanShapeError(f"duplicate aggregate output name {name!r}")
            seen.add(name)
    if len(aggs) > 1 and any(name is None for _, _, name in aggs):
        raise PlanShapeError("multiple aggregates require output names")
    return aggs


@dataclass(frozen=True)
class LogicalPlan:
    """Base class for plan nodes."""

    def children(self) -> tuple["LogicalPlan", ...]:
        return ()

    @property
    def restricted_kinds(self) -> frozenset:
        return self._restricted  # set in each __post_init__

    def _init_restricted(self, own_kind: str | None = None):
        kinds = frozenset() if own_kind is None else frozenset((own_kind,))
        for child in self.children():
            if own_kind is not None and own_kind in child.restricted_kinds:
                raise PlanShapeError(
                    f"{own_kind} may appear at most once on a root-to-leaf path"
                )
            kinds |= child.restricted_kinds
        object.__setattr__(self, "_restricted", kinds)


@dataclass(frozen=True)
class Scan(LogicalPlan):
    dataverse: Optional[str]
    dataset: str
    binding: str = DEFAULT_BINDING

    def __post_init__(self):
        if self.dataverse is not None:
            check_identifier(self.dataverse, "dataverse name")
        check_identifier(self.dataset, "dataset name")
        check_identifier(self.binding, "binding name")
        self._init_restricted()

    @property
    def qualified_name(self) -> str:
        if self.dataverse:
            return f"{self.dataverse}.{self.dataset}"
        return self.dataset


@dataclass(frozen=True)
class Filter(LogicalPlan):
    input: LogicalPlan
    predicate: Expr

    def __post_init__(self):
        _check_plan(self.input)
        _check_expr(self.predicate, "predicate")
        self._init_restricted()

    def children(self):
        return (self.input,)


@dataclass(frozen=True)
class Project(LogicalPlan):
    input: LogicalPlan
    items: tuple[tuple[Expr, Optional[str]], ...]

    def __post_init__(self):
        _check_plan(self.input)
        object.__setattr__(self, "items", tuple((e, n) for e, n in self.items))
        if not self.items:
            raise PlanShapeError("projection requires at least one item")
        seen = set()
        for item, name in self.items:
            _check_expr(item, "projection item")
            effective = name if name is not None else (
                item.name if isinstance(item, Column) else None
            )
            if name is not None:
                check_identifier(name, "projection alias")
            if effective is not None:
                if effective in seen:
                    raise PlanShapeError(f"duplicate projected name {effective!r}")
                seen.add(effective)
        self._init_restricted()

    def children(self):
        return (self.input,)


@dataclass(frozen=True)
class ProjectValue(LogicalPlan):
    """Single-expression projection rendered as SELECT VALUE."""

    input: LogicalPlan
    item: Expr

    def __post_init__(self):
        _check_plan(self.input)
        _check_expr(self.item, "projection item")
        self._init_restricted()

    def children(self):
        return (self.input,)


@dataclass(frozen=True)
class Limit(LogicalPlan):
    input: LogicalPlan
    n: int

    def __post_init__(self):
        _check_plan(self.input)
        if isinstance(self.n, bool) or not isinstance(self.n, int) or self.n < 1:
            raise PlanShapeError(f"limit must be an integer >= 1, got {self.n!r}")
        self._init_restricted()

    def children(self):
        return (self.input,)


@dataclass(frozen=True)
class GroupAgg(LogicalPlan):
    input: LogicalPlan
    key: Expr
    key_alias: str
    aggs: tuple[AggSpec, ...]

    def __post_init__(self):
        _check_plan(self.input)
        _check_expr(self.key, "group key")
        check_identifier(self.key_alias, "group key alias")
        object.__setattr__(self, "aggs", _validate_aggs(self.aggs, require_names=True))
        self._init_restricted("group_agg")

    def children(self):
        return (self.input,)


@dataclass(frozen=True)
class Sort(LogicalPlan):
    input: LogicalPlan
    key: Expr
    order: SortDir = SortDir.ASC

    def __post_init__(self):
        _check_plan(self.input)
        _check_expr(self.key, "sort key")
        if not isinstance(self.order, SortDir):
            raise PlanShapeError(f"sort order must be SortDir, got {self.order!r}")
        self._init_restricted("sort")

    def children(self):
        return (self.input,)


@dataclass(frozen=True)
class Join(LogicalPlan):
    left: LogicalPlan
    right: LogicalPlan
    left_key: Expr
    right_key: Expr
    kind: JoinKind = JoinKind.INNER
    left_binding: str = LEFT_BINDING
    right_binding: str = RIGHT_BINDING

    def __post_init__(self):
        _check_plan(self.left)
        _check_plan(self.right)
        _check_expr(self.left_key, "join key")
        _check_expr(self.right_key, "join key")
        if not isinstance(self.kind, JoinKind):
            raise PlanShapeError(f"unsupported join kind {self.kind!r}; only INNER")
        check_identifier(self.left_binding, "binding name")
        check_identifier(self.right_binding, "binding name")
        if self.left_binding == self.right_binding:
            raise PlanShapeError("join sides must use distinct bindings")
        self._init_restricted("join")

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class ScalarAgg(LogicalPlan):
    """Ungrouped aggregate(s) over the input: COUNT(*), MAX(col), MIN(col).

    A single unnamed COUNT(*) is the plain row-count shape; a single
    unnamed MAX/MIN is the scalar column aggregate; named specs produce one
    record, which is how ``describe``-style bundles are built.
    """

    input: LogicalPlan
    aggs: tuple[AggSpec, ...]

    def __post_init__(self):
        _check_plan(self.input)
        object.__setattr__(self, "aggs", _validate_aggs(self.aggs, require_names=False))
        self._init_restricted("scalar_agg")

    def children(self):
        return (self.input,)


def _check_plan(p):
    if not isinstance(p, LogicalPlan):
        raise PlanShapeError(f"expected a LogicalPlan, got {type(p).__name__}")


def _check_expr(e, what):
    if not isinstance(e, Expr):
        raise PlanShapeError(f"{what} must be an expression, got {type(e).__name__}")


def scan(dataverse: Optional[str], dataset: str, binding: str = DEFAULT_BINDING) -> Scan:
    """Root of every plan; `dataverse` may be None for an unqualified dataset."""
    return Scan(dataverse, dataset, binding)


def count_all(input: LogicalPlan) -> ScalarAgg:
    """The COUNT(*) terminal shape."""
    return ScalarAgg(input, ((AggFn.COUNT, None, None),))


def plan_depth(plan: LogicalPlan) -> int:
    depth = 0
    stack = [(plan, 1)]
    while stack:
        node, d = stack.pop()
        depth = max(depth, d)
        for child in node.children():
            stack.append((child, d + 1))
    return depth


# --- JSON codec (used by the CLI's --plan-file input) ---------------------

def expr_to_dict(e: Expr) -> dict:
    from . import expr as x

    if isinstance(e, x.Column):
        return {"expr": "column", "name": e.name}
    if isinstance(e, x.Literal):
        return {"expr": "literal", "value": e.value}
    if isinstance(e, x.Compare):
        return {"expr": "compare", "op": e.op,
                "lhs": expr_to_dict(e.lhs), "rhs": expr_to_dict(e.rhs)}
    if isinstance(e, x.BoolOp):
        return {"expr": "bool", "op": e.op,
                "lhs": expr_to_dict(e.lhs), "rhs": expr_to_dict(e.rhs)}
    if isinstance(e, x.Not):
        return {"expr": "not", "operand": expr_to_dict(e.operand)}
    if isinstance(e, x.Arith):
        return {"expr": "arith", "op": e.op,
                "lhs": expr_to_dict(e.lhs), "rhs": expr_to_dict(e.rhs)}
    if isinstance(e, x.FuncCall):
        return {"expr": "call", "name": e.name,
                "args": [expr_to_dict(a) for a in e.args]}
    raise PlanShapeError(f"cannot serialize expression {type(e).__name__}")


def expr_from_dict(d: dict) -> Expr:
    from . import expr as x

    kind = d.get("expr")
    if kind == "column":
        return x.Column(d["name"])
    if kind == "literal":
        return x.Literal(d["value"])
    if kind == "compare":
        return x.Compare(d["op"], expr_from_dict(d["lhs"]), expr_from_dict(d["rhs"]))
    if kind == "bool":
        return x.BoolOp(d["op"], expr_from_dict(d["lhs"]), expr_from_dict(d["rhs"]))
    if kind == "not":
        return x.Not(expr_from_dict(d["operand"]))
    if kind == "arith":
        return x.Arith(d["op"], expr_from_dict(d["lhs"]), expr_from_dict(d["rhs"]))
    if kind == "call":
        return x.FuncCall(d["name"], tuple(expr_from_dict(a) for a in d["args"]))
    raise PlanShapeError(f"unknown expression kind {kind!r}")


def _aggs_to_dict(aggs):
    return [
        {"fn": fn.value, "arg": None if arg is None else expr_to_dict(arg), "name": name}
        for fn, arg, name in aggs
    ]


def _aggs_from_dict(items):
    return tuple(
        (AggFn(d["fn"]), None if d["arg"] is None else expr_from_dict(d["arg"]), d["name"])
        for d in items
    )


def plan_to_dict(p: LogicalPlan) -> dict:
    if isinstance(p, Scan):
        return {"node": "scan", "dataverse": p.dataverse,
                "dataset": p.dataset, "binding": p.binding}
    if isinstance(p, Filter):
        return {"node": "filter", "input": plan_to_dict(p.input),
                "predicate": expr_to_dict(p.predicate)}
    if isinstance(p, Project):
        return {"node": "project", "input": plan_to_dict(p.input),
                "items": [{"item": expr_to_dict(e), "name": n} for e, n in p.items]}
    if isinstance(p, ProjectValue):
        return {"node": "project_value", "input": plan_to_dict(p.input),
                "item": expr_to_dict(p.item)}
    if isinstance(p, Limit):
        return {"node": "limit", "input": plan_to_dict(p.input), "n": p.n}
    if isinstance(p, GroupAgg):
        return {"node": "group_agg", "input": plan_to_dict(p.input),
                "key": expr_to_dict(p.key), "key_alias": p.key_alias,
                "aggs": _aggs_to_dict(p.aggs)}
    if isinstance(p, Sort):
        return {"node": "sort", "input": plan_to_dict(p.input),
                "key": expr_to_dict(p.key), "order": p.order.value}
    if isinstance(p, Join):
        return {"node": "join", "left": plan_to_dict(p.left),
                "right": plan_to_dict(p.right),
                "left_key": expr_to_dict(p.left_key),
                "right_key": expr_to_dict(p.right_key),
                "kind": p.kind.value}
    if isinstance(p, ScalarAgg):
        return {"node": "scalar_agg", "input": plan_to_dict(p.input),
                "aggs": _aggs_to_dict(p.aggs)}
    raise PlanShapeError(f"cannot serialize plan node {type(p).__name__}")


def plan_from_dict(d: dict) -> LogicalPlan:
    node = d.get("node")
    if node == "scan":
        return Scan(d.get("dataverse"), d["dataset"], d.get("binding", DEFAULT_BINDING))
    if node == "filter":
        return Filter(plan_from_dict(d["input"]), expr_from_dict(d["predicate"]))
    if node == "project":
        return Project(plan_from_dict(d["input"]),
                       tuple((expr_from_dict(i["item"]), i.get("name"))
                             for i in d["items"]))
    if node == "project_value":
        return ProjectValue(plan_from_dict(d["input"]), expr_from_dict(d["item"]))
    if node == "limit":
        return Limit(plan_from_dict(d["input"]), d["n"])
    if node == "group_agg":
        return GroupAgg(plan_from_dict(d["input"]), expr_from_dict(d["key"]),
                        d["key_alias"], _aggs_from_dict(d["aggs"]))
    if node == "sort":
        return Sort(plan_from_dict(d["input"]), expr_from_dict(d["key"]),
                    SortDir(d["order"]))
    if node == "join":
        return Join(plan_from_dict(d["left"]), plan_from_dict(d["right"]),
                    expr_from_dict(d["left_key"]), expr_from_dict(d["right_key"]),
                    JoinKind(d["kind"]))
    if node == "scalar_agg":
        return ScalarAgg(plan_from_dict(d["input"]), _aggs_from_dict(d["aggs"]))
    raise PlanShapeError(f"unknown plan node kind {node!r}")
