"""Query-language rendering.

A dialect turns a logical plan (via its select-block form) or a DDL
request into a single statement string. Rendering is deterministic and
consults no global state; dialects are immutable after construction and
safe to share between threads.

Two dialects ship: SQL++ (SELECT VALUE, open types, dataset DDL) and a
conservative ANSI SQL mapping that preserves result shapes.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Mapping, Optional, Union

from . import expr as x
from .blocks import (
    DatasetSource,
    JoinSource,
    SelectAgg,
    SelectBlock,
    SelectGroup,
    SelectItems,
    SelectValue,
    SubquerySource,
    normalize,
)
from .errors import InvalidIdentifierError, RenderError, UnsupportedFeatureError
from .expr import check_identifier
from .plan import AggFn, LogicalPlan, SortDir

_WS_RUN = re.compile(r"\s+")


def canonicalize(query: str) -> str:
    """Collapse whitespace runs to single spaces and trim.

    Token order and case are preserved; this is only meant to make golden
    comparisons insensitive to line breaks and indentation.
    """
    return _WS_RUN.sub(" ", query).strip()


def check_qualified_name(name: str, what: str = "name") -> str:
    """Validate a possibly dataverse-qualified name like `demo.negTweets`."""
    parts = name.split(".")
    if len(parts) > 2:
        raise InvalidIdentifierError(f"invalid {what}: {name!r}")
    for part in parts:
        check_identifier(part, what)
    return name


# --- DDL requests ----------------------------------------------------------

SCALAR_TYPES = ("int64", "string", "boolean", "double")


@dataclass(frozen=True)
class CreateType:
    name: str
    fields: tuple[tuple[str, str], ...]
    open: bool = True

    def __post_init__(self):
        check_identifier(self.name, "type name")
        object.__setattr__(self, "fields", tuple((f, t) for f, t in self.fields))
        for fname, ftype in self.fields:
            check_identifier(fname, "field name")
            if ftype not in SCALAR_TYPES:
                raise InvalidIdentifierError(f"unknown field type {ftype!r}")


@dataclass(frozen=True)
class CreateDataset:
    name: str
    type_name: Optional[str] = None
    primary_key: Optional[str] = None
    storage_options: Optional[tuple[tuple[str, object], ...]] = None

    def __post_init__(self):
        check_qualified_name(self.name, "dataset name")
        if self.type_name is not None:
            check_identifier(self.type_name, "type name")
        if self.primary_key is not None:
            check_identifier(self.primary_key, "primary key field")
        if self.storage_options is not None:
            object.__setattr__(self, "storage_options", tuple(self.storage_options))


@dataclass(frozen=True)
class CreateIndex:
    dataset: str
    field: Optional[str] = None
    name: Optional[str] = None
    primary: bool = False

    def __post_init__(self):
        check_qualified_name(self.dataset, "dataset name")
        if self.field is not None:
            check_identifier(self.field, "indexed field")
        if self.name is not None:
            check_identifier(self.name, "index name")
        if self.primary:
            if self.field is not None or self.name is not None:
                raise InvalidIdentifierError("primary index takes no name or field")
        elif self.field is None or self.name is None:
            raise InvalidIdentifierError("secondary index requires a name and a field")


@dataclass(frozen=True)
class LoadDataset:
    dataset: str
    path: str
    format: str = "adm"

    def __post_init__(self):
        check_qualified_name(self.dataset, "dataset name")


@dataclass(frozen=True)
class Persist:
    """Materialize a plan's result into a target dataset (INSERT INTO)."""

    source_plan: LogicalPlan
    target: str

    def __post_init__(self):
        check_qualified_name(self.target, "target dataset name")


DdlRequest = Union[CreateType, CreateDataset, CreateIndex, LoadDataset, Persist]


# --- expression rendering ---------------------------------------------------

_PREC = {
    "OR": 1,
    "AND": 2,
    "NOT": 3,
    "cmp": 4,
    "+": 5,
    "-": 5,
    "*": 6,
    "/": 6,
}
_ATOM = 9
# Right operands of these need parentheses at equal precedence.
_NON_ASSOC = ("-", "/")


class _RenderCtx:
    """Tracks which source bindings a rendered fragment referenced."""

    __slots__ = ("bindings", "primary", "used")

    def __init__(self, bindings: tuple[str, ...], primary: Optional[str]):
        self.bindings = bindings
        self.primary = primary
        self.used: set[str] = set()


class Dialect:
    """Rendering contract; concrete dialects override the small hooks."""

    name = "base"
    quote_char = '"'
    supports_select_value = True

    _BASE_FUNCTIONS: Mapping[str, str] = {
        "upper": "UPPER",
        "lower": "LOWER",
        "length": "LENGTH",
        "abs": "ABS",
    }

    def __init__(self, functions: Optional[Mapping[str, str]] = None):
        registry = dict(self._BASE_FUNCTIONS)
        if functions:
            for logical, target in functions.items():
                check_identifier(logical, "function name")
                check_identifier(target, "function name")
                registry[logical] = target
        self._functions = registry

    @property
    def functions(self) -> Mapping[str, str]:
        return dict(self._functions)

    def with_function(self, logical: str, target: str) -> "Dialect":
        """Return a copy of this dialect with one more registered function."""
        merged = dict(self._functions)
        merged[logical] = target
        return type(self)(merged)

    def resolve_function(self, logical: str) -> str:
        try:
            return self._functions[logical]
        except KeyError:
            raise RenderError(f"function {logical!r} is not registered") from None

    def quote_identifier(self, name: str) -> str:
        return f"{self.quote_char}{name}{self.quote_char}"

    # -- literals ------------------------------------------------------------

    def render_literal(self, value) -> str:
        if isinstance(value, bool):
            return "true" if value else "false"
        if isinstance(value, int):
            return str(value)
        escaped = value.replace("'", "''")
        return f"'{escaped}'"

    # -- expressions ----------------------------------------------------------

    def render_compare_op(self, op: str) -> str:
        return op

    def render_expr(self, expr: x.Expr, ctx: _RenderCtx) -> str:
        """Iterative post-order rendering; safe on very deep trees."""
        memo: dict[int, tuple[str, int]] = {}
        stack: list[tuple[x.Expr, bool]] = [(expr, False)]
        while stack:
            node, ready = stack.pop()
            if id(node) in memo:
                continue
            if not ready:
                stack.append((node, True))
                for child in node.children():
                    stack.append((child, False))
                continue
            memo[id(node)] = self._render_node(node, ctx, memo)
        return memo[id(expr)][0]

    def _operand(self, child: x.Expr, memo, parent_prec: int, right: bool, op: str) -> str:
        text, prec = memo[id(child)]
        if prec < parent_prec or (right and prec == parent_prec and op in _NON_ASSOC):
            return f"({text})"
        return text

    def _render_node(self, node: x.Expr, ctx: _RenderCtx, memo) -> tuple[str, int]:
        if isinstance(node, x.Column):
            if ctx.primary is None:
                raise RenderError(
                    f"column {node.name!r} needs a source binding; "
                    "qualify it inside a join"
                )
            ctx.used.add(ctx.primary)
            return f"{ctx.primary}.{node.name}", _ATOM
        if isinstance(node, x.QualifiedColumn):
            if node.binding not in ctx.bindings:
                raise RenderError(f"unknown binding {node.binding!r}")
            ctx.used.add(node.binding)
            return f"{node.binding}.{node.name}", _ATOM
        if isinstance(node, x.BindingRef):
            if node.name not in ctx.bindings:
                raise RenderError(f"unknown binding {node.name!r}")
            ctx.used.add(node.name)
            return node.name, _ATOM
        if isinstance(node, x.Literal):
            return self.render_literal(node.value), _ATOM
        if isinstance(node, x.Compare):
            prec = _PREC["cmp"]
            lhs_text, lhs_prec = memo[id(node.lhs)]
            rhs_text, rhs_prec = memo[id(node.rhs)]
            lhs = f"({lhs_text})" if lhs_prec <= prec else lhs_text
            rhs = f"({rhs_text})" if rhs_prec <= prec else rhs_text
            return f"{lhs} {self.render_compare_op(node.op)} {rhs}", prec
        if isinstance(node, x.BoolOp):
            prec = _PREC[node.op]
            lhs = self._operand(node.lhs, memo, prec, False, node.op)
            rhs = self._operand(node.rhs, memo, prec, True, node.op)
            return f"{lhs} {node.op} {rhs}", prec
        if isinstance(node, x.Not):
            prec = _PREC["NOT"]
            text, child_prec = memo[id(node.operand)]
            if child_prec < prec:
                text = f"({text})"
            return f"NOT {text}", prec
        if isinstance(node, x.Arith):
            prec = _PREC[node.op]
            lhs = self._operand(node.lhs, memo, prec, False, node.op)
            rhs = self._operand(node.rhs, memo, prec, True, node.op)
            return f"{lhs} {node.op} {rhs}", prec
        if isinstance(node, x.FuncCall):
            target = self.resolve_function(node.name)
            args = ", ".join(memo[id(a)][0] for a in node.args)
            return f"{target}({args})", _ATOM
        raise RenderError(f"cannot render expression {type(node).__name__}")

    # -- select clause hooks ---------------------------------------------------

    def _render_agg_call(self, fn: AggFn, arg, ctx: _RenderCtx) -> str:
        inner = "*" if arg is None else self.render_expr(arg, ctx)
        return f"{fn.value}({inner})"

    def render_select_value(self, item: x.Expr, ctx: _RenderCtx) -> str:
        return f"SELECT VALUE {self.render_expr(item, ctx)}"

    def render_select_agg(self, clause: SelectAgg, ctx: _RenderCtx) -> str:
        aggs = clause.aggs
        if len(aggs) == 1 and aggs[0][2] is None:
            fn, arg, _ = aggs[0]
            call = self._render_agg_call(fn, arg, ctx)
            if fn is AggFn.COUNT and arg is None:
                return f"SELECT VALUE {call}"
            return f"SELECT {call}"
        parts = [
            f"{self._render_agg_call(fn, arg, ctx)} AS {name}"
            for fn, arg, name in aggs
        ]
        return "SELECT " + ", ".join(parts)

    def render_group(self, clause: SelectGroup, ctx: _RenderCtx) -> tuple[str, str]:
        """Return (select part, group-by part)."""
        aggs = ", ".join(
            f"{self._render_agg_call(fn, arg, ctx)} AS {name}"
            for fn, arg, name in clause.aggs
        )
        select = f"SELECT {clause.key_alias}, {aggs}"
        group = f"{self.render_expr(clause.key, ctx)} AS {clause.key_alias}"
        return select, group

    def render_select_items(self, clause: SelectItems, ctx: _RenderCtx) -> str:
        parts = []
        for item, alias in clause.items:
            text = self.render_expr(item, ctx)
            if alias is not None:
                text = f"{text} AS {alias}"
            parts.append(text)
        sep = "," if clause.compact else ", "
        return "SELECT " + sep.join(parts)

    # -- blocks ------------------------------------------------------------------

    def render_query(self, plan: LogicalPlan) -> str:
        """Render a plan as a single `;`-terminated statement."""
        return self._render_block(normalize(plan)) + ";"

    def _render_block(self, block: SelectBlock) -> str:
        bindings = block.bindings()
        primary = bindings[0] if len(bindings) == 1 else None
        ctx = _RenderCtx(bindings, primary)

        select = block.select
        if select is None:
            select_part = self.render_select_value(x.BindingRef(primary), ctx)
            group_part = None
        elif isinstance(select, SelectValue):
            select_part = self.render_select_value(select.item, ctx)
            group_part = None
        elif isinstance(select, SelectAgg):
            select_part = self.render_select_agg(select, ctx)
            group_part = None
        elif isinstance(select, SelectGroup):
            select_part, group_part = self.render_group(select, ctx)
        else:
            select_part = self.render_select_items(select, ctx)
            group_part = None

        where_part = None
        if block.where:
            where_part = " AND ".join(
                self.render_expr(w, ctx) if len(block.where) == 1
                else self._conjunct(w, ctx)
                for w in block.where
            )

        order_part = None
        if block.order_by is not None:
            key, direction = block.order_by
            order_part = f"{self.render_expr(key, ctx)} {direction.value}"

        from_part = self._render_source(block.source, ctx)

        pieces = [select_part, f"FROM {from_part}"]
        if where_part:
            pieces.append(f"WHERE {where_part}")
        if group_part:
            pieces.append(f"GROUP BY {group_part}")
        if order_part:
            pieces.append(f"ORDER BY {order_part}")
        if block.limit is not None:
            pieces.append(f"LIMIT {block.limit}")
        return " ".join(pieces)

    def _conjunct(self, w: x.Expr, ctx: _RenderCtx) -> str:
        text = self.render_expr(w, ctx)
        if isinstance(w, x.BoolOp) and w.op == "OR":
            return f"({text})"
        return text

    def _render_source(self, source, ctx: _RenderCtx) -> str:
        if isinstance(source, DatasetSource):
            if source.binding in ctx.used:
                return f"{source.qualified_name} {source.binding}"
            return source.qualified_name
        if isinstance(source, SubquerySource):
            return f"({self._render_block(source.block)}) {source.binding}"
        if isinstance(source, JoinSource):
            left = self._render_side(source.left)
            right = self._render_side(source.right)
            on_left = self.render_expr(
                source.left_key, _RenderCtx((source.left.binding,), source.left.binding)
            )
            on_right = self.render_expr(
                source.right_key, _RenderCtx((source.right.binding,), source.right.binding)
            )
            return f"{left} JOIN {right} ON {on_left} = {on_right}"
        raise RenderError(f"cannot render source {type(source).__name__}")

    def _render_side(self, side) -> str:
        if isinstance(side, DatasetSource):
            return f"{side.qualified_name} {side.binding}"
        return f"({self._render_block(side.block)}) {side.binding}"

    # -- DDL -------------------------------------------------------------------

    def render_ddl(self, req: DdlRequest) -> str:
        if isinstance(req, CreateType):
            return self._render_create_type(req)
        if isinstance(req, CreateDataset):
            return self._render_create_dataset(req)
        if isinstance(req, CreateIndex):
            return self._render_create_index(req)
        if isinstance(req, LoadDataset):
            return self._render_load(req)
        if isinstance(req, Persist):
            return self._render_persist(req)
        raise RenderError(f"unknown DDL request {type(req).__name__}")

    def _render_create_type(self, req: CreateType) -> str:
        raise NotImplementedError

    def _render_create_dataset(self, req: CreateDataset) -> str:
        raise NotImplementedError

    def _render_create_index(self, req: CreateIndex) -> str:
        raise NotImplementedError

    def _render_load(self, req: LoadDataset) -> str:
        raise NotImplementedError

    def _render_persist(self, req: Persist) -> str:
        raise NotImplementedError


class SqlppDialect(Dialect):
    """SQL++ rendering matching the AsterixDB statement shapes."""

    name = "sqlpp"
    quote_char = "`"

    def _render_create_type(self, req: CreateType) -> str:
        fields = ", ".join(f"{fname}: {ftype}" for fname, ftype in req.fields)
        body = "{" + fields + "}"
        if req.open:
            return f"CREATE TYPE {req.name} AS {body};"
        return f"CREATE TYPE {req.name} AS CLOSED {body};"

    def _render_create_dataset(self, req: CreateDataset) -> str:
        stmt = f"CREATE DATASET {req.name}"
        if req.type_name:
            stmt += f"({req.type_name})"
        if req.primary_key:
            stmt += f" PRIMARY KEY {req.primary_key}"
        if req.storage_options:
            stmt += f" WITH {json.dumps(dict(req.storage_options))}"
        return stmt + ";"

    def _render_create_index(self, req: CreateIndex) -> str:
        if req.primary:
            return f"CREATE PRIMARY INDEX ON {req.dataset};"
        return f"CREATE INDEX {req.name} ON {req.dataset}({req.field});"

    def _render_load(self, req: LoadDataset) -> str:
        return (
            f"LOAD DATASET {req.dataset} USING localfs "
            f'(("path"="{req.path}"), ("format"="{req.format}"));'
        )

    def _render_persist(self, req: Persist) -> str:
        sub = self.render_query(req.source_plan).rstrip(";")
        return f"INSERT INTO {req.target} SELECT VALUE t FROM ({sub}) t;"


class AnsiDialect(Dialect):
    """ANSI SQL rendering that keeps result shapes aligned with SQL++."""

    name = "ansi"
    quote_char = '"'
    supports_select_value = False

    _TYPE_MAP = {"int64": "BIGINT", "string": "VARCHAR", "boolean": "BOOLEAN",
                 "double": "DOUBLE PRECISION"}

    def render_literal(self, value) -> str:
        if isinstance(value, bool):
            return "TRUE" if value else "FALSE"
        return super().render_literal(value)

    def render_compare_op(self, op: str) -> str:
        return "<>" if op == "!=" else op

    def render_select_value(self, item: x.Expr, ctx: _RenderCtx) -> str:
        if isinstance(item, x.BindingRef):
            return "SELECT *"
        return f"SELECT {self.render_expr(item, ctx)}"

    def render_select_agg(self, clause: SelectAgg, ctx: _RenderCtx) -> str:
        aggs = clause.aggs
        if len(aggs) == 1 and aggs[0][2] is None:
            fn, arg, _ = aggs[0]
            return f"SELECT {self._render_agg_call(fn, arg, ctx)}"
        parts = [
            f"{self._render_agg_call(fn, arg, ctx)} AS {name}"
            for fn, arg, name in aggs
        ]
        return "SELECT " + ", ".join(parts)

    def render_group(self, clause: SelectGroup, ctx: _RenderCtx) -> tuple[str, str]:
        key = self.render_expr(clause.key, ctx)
        aggs = ", ".join(
            f"{self._render_agg_call(fn, arg, ctx)} AS {name}"
            for fn, arg, name in clause.aggs
        )
        return f"SELECT {key} AS {clause.key_alias}, {aggs}", key

    def render_select_items(self, clause: SelectItems, ctx: _RenderCtx) -> str:
        parts = []
        for item, alias in clause.items:
            if isinstance(item, x.BindingRef):
                ctx.used.add(item.name)
                text = f"{item.name}.*"
            else:
                text = self.render_expr(item, ctx)
            if alias is not None:
                text = f"{text} AS {alias}"
            parts.append(text)
        sep = "," if clause.compact else ", "
        return "SELECT " + sep.join(parts)

    def _render_create_type(self, req: CreateType) -> str:
        if req.open:
            raise UnsupportedFeatureError("ANSI SQL has no open types")
        fields = ", ".join(
            f"{fname} {self._TYPE_MAP[ftype]}" for fname, ftype in req.fields
        )
        return f"CREATE TYPE {req.name} AS ({fields});"

    def _render_create_dataset(self, req: CreateDataset) -> str:
        if req.storage_options:
            raise UnsupportedFeatureError("ANSI SQL has no storage options")
        stmt = f"CREATE TABLE {req.name}"
        if req.type_name:
            stmt += f" OF {req.type_name}"
        if req.primary_key:
            stmt += f" (PRIMARY KEY ({req.primary_key}))"
        return stmt + ";"

    def _render_create_index(self, req: CreateIndex) -> str:
        if req.primary:
            raise UnsupportedFeatureError("primary index DDL is SQL++-only")
        return f"CREATE INDEX {req.name} ON {req.dataset} ({req.field});"

    def _render_load(self, req: LoadDataset) -> str:
        raise UnsupportedFeatureError("LOAD DATASET is SQL++-only")

    def _render_persist(self, req: Persist) -> str:
        sub = self.render_query(req.source_plan).rstrip(";")
        return f"INSERT INTO {req.target} SELECT * FROM ({sub}) t;"


_DIALECTS = {"sqlpp": SqlppDialect, "ansi": AnsiDialect}


def get_dialect(name: str) -> Dialect:
    try:
        return _DIALECTS[name.lower()]()
    except KeyError:
        raise RenderError(f"unknown dialect {name!r}") from None
