"""Lazy DataFrame surface.

A Frame is an immutable value: a logical plan plus a dialect and a shared
backend handle. Non-terminal operations (column selection, filtering,
grouping, sorting, merging) only build a longer plan; nothing is sent
anywhere until a terminal action (``head``, ``count``/``len``, ``max``,
``min``, ``collect``, ``persist``) needs actual rows. ``explain`` renders
the statement a terminal action would send, without sending it.

Typical session::

    backend = MemoryBackend(catalog)
    df = open_frame("demo", "LiveTweets", backend)
    subset = df[df["ten"] == 5][["two", "four"]]
    subset.explain()      # prints the accumulated query; no request
    subset.head(2)        # one request, with LIMIT 2 appended
"""

from __future__ import annotations

import enum
from typing import Iterable, Optional, Sequence, Union

from . import expr as x
from .dialect import CreateDataset, Dialect, Persist, SqlppDialect, check_qualified_name
from .errors import QueryFailedError, UsageError
from .plan import (
    AggFn,
    Filter,
    GroupAgg,
    Join,
    JoinKind,
    Limit,
    LogicalPlan,
    Project,
    ProjectValue,
    ScalarAgg,
    Scan,
    Sort,
    SortDir,
    count_all,
    scan,
)

DEFAULT_HEAD_SIZE = 5


class RowShape(enum.Enum):
    RECORDS = "records"
    SINGLE_COLUMN = "single_column"


def _to_expr(value, *, frame: Optional["Frame"] = None) -> x.Expr:
    if isinstance(value, ColumnRef):
        if frame is not None and value.frame is not frame:
            raise UsageError("column reference belongs to a different frame")
        return value.expr
    if isinstance(value, x.Expr):
        return value
    if isinstance(value, (int, str, bool)):
        return x.Literal(value)
    raise UsageError(
        f"cannot use {type(value).__name__} here; expected a column, "
        "expression, int, str, or bool"
    )


class ColumnRef:
    """A scalar expression anchored to the frame it came from."""

    __slots__ = ("frame", "expr")

    def __init__(self, frame: "Frame", expr: x.Expr):
        self.frame = frame
        self.expr = expr

    def _mask(self, op: str, other) -> "BooleanMask":
        rhs = _to_expr(other, frame=self.frame)
        return BooleanMask(self.frame, x.Compare(op, self.expr, rhs))

    def __eq__(self, other):  # type: ignore[override]
        return self._mask("=", other)

    def __ne__(self, other):  # type: ignore[override]
        return self._mask("!=", other)

    def __lt__(self, other):
        return self._mask("<", other)

    def __le__(self, other):
        return self._mask("<=", other)

    def __gt__(self, other):
        return self._mask(">", other)

    def __ge__(self, other):
        return self._mask(">=", other)

    __hash__ = None  # comparisons build masks, so refs are unhashable

    def _arith(self, op: str, other, reflected: bool = False) -> "ColumnRef":
        rhs = _to_expr(other, frame=self.frame)
        lhs, rhs = (rhs, self.expr) if reflected else (self.expr, rhs)
        return ColumnRef(self.frame, x.Arith(op, lhs, rhs))

    def __add__(self, other):
        return self._arith("+", other)

    def __radd__(self, other):
        return self._arith("+", other, reflected=True)

    def __sub__(self, other):
        return self._arith("-", other)

    def __rsub__(self, other):
        return self._arith("-", other, reflected=True)

    def __mul__(self, other):
        return self._arith("*", other)

    def __rmul__(self, other):
        return self._arith("*", other, reflected=True)

    def __truediv__(self, other):
        return self._arith("/", other)

    def __rtruediv__(self, other):
        return self._arith("/", other, reflected=True)

    def map(self, function_name: str) -> "Frame":
        """Apply a registered named function elementwise; lazy.

        Only registered functions translate: arbitrary Python callables
        cannot ship to the backend, so they are rejected here with the
        registry contents in the message.
        """
        if not isinstance(function_name, str):
            known = ", ".join(sorted(self.frame.dialect.functions))
            raise UsageError(
                "map takes the name of a registered function; "
                f"known functions: {known}"
            )
        if function_name not in self.frame.dialect.functions:
            known = ", ".join(sorted(self.frame.dialect.functions))
            raise UsageError(
                f"unknown function {function_name!r}; known functions: {known}"
            )
        plan = ProjectValue(self.frame.plan, x.FuncCall(function_name, (self.expr,)))
        return self.frame._derive(plan, RowShape.SINGLE_COLUMN)

    def _minmax(self, fn: AggFn):
        plan = ScalarAgg(self.frame.plan, ((fn, self.expr, None),))
        rows = self.frame._execute(plan)
        return rows[0] if rows else None

    def max(self):
        """Terminal: one request returning the column maximum."""
        return self._minmax(AggFn.MAX)

    def min(self):
        """Terminal: one request returning the column minimum."""
        return self._minmax(AggFn.MIN)


class BooleanMask:
    """Boolean-typed expression tied to its source frame; masks from
    different frames cannot be combined or applied across frames."""

    __slots__ = ("frame", "expr")

    def __init__(self, frame: "Frame", expr: x.Expr):
        self.frame = frame
        self.expr = expr

    def _combine(self, op: str, other: "BooleanMask") -> "BooleanMask":
        if not isinstance(other, BooleanMask):
            raise UsageError("masks combine only with other masks")
        if other.frame is not self.frame:
            raise UsageError("masks from different frames cannot be combined")
        return BooleanMask(self.frame, x.BoolOp(op, self.expr, other.expr))

    def __and__(self, other):
        return self._combine("AND", other)

    def __or__(self, other):
        return self._combine("OR", other)

    def __invert__(self):
        return BooleanMask(self.frame, x.Not(self.expr))


class GroupBy:
    def __init__(self, frame: "Frame", key: str):
        self.frame = frame
        self.key = key

    def __getitem__(self, column: str) -> "GroupByColumn":
        if not isinstance(column, str):
            raise UsageError("groupby selection takes a column name")
        return GroupByColumn(self.frame, self.key, column)

    def agg(self, how: str) -> "Frame":
        if how != "count":
            raise UsageError(
                f"aggregate {how!r} needs a column, e.g. groupby(k)[col].agg({how!r})"
            )
        return self.frame._group_agg(self.key, (AggFn.COUNT, None, "cnt"))


class GroupByColumn:
    def __init__(self, frame: "Frame", key: str, column: str):
        self.frame = frame
        self.key = key
        self.column = column

    def agg(self, how: str) -> "Frame":
        fns = {"count": AggFn.COUNT, "max": AggFn.MAX, "min": AggFn.MIN}
        if how not in fns:
            raise UsageError(f"unsupported aggregate {how!r}; use count, max, or min")
        fn = fns[how]
        arg = None if fn is AggFn.COUNT else x.Column(self.column)
        name = "cnt" if fn is AggFn.COUNT else how
        return self.frame._group_agg(self.key, (fn, arg, name))


class Frame:
    """Immutable lazy frame over a backend dataset."""

    def __init__(self, plan: LogicalPlan, backend, dialect: Optional[Dialect] = None,
                 row_shape: RowShape = RowShape.RECORDS):
        self.plan = plan
        self.backend = backend
        self.dialect = dialect if dialect is not None else SqlppDialect()
        self.row_shape = row_shape

    # -- lineage -----------------------------------------------------------------

    def _derive(self, plan: LogicalPlan, row_shape: Optional[RowShape] = None) -> "Frame":
        return Frame(plan, self.backend, self.dialect,
                     row_shape if row_shape is not None else self.row_shape)

    # -- non-terminal operations ---------------------------------------------------

    def __getitem__(self, key):
        if isinstance(key, str):
            return ColumnRef(self, x.Column(key))
        if isinstance(key, (list, tuple)):
            return self.select_columns(key)
        if isinstance(key, BooleanMask):
            return self.filter(key)
        raise UsageError(
            f"cannot index a frame with {type(key).__name__}; use a column "
            "name, a list of names, or a boolean mask"
        )

    def select_columns(self, names: Sequence[str]) -> "Frame":
        if not names:
            raise UsageError("column selection requires at least one name")
        if not all(isinstance(n, str) for n in names):
            raise UsageError("column selection takes column names")
        items = tuple((x.Column(n), None) for n in names)
        return self._derive(Project(self.plan, items))

    def filter(self, mask: BooleanMask) -> "Frame":
        if not isinstance(mask, BooleanMask):
            raise UsageError("filtering requires a boolean mask")
        if mask.frame is not self:
            raise UsageError("mask was built from a different frame")
        return self._derive(Filter(self.plan, mask.expr))

    def groupby(self, key: str) -> GroupBy:
        if not isinstance(key, str):
            raise UsageError("groupby takes a column name")
        return GroupBy(self, key)

    def _group_agg(self, key: str, agg) -> "Frame":
        plan = GroupAgg(self.plan, x.Column(key), "grp_id", (agg,))
        return self._derive(plan, RowShape.RECORDS)

    def sort_values(self, by: str, ascending: bool = True) -> "Frame":
        if not isinstance(by, str):
            raise UsageError("sort_values takes a column name")
        order = SortDir.ASC if ascending else SortDir.DESC
        return self._derive(Sort(self.plan, x.Column(by), order))

    def merge(self, right: "Frame", left_on: str, right_on: str,
              how: str = "inner") -> "Frame":
        return merge(self, right, left_on, right_on, how)

    def with_column(self, name: str, value) -> "Frame":
        """Extend the frame's projection with `value AS name`; lazy.

        The frame must already project explicit items (the new field is
        added alongside them); the name must not collide with one already
        projected.
        """
        if not isinstance(name, str) or not name:
            raise UsageError("with_column requires a field name")
        expr = _to_expr(value)

        chain: list[LogicalPlan] = []
        node = self.plan
        while node is not None and not isinstance(node, Project):
            children = node.children()
            if len(children) != 1:
                node = None
                break
            chain.append(node)
            node = children[0]
        if not isinstance(node, Project):
            raise UsageError(
                "with_column needs a projected frame; select columns first"
            )
        existing = {
            alias if alias is not None else (item.name if isinstance(item, x.Column) else None)
            for item, alias in node.items
        }
        if name in existing:
            raise UsageError(f"field {name!r} is already projected")

        rebuilt: LogicalPlan = Project(node.input, node.items + ((expr, name),))
        for op in reversed(chain):
            if isinstance(op, Filter):
                rebuilt = Filter(rebuilt, op.predicate)
            elif isinstance(op, Sort):
                rebuilt = Sort(rebuilt, op.key, op.order)
            elif isinstance(op, Limit):
                rebuilt = Limit(rebuilt, op.n)
            elif isinstance(op, ProjectValue):
                rebuilt = ProjectValue(rebuilt, op.item)
            elif isinstance(op, GroupAgg):
                rebuilt = GroupAgg(rebuilt, op.key, op.key_alias, op.aggs)
            elif isinstance(op, ScalarAgg):
                rebuilt = ScalarAgg(rebuilt, op.aggs)
            else:
                raise UsageError(
                    f"cannot extend a projection below {type(op).__name__}"
                )
        return self._derive(rebuilt)

    def limit(self, n: int) -> "Frame":
        """Non-terminal LIMIT; mostly useful for composing test plans."""
        return self._derive(Limit(self.plan, n))

    # -- terminal actions -----------------------------------------------------------

    def _execute(self, plan: LogicalPlan) -> list:
        statement = self.dialect.render_query(plan)
        result = self.backend.execute(statement, payload=plan)
        if not result.ok:
            raise QueryFailedError(result.error_message or "query failed", statement)
        return result.rows

    def head(self, n: int = DEFAULT_HEAD_SIZE) -> list:
        """Terminal: append LIMIT n and fetch; returns at most n rows."""
        if isinstance(n, bool) or not isinstance(n, int) or n < 1:
            raise UsageError(f"head requires a positive row count, got {n!r}")
        return self._execute(Limit(self.plan, n))

    def count(self) -> int:
        """Terminal: COUNT(*) over the composed plan (a LIMIT in the plan
        bounds the count)."""
        rows = self._execute(count_all(self.plan))
        return int(rows[0]) if rows else 0

    def __len__(self) -> int:
        return self.count()

    def collect(self) -> list:
        """Terminal: fetch all rows of the composed plan."""
        return self._execute(self.plan)

    def describe(self, columns: Sequence[str]) -> dict:
        """Terminal: COUNT(*) plus MIN/MAX per listed column, one request.

        The backend holds no schema client-side, so the columns of
        interest are explicit.
        """
        if not columns:
            raise UsageError("describe requires at least one column name")
        aggs = [(AggFn.COUNT, None, "count")]
        for c in columns:
            aggs.append((AggFn.MIN, x.Column(c), f"min_{c}"))
            aggs.append((AggFn.MAX, x.Column(c), f"max_{c}"))
        rows = self._execute(ScalarAgg(self.plan, tuple(aggs)))
        return rows[0] if rows else {}

    def explain(self) -> str:
        """Render the accumulated query without issuing any request."""
        return self.dialect.render_query(self.plan)

    def persist(self, target_dataset: str, policy: str = "create") -> "Frame":
        """Terminal: materialize this frame's rows as a named dataset.

        ``policy="create"`` creates the target first (two requests; fails
        if it already exists); ``policy="append"`` inserts into an
        existing dataset (one request). Returns a frame scanning the
        target, which is immediately queryable.
        """
        if policy not in ("create", "append"):
            raise UsageError(f"unknown persist policy {policy!r}")
        check_qualified_name(target_dataset, "target dataset name")

        requests_: list = []
        if policy == "create":
            requests_.append(CreateDataset(target_dataset))
        requests_.append(Persist(self.plan, target_dataset))

        for req in requests_:
            statement = self.dialect.render_ddl(req)
            result = self.backend.execute(statement, payload=req)
            if not result.ok:
                raise QueryFailedError(
                    result.error_message or "persist failed", statement
                )

        if "." in target_dataset:
            dataverse, dataset = target_dataset.split(".", 1)
        else:
            dataverse, dataset = None, target_dataset
        return Frame(scan(dataverse, dataset), self.backend, self.dialect)

    def __repr__(self) -> str:
        return f"<Frame {self.explain()!r}>"


def open_frame(dataverse: Optional[str], dataset: str, backend,
               dialect: Optional[Dialect] = None) -> Frame:
    """Open a lazy frame over a stored dataset; issues no queries.

    An unknown dataset surfaces only at the first terminal action, as a
    backend error.
    """
    return Frame(scan(dataverse, dataset), backend, dialect)


def merge(left: Frame, right: Frame, left_on: str, right_on: str,
          how: str = "inner") -> Frame:
    """Inner-join two frames on column equality; lazy."""
    if how != "inner":
        raise UsageError(f"unsupported join kind {how!r}; only 'inner'")
    if not isinstance(right, Frame):
        raise UsageError("merge requires two frames")
    if left.backend is not right.backend:
        raise UsageError("frames must share a backend to be merged")
    plan = Join(left.plan, right.plan, x.Column(left_on), x.Column(right_on),
                JoinKind.INNER)
    return Frame(plan, left.backend, left.dialect)
