"""In-memory reference executor.

Evaluates select blocks with deliberately naive semantics: full scans,
per-row predicate checks, nested-loop joins, total sorts, and grouping by
key equality. Row order is deterministic (storage order) but only
specified under ORDER BY; equivalence tests compare multisets.

Missing fields follow open-schema leniency by default: a reference to an
absent field yields MISSING, comparisons and arithmetic on MISSING stay
MISSING, and WHERE keeps only rows whose predicate is exactly true. With
``strict_fields`` the same reference raises instead.
"""

from __future__ import annotations

import threading
import time
from typing import Iterable, Optional

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
from .dialect import CreateDataset, CreateIndex, CreateType, DdlRequest, LoadDataset, Persist
from .errors import (
    DuplicateKeyError,
    LazyDfError,
    MissingDatasetError,
    UnknownColumnError,
)
from .plan import AggFn, LogicalPlan, SortDir
from .result import QueryResult, failure, success


class _MissingType:
    """Sentinel for absent fields; propagates through expressions."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "MISSING"


MISSING = _MissingType()

# Scalar implementations for registered functions; the dialect registry
# maps names for rendering, this table gives them meaning in the oracle.
BUILTIN_FUNCTIONS = {
    "upper": lambda s: s.upper(),
    "lower": lambda s: s.lower(),
    "length": len,
    "abs": abs,
}


class MemoryCatalog:
    """Named record collections plus inert index/type bookkeeping.

    Writes are serialized by a lock; reads between writes need no
    coordination because loaded record lists are never mutated in place.
    """

    def __init__(self, strict_fields: bool = False, auto_create: bool = False):
        self.strict_fields = strict_fields
        self.auto_create = auto_create
        self._datasets: dict[str, list[dict]] = {}
        self._keys: dict[str, Optional[str]] = {}
        self._types: dict[str, CreateType] = {}
        self._indexes: dict[tuple[str, Optional[str]], bool] = {}
        self._lock = threading.Lock()

    # -- DDL-level operations -------------------------------------------------

    def create_type(self, req: CreateType) -> None:
        with self._lock:
            self._types[req.name] = req

    def create_dataset(
        self,
        name: str,
        type_name: Optional[str] = None,
        primary_key: Optional[str] = None,
    ) -> None:
        with self._lock:
            if name in self._datasets:
                raise LazyDfError(f"dataset {name!r} already exists")
            if type_name is not None and primary_key is not None:
                typedef = self._types.get(type_name)
                if typedef is not None and not typedef.open:
                    declared = {f for f, _ in typedef.fields}
                    if primary_key not in declared:
                        raise LazyDfError(
                            f"primary key {primary_key!r} is not a field of "
                            f"closed type {type_name!r}"
                        )
            self._datasets[name] = []
            self._keys[name] = primary_key

    def create_index(self, dataset: str, field: Optional[str], primary: bool) -> None:
        with self._lock:
            if dataset not in self._datasets:
                raise MissingDatasetError(f"dataset {dataset!r} does not exist")
            self._indexes[(dataset, field)] = primary

    def has_index(self, dataset: str, field: Optional[str]) -> bool:
        return (dataset, field) in self._indexes

    def load(self, dataset: str, records: Iterable[dict]) -> int:
        """Append records; enforces the declared key if one exists."""
        records = [dict(r) for r in records]
        with self._lock:
            if dataset not in self._datasets:
                if not self.auto_create:
                    raise MissingDatasetError(f"dataset {dataset!r} does not exist")
                self._datasets[dataset] = []
                self._keys[dataset] = None
            key = self._keys.get(dataset)
            existing = self._datasets[dataset]
            if key is not None:
                seen = {r[key] for r in existing if key in r}
                for r in records:
                    if key not in r:
                        raise DuplicateKeyError(f"record lacks declared key {key!r}")
                    if r[key] in seen:
                        raise DuplicateKeyError(
                            f"duplicate value {r[key]!r} for declared key {key!r}"
                        )
                    seen.add(r[key])
            self._datasets[dataset] = existing + records
        return len(records)

    def datasets(self) -> list[str]:
        return sorted(self._datasets)

    def has_dataset(self, name: str) -> bool:
        return name in self._datasets

    def records(self, name: str) -> list[dict]:
        try:
            return self._datasets[name]
        except KeyError:
            raise MissingDatasetError(f"dataset {name!r} does not exist") from None


# --- expression evaluation ---------------------------------------------------

def _compile(e: x.Expr) -> list:
    """Flatten an expression into post-order ops; stack-safe on deep trees.

    Children are pushed right-to-left so the left operand is evaluated
    (and lands on the value stack) first.
    """
    ops: list = []
    stack: list[tuple[x.Expr, bool]] = [(e, False)]
    while stack:
        node, ready = stack.pop()
        if not ready:
            stack.append((node, True))
            for child in reversed(node.children()):
                stack.append((child, False))
            continue
        ops.append(node)
    return ops


def _apply_compare(op: str, a, b):
    try:
        if op == "=":
            return a == b
        if op == "!=":
            return a != b
        if op == "<":
            return a < b
        if op == "<=":
            return a <= b
        if op == ">":
            return a > b
        return a >= b
    except TypeError:
        return MISSING


def _apply_arith(op: str, a, b):
    try:
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        return a / b
    except (TypeError, ZeroDivisionError):
        return MISSING


class _Evaluator:
    def __init__(self, catalog: MemoryCatalog):
        self.strict = catalog.strict_fields
        self._compiled: dict[int, list] = {}

    def _lookup(self, record, name):
        if not isinstance(record, dict) or name not in record:
            if self.strict:
                raise UnknownColumnError(f"unknown field {name!r}")
            return MISSING
        return record[name]

    def eval(self, e: x.Expr, env: dict) -> object:
        ops = self._compiled.get(id(e))
        if ops is None:
            ops = _compile(e)
            self._compiled[id(e)] = ops
        stack: list = []
        for node in ops:
            if isinstance(node, x.Column):
                if len(env) == 1:
                    record = next(iter(env.values()))
                else:
                    raise UnknownColumnError(
                        f"column {node.name!r} is ambiguous in a join; qualify it"
                    )
                stack.append(self._lookup(record, node.name))
            elif isinstance(node, x.QualifiedColumn):
                record = env.get(node.binding, MISSING)
                if record is MISSING:
                    stack.append(MISSING)
                else:
                    stack.append(self._lookup(record, node.name))
            elif isinstance(node, x.BindingRef):
                stack.append(env.get(node.name, MISSING))
            elif isinstance(node, x.Literal):
                stack.append(node.value)
            elif isinstance(node, x.Compare):
                b, a = stack.pop(), stack.pop()
                if a is MISSING or b is MISSING:
                    stack.append(MISSING)
                else:
                    stack.append(_apply_compare(node.op, a, b))
            elif isinstance(node, x.BoolOp):
                b, a = stack.pop(), stack.pop()
                stack.append(self._bool(node.op, a, b))
            elif isinstance(node, x.Not):
                a = stack.pop()
                stack.append(MISSING if a is MISSING else (not _truthy(a)))
            elif isinstance(node, x.Arith):
                b, a = stack.pop(), stack.pop()
                if a is MISSING or b is MISSING:
                    stack.append(MISSING)
                else:
                    stack.append(_apply_arith(node.op, a, b))
            elif isinstance(node, x.FuncCall):
                args = [stack.pop() for _ in node.args][::-1]
                stack.append(self._call(node.name, args))
            else:
                raise LazyDfError(f"cannot evaluate {type(node).__name__}")
        return stack[-1]

    @staticmethod
    def _bool(op, a, b):
        # Three-valued logic: MISSING behaves like SQL's unknown.
        if op == "AND":
            if a is MISSING:
                return False if (b is not MISSING and not _truthy(b)) else MISSING
            if b is MISSING:
                return False if not _truthy(a) else MISSING
            return _truthy(a) and _truthy(b)
        if a is MISSING:
            return True if (b is not MISSING and _truthy(b)) else MISSING
        if b is MISSING:
            return True if _truthy(a) else MISSING
        return _truthy(a) or _truthy(b)

    def _call(self, name, args):
        fn = BUILTIN_FUNCTIONS.get(name.lower())
        if fn is None:
            raise LazyDfError(f"function {name!r} has no in-memory implementation")
        if any(a is MISSING for a in args):
            return MISSING
        try:
            return fn(*args)
        except (TypeError, AttributeError, ValueError):
            return MISSING


def _truthy(v) -> bool:
    return v is True


# --- block execution ---------------------------------------------------------

class _BlockExecutor:
    def __init__(self, catalog: MemoryCatalog):
        self.catalog = catalog
        self.ev = _Evaluator(catalog)

    def run(self, block: SelectBlock) -> list:
        envs = self._source_envs(block.source)

        for predicate in block.where:
            envs = [e for e in envs if self.ev.eval(predicate, e) is True]

        select = block.select
        if isinstance(select, SelectGroup):
            rows = self._group(select, envs)
        elif isinstance(select, SelectAgg):
            rows = self._aggregate(select, envs)
        else:
            if block.order_by is not None:
                envs = self._sort(envs, block.order_by)
            if select is None:
                rows = [self._whole_record(e) for e in envs]
            elif isinstance(select, SelectValue):
                rows = []
                for e in envs:
                    value = self.ev.eval(select.item, e)
                    if value is not MISSING:
                        rows.append(value)
            else:
                rows = [self._project(select, e) for e in envs]

        if block.order_by is not None and isinstance(select, (SelectGroup, SelectAgg)):
            pass  # normalization wraps these shapes; kept for safety
        if block.limit is not None:
            rows = rows[: block.limit]
        return rows

    def _source_envs(self, source) -> list[dict]:
        if isinstance(source, DatasetSource):
            records = self.catalog.records(source.qualified_name)
            return [{source.binding: r} for r in records]
        if isinstance(source, SubquerySource):
            inner = self.run(source.block)
            return [{source.binding: v} for v in inner]
        if isinstance(source, JoinSource):
            left_envs = self._side_envs(source.left)
            right_envs = self._side_envs(source.right)
            lb = source.left.binding
            rb = source.right.binding
            out = []
            for le in left_envs:
                lkey = self.ev.eval(source.left_key, le)
                if lkey is MISSING:
                    continue
                for re_ in right_envs:
                    rkey = self.ev.eval(source.right_key, re_)
                    if rkey is MISSING:
                        continue
                    if lkey == rkey:
                        out.append({lb: le[lb], rb: re_[rb]})
            return out
        raise LazyDfError(f"cannot evaluate source {type(source).__name__}")

    def _side_envs(self, side) -> list[dict]:
        if isinstance(side, DatasetSource):
            records = self.catalog.records(side.qualified_name)
            return [{side.binding: r} for r in records]
        inner = self.run(side.block)
        return [{side.binding: v} for v in inner]

    @staticmethod
    def _whole_record(env: dict):
        return next(iter(env.values()))

    def _project(self, select: SelectItems, env: dict) -> dict:
        out = {}
        for i, (item, alias) in enumerate(select.items):
            value = self.ev.eval(item, env)
            name = alias
            if name is None:
                if isinstance(item, x.Column):
                    name = item.name
                elif isinstance(item, x.QualifiedColumn):
                    name = item.name
                elif isinstance(item, x.BindingRef):
                    name = item.name
                else:
                    name = f"${i + 1}"
            if value is not MISSING:
                out[name] = value
        return out

    def _agg_value(self, fn: AggFn, arg, envs):
        if fn is AggFn.COUNT:
            if arg is None:
                return len(envs)
            return sum(
                1 for e in envs if self.ev.eval(arg, e) is not MISSING
            )
        values = [
            v for e in envs
            if (v := self.ev.eval(arg, e)) is not MISSING
        ]
        if not values:
            return None
        return max(values) if fn is AggFn.MAX else min(values)

    def _aggregate(self, select: SelectAgg, envs) -> list:
        aggs = select.aggs
        if len(aggs) == 1 and aggs[0][2] is None:
            fn, arg, _ = aggs[0]
            return [self._agg_value(fn, arg, envs)]
        record = {name: self._agg_value(fn, arg, envs) for fn, arg, name in aggs}
        return [record]

    def _group(self, select: SelectGroup, envs) -> list:
        groups: dict = {}
        order: list = []
        for e in envs:
            key = self.ev.eval(select.key, e)
            if key is MISSING:
                key = None
            try:
                bucket = groups[key]
            except KeyError:
                bucket = groups[key] = []
                order.append(key)
            except TypeError:
                raise LazyDfError(f"unhashable group key {key!r}") from None
            bucket.append(e)
        rows = []
        for key in order:
            members = groups[key]
            row = {select.key_alias: key}
            for fn, arg, name in select.aggs:
                row[name] = self._agg_value(fn, arg, members)
            rows.append(row)
        return rows

    def _sort(self, envs, order_by) -> list:
        key_expr, direction = order_by
        reverse = direction is SortDir.DESC
        decorated = []
        for e in envs:
            v = self.ev.eval(key_expr, e)
            decorated.append((v is MISSING, v, e))
        try:
            decorated.sort(key=lambda t: (t[0], t[1]), reverse=False)
            if reverse:
                present = [t for t in decorated if not t[0]]
                absent = [t for t in decorated if t[0]]
                decorated = present[::-1] + absent
        except TypeError:
            # Mixed types: fall back to a representation ordering so the
            # executor stays total on fuzzed plans.
            decorated.sort(key=lambda t: (t[0], str(type(t[1])), str(t[1])),
                           reverse=False)
            if reverse:
                present = [t for t in decorated if not t[0]]
                absent = [t for t in decorated if t[0]]
                decorated = present[::-1] + absent
        return [e for _, _, e in decorated]


def execute_block(catalog: MemoryCatalog, block: SelectBlock) -> list:
    return _BlockExecutor(catalog).run(block)


def memory_execute(catalog: MemoryCatalog, plan: LogicalPlan) -> QueryResult:
    """Evaluate a plan against the catalog; errors become ERROR results."""
    start = time.perf_counter()
    try:
        rows = execute_block(catalog, normalize(plan))
    except LazyDfError as exc:
        return failure(str(exc), elapsed=time.perf_counter() - start)
    return success(rows, elapsed=time.perf_counter() - start)


def memory_load(catalog: MemoryCatalog, dataset: str, records: Iterable[dict]) -> int:
    return catalog.load(dataset, records)


class MemoryBackend:
    """Backend facade over a catalog with request accounting.

    Statements arrive either with their structured payload (plan or DDL
    request, the fast path used by frames) or as bare SQL++ text, which is
    parsed by the bundled statement parser.
    """

    def __init__(self, catalog: Optional[MemoryCatalog] = None):
        self.catalog = catalog if catalog is not None else MemoryCatalog()
        self._count = 0
        self._lock = threading.Lock()
        self.statements: list[str] = []

    @property
    def request_count(self) -> int:
        return self._count

    def execute(self, statement: str, payload=None) -> QueryResult:
        with self._lock:
            self._count += 1
            self.statements.append(statement)
        start = time.perf_counter()
        try:
            if payload is None:
                from .sqlpp_parser import execute_statement

                rows = execute_statement(self.catalog, statement)
            elif isinstance(payload, LogicalPlan):
                rows = execute_block(self.catalog, normalize(payload))
            else:
                rows = self._apply_ddl(payload)
        except LazyDfError as exc:
            return failure(str(exc), elapsed=time.perf_counter() - start)
        return success(rows, elapsed=time.perf_counter() - start)

    def _apply_ddl(self, req: DdlRequest) -> list:
        if isinstance(req, CreateType):
            self.catalog.create_type(req)
            return []
        if isinstance(req, CreateDataset):
            self.catalog.create_dataset(req.name, req.type_name, req.primary_key)
            return []
        if isinstance(req, CreateIndex):
            self.catalog.create_index(req.dataset, req.field, req.primary)
            return []
        if isinstance(req, LoadDataset):
            from .wisconsin import read_records

            count = self.catalog.load(req.dataset, read_records(req.path))
            return [count]
        if isinstance(req, Persist):
            rows = execute_block(self.catalog, normalize(req.source_plan))
            if not all(isinstance(r, dict) for r in rows):
                raise LazyDfError("cannot persist non-record values")
            self.catalog.load(req.target, rows)
            return [len(rows)]
        raise LazyDfError(f"unknown DDL request {type(req).__name__}")
