"""Normalization of logical plans into single SELECT blocks.

A block is the bridge between the plan tree and a concrete statement: one
FROM source, optional WHERE conjuncts, one select clause, optional GROUP
BY / ORDER BY / LIMIT. Composing an operator onto a block that already
holds a clause of the same or an earlier stage pushes the block down into
a nested subquery source, which is exactly how the join-count query gets
its nested shape.

Both the dialect renderer and the in-memory executor consume blocks, so a
plan means the same thing whether it is printed or evaluated.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Union

from .expr import BindingRef, Expr
from .plan import (
    DEFAULT_BINDING,
    AggSpec,
    Filter,
    GroupAgg,
    Join,
    Limit,
    LogicalPlan,
    Project,
    ProjectValue,
    Scan,
    ScalarAgg,
    Sort,
    SortDir,
)


@dataclass(frozen=True)
class DatasetSource:
    dataverse: Optional[str]
    dataset: str
    binding: str

    @property
    def qualified_name(self) -> str:
        if self.dataverse:
            return f"{self.dataverse}.{self.dataset}"
        return self.dataset


@dataclass(frozen=True)
class SubquerySource:
    block: "SelectBlock"
    binding: str


@dataclass(frozen=True)
class JoinSource:
    left: Union[DatasetSource, SubquerySource]
    right: Union[DatasetSource, SubquerySource]
    left_key: Expr   # resolved against the left binding
    right_key: Expr  # resolved against the right binding


Source = Union[DatasetSource, SubquerySource, JoinSource]


@dataclass(frozen=True)
class SelectValue:
    """SELECT VALUE <expr>; a bare BindingRef means the whole record."""

    item: Expr


@dataclass(frozen=True)
class SelectItems:
    items: tuple[tuple[Expr, Optional[str]], ...]
    compact: bool = False  # join pair projection prints as `l,r`


@dataclass(frozen=True)
class SelectAgg:
    aggs: tuple[AggSpec, ...]


@dataclass(frozen=True)
class SelectGroup:
    key: Expr
    key_alias: str
    aggs: tuple[AggSpec, ...]


SelectClause = Union[SelectValue, SelectItems, SelectAgg, SelectGroup]


@dataclass(frozen=True)
class SelectBlock:
    source: Source
    where: tuple[Expr, ...] = ()
    select: Optional[SelectClause] = None
    order_by: Optional[tuple[Expr, SortDir]] = None
    limit: Optional[int] = None

    @property
    def binding(self) -> str:
        src = self.source
        if isinstance(src, JoinSource):
            # A join block has no single binding; callers handling joins
            # work with the side bindings instead.
            raise ValueError("join block has no primary binding")
        return src.binding

    def bindings(self) -> tuple[str, ...]:
        src = self.source
        if isinstance(src, JoinSource):
            return (src.left.binding, src.right.binding)
        return (src.binding,)


def _wrap(block: SelectBlock, binding: str = DEFAULT_BINDING) -> SelectBlock:
    return SelectBlock(source=SubquerySource(block, binding))


def _side_source(plan: LogicalPlan, binding: str) -> Union[DatasetSource, SubquerySource]:
    if isinstance(plan, Scan):
        return DatasetSource(plan.dataverse, plan.dataset, binding)
    return SubquerySource(normalize(plan), binding)


def _base_block(leaf: LogicalPlan) -> SelectBlock:
    if isinstance(leaf, Scan):
        return SelectBlock(source=DatasetSource(leaf.dataverse, leaf.dataset, leaf.binding))
    if isinstance(leaf, Join):
        src = JoinSource(
            left=_side_source(leaf.left, leaf.left_binding),
            right=_side_source(leaf.right, leaf.right_binding),
            left_key=leaf.left_key,
            right_key=leaf.right_key,
        )
        pair = SelectItems(
            items=(
                (BindingRef(leaf.left_binding), None),
                (BindingRef(leaf.right_binding), None),
            ),
            compact=True,
        )
        return SelectBlock(source=src, select=pair)
    raise TypeError(f"unexpected leaf node {type(leaf).__name__}")


def _apply(block: SelectBlock, node: LogicalPlan) -> SelectBlock:
    if isinstance(node, Filter):
        if block.select is not None or block.limit is not None:
            block = _wrap(block)
        return replace(block, where=block.where + (node.predicate,))

    if isinstance(node, Project):
        if block.select is not None or block.limit is not None:
            block = _wrap(block)
        return replace(block, select=SelectItems(node.items))

    if isinstance(node, ProjectValue):
        if block.select is not None or block.limit is not None:
            block = _wrap(block)
        return replace(block, select=SelectValue(node.item))

    if isinstance(node, ScalarAgg):
        if block.select is not None or block.limit is not None or block.order_by is not None:
            block = _wrap(block)
        return replace(block, select=SelectAgg(node.aggs))

    if isinstance(node, GroupAgg):
        if block.select is not None or block.limit is not None or block.order_by is not None:
            block = _wrap(block)
        return replace(block, select=SelectGroup(node.key, node.key_alias, node.aggs))

    if isinstance(node, Sort):
        if (
            block.limit is not None
            or block.order_by is not None
            or isinstance(block.select, (SelectAgg, SelectGroup))
        ):
            block = _wrap(block)
        return replace(block, order_by=(node.key, node.order))

    if isinstance(node, Limit):
        if block.limit is not None:
            block = _wrap(block)
        return replace(block, limit=node.n)

    raise TypeError(f"unexpected plan node {type(node).__name__}")


def normalize(plan: LogicalPlan) -> SelectBlock:
    """Turn a plan into a select block, nesting subqueries where needed."""
    chain: list[LogicalPlan] = []
    node = plan
    while isinstance(node, (Filter, Project, ProjectValue, Limit, GroupAgg, Sort, ScalarAgg)):
        chain.append(node)
        node = node.input
    block = _base_block(node)
    for op in reversed(chain):
        block = _apply(block, op)
    return block
