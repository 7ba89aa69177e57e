"""Twelve-expression benchmark harness.

Each expression is run ``runs_total`` times (default 15) and the first
``warmup_drop`` results (default 5) are excluded from the mean, so the
reported numbers average the last 10 runs. Every run measures two spans
with a monotonic clock: TOTAL covers frame creation plus the expression,
EXPR_ONLY covers the expression against the frame created in that run, so
TOTAL >= EXPR_ONLY holds per paired run by construction.

Predicate literals are drawn uniformly from each attribute's derived value
range. By default they are re-drawn every run (defeating backend caching
between runs); ``fixed_predicates`` holds them constant so that result
checksums are stable for correctness runs.
"""

from __future__ import annotations

import csv
import hashlib
import json
import random
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from . import expr as x
from .dialect import Dialect, SqlppDialect
from .errors import UsageError
from .frame import Frame, merge, open_frame
from .plan import (
    AggFn,
    Filter,
    GroupAgg,
    Join,
    Limit,
    LogicalPlan,
    Project,
    ProjectValue,
    ScalarAgg,
    Sort,
    SortDir,
    count_all,
    scan,
)

EXPRESSION_IDS = tuple(range(1, 13))
TOTAL = "TOTAL"
EXPR_ONLY = "EXPR_ONLY"

# Inclusive value ranges of the predicate attributes, from the generator's
# mod formulas.
ATTRIBUTE_RANGES = {
    "ten": (0, 9),
    "twentyPercent": (0, 4),
    "two": (0, 1),
    "onePercent": (0, 99),
}

_DESCRIPTIONS = {
    1: "total count",
    2: "project two columns, sample",
    3: "filter on three attributes, count",
    4: "group by, count per group",
    5: "map registered function over a column, sample",
    6: "column max",
    7: "column min",
    8: "group by, max per group",
    9: "sort descending, sample",
    10: "filter, sample",
    11: "range filter, count",
    12: "inner self-join, count",
}


def draw_predicates(expression_id: int, rng: random.Random) -> dict:
    """Uniform draws within each predicate attribute's range; expression
    11 draws an ordered pair x <= y."""
    if expression_id == 3:
        return {
            "x": rng.randint(*ATTRIBUTE_RANGES["ten"]),
            "y": rng.randint(*ATTRIBUTE_RANGES["twentyPercent"]),
            "z": rng.randint(*ATTRIBUTE_RANGES["two"]),
        }
    if expression_id == 10:
        return {"x": rng.randint(*ATTRIBUTE_RANGES["ten"])}
    if expression_id == 11:
        lo, hi = ATTRIBUTE_RANGES["onePercent"]
        a = rng.randint(lo, hi)
        b = rng.randint(lo, hi)
        return {"x": min(a, b), "y": max(a, b)}
    return {}


class BenchExpression:
    """One benchmark expression: a frame factory plus the expression body,
    timed separately."""

    def __init__(self, expression_id: int, config: "BenchConfig"):
        if expression_id not in EXPRESSION_IDS:
            raise UsageError(f"unknown expression id {expression_id}")
        self.id = expression_id
        self.description = _DESCRIPTIONS[expression_id]
        self._config = config

    def make_frames(self, backend, dialect: Dialect):
        cfg = self._config
        df = open_frame(cfg.dataverse, cfg.dataset, backend, dialect)
        if self.id == 12:
            df2 = open_frame(cfg.dataverse, cfg.right_dataset_name, backend, dialect)
            return (df, df2)
        return (df,)

    def run(self, frames, predicates: dict):
        df = frames[0]
        i = self.id
        if i == 1:
            return len(df)
        if i == 2:
            return df[["two", "four"]].head()
        if i == 3:
            mask = ((df["ten"] == predicates["x"])
                    & (df["twentyPercent"] == predicates["y"])
                    & (df["two"] == predicates["z"]))
            return len(df[mask])
        if i == 4:
            return df.groupby("oddOnePercent").agg("count").collect()
        if i == 5:
            return df["stringu1"].map("upper").head()
        if i == 6:
            return df["unique1"].max()
        if i == 7:
            return df["unique1"].min()
        if i == 8:
            return df.groupby("twenty")["four"].agg("max").collect()
        if i == 9:
            return df.sort_values("unique1", ascending=False).head()
        if i == 10:
            return df[df["ten"] == predicates["x"]].head()
        if i == 11:
            mask = ((df["onePercent"] >= predicates["x"])
                    & (df["onePercent"] <= predicates["y"]))
            return len(df[mask])
        return len(merge(frames[0], frames[1], left_on="unique1",
                         right_on="unique1", how="inner"))


def translation_plan(expression_id: int, predicates: Optional[dict] = None,
                     dataset: str = "Data", left_dataset: str = "leftData",
                     right_dataset: str = "rightData") -> LogicalPlan:
    """The query shape each expression translates to, over canonical
    dataset names. Expression 11 translates to the bare range selection
    (its count happens at the client in the reference translation)."""
    p = predicates or {}
    base = scan(None, dataset)

    def eq(column, key):
        return x.Compare("=", x.Column(column), x.Literal(p.get(key, 0)))

    if expression_id == 1:
        return count_all(base)
    if expression_id == 2:
        return Limit(Project(base, ((x.Column("two"), None), (x.Column("four"), None))), 5)
    if expression_id == 3:
        pred = x.BoolOp("AND", x.BoolOp("AND", eq("ten", "x"), eq("twentyPercent", "y")),
                        eq("two", "z"))
        return count_all(Filter(base, pred))
    if expression_id == 4:
        return GroupAgg(base, x.Column("oddOnePercent"), "grp_id",
                        ((AggFn.COUNT, None, "cnt"),))
    if expression_id == 5:
        return Limit(ProjectValue(base, x.FuncCall("upper", (x.Column("stringu1"),))), 5)
    if expression_id == 6:
        return ScalarAgg(base, ((AggFn.MAX, x.Column("unique1"), None),))
    if expression_id == 7:
        return ScalarAgg(base, ((AggFn.MIN, x.Column("unique1"), None),))
    if expression_id == 8:
        return GroupAgg(base, x.Column("twenty"), "grp_id",
                        ((AggFn.MAX, x.Column("four"), "max"),))
    if expression_id == 9:
        return Limit(Sort(base, x.Column("unique1"), SortDir.DESC), 5)
    if expression_id == 10:
        return Limit(Filter(base, eq("ten", "x")), 5)
    if expression_id == 11:
        lo = x.Compare(">=", x.Column("onePercent"), x.Literal(p.get("x", 0)))
        hi = x.Compare("<=", x.Column("onePercent"), x.Literal(p.get("y", 0)))
        return Filter(base, x.BoolOp("AND", lo, hi))
    if expression_id == 12:
        return count_all(Join(scan(None, left_dataset), scan(None, right_dataset),
                              x.Column("unique1"), x.Column("unique1")))
    raise UsageError(f"unknown expression id {expression_id}")


def result_checksum(value) -> str:
    """Order-insensitive digest of an expression result."""
    if isinstance(value, list):
        parts = sorted(json.dumps(v, sort_keys=True, default=str) for v in value)
        payload = "[" + ",".join(parts) + "]"
    else:
        payload = json.dumps(value, sort_keys=True, default=str)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


# --- configuration and report -----------------------------------------------------

@dataclass
class BenchConfig:
    expressions: Sequence[int] = EXPRESSION_IDS
    dataset: str = "Data"
    right_dataset: Optional[str] = None  # defaults to `dataset` (self-join)
    dataverse: Optional[str] = None
    runs_total: int = 15
    warmup_drop: int = 5
    seed: int = 1
    fixed_predicates: bool = False

    def __post_init__(self):
        self.expressions = tuple(self.expressions)
        for i in self.expressions:
            if i not in EXPRESSION_IDS:
                raise UsageError(f"unknown expression id {i}")
        if self.runs_total < 1:
            raise UsageError("runs_total must be >= 1")
        if not 0 <= self.warmup_drop < self.runs_total:
            raise UsageError("warmup_drop must be smaller than runs_total")

    @property
    def right_dataset_name(self) -> str:
        return self.right_dataset or self.dataset

    @property
    def averaged_runs(self) -> int:
        return self.runs_total - self.warmup_drop


@dataclass
class RunSample:
    run_index: int  # 1-based
    total_seconds: float
    expr_only_seconds: float
    predicates: dict
    checksum: str


@dataclass
class ExpressionResult:
    expression_id: int
    description: str
    samples: list[RunSample] = field(default_factory=list)
    aborted: bool = False
    error: Optional[str] = None

    def mean_seconds(self, mode: str, warmup_drop: int) -> Optional[float]:
        kept = [
            s.total_seconds if mode == TOTAL else s.expr_only_seconds
            for s in self.samples[warmup_drop:]
        ]
        if not kept:
            return None
        return sum(kept) / len(kept)


@dataclass
class BenchReport:
    config: BenchConfig
    results: list[ExpressionResult]

    @property
    def aborted(self) -> bool:
        return any(r.aborted for r in self.results)

    def mean_rows(self) -> list[tuple[int, str, Optional[float]]]:
        rows = []
        for r in self.results:
            for mode in (TOTAL, EXPR_ONLY):
                rows.append((r.expression_id, mode,
                             r.mean_seconds(mode, self.config.warmup_drop)))
        return rows


def run_benchmark(config: BenchConfig, backend,
                  dialect: Optional[Dialect] = None,
                  clock: Callable[[], float] = time.perf_counter) -> BenchReport:
    """Run the configured expressions; single-threaded, one run at a time.

    A failing run aborts its expression (partial samples are kept and
    flagged) and the harness moves on to the next expression.
    """
    dialect = dialect if dialect is not None else SqlppDialect()
    rng = random.Random(config.seed)
    results = []
    for expression_id in config.expressions:
        expression = BenchExpression(expression_id, config)
        outcome = ExpressionResult(expression_id, expression.description)
        fixed = draw_predicates(expression_id, rng) if config.fixed_predicates else None
        for run_index in range(1, config.runs_total + 1):
            predicates = fixed if fixed is not None else draw_predicates(expression_id, rng)
            try:
                t_start = clock()
                frames = expression.make_frames(backend, dialect)
                t_created = clock()
                value = expression.run(frames, predicates)
                t_done = clock()
            except Exception as exc:  # noqa: BLE001 - flagged, not swallowed
                outcome.aborted = True
                outcome.error = f"run {run_index}: {exc}"
                break
            outcome.samples.append(RunSample(
                run_index=run_index,
                total_seconds=t_done - t_start,
                expr_only_seconds=t_done - t_created,
                predicates=dict(predicates),
                checksum=result_checksum(value),
            ))
        results.append(outcome)
    return BenchReport(config, results)


# --- report emission ------------------------------------------------------------------

_CSV_COLUMNS = ("expression_id", "mode", "mean_seconds", "run_index",
                "seconds", "predicates", "checksum")


def emit_report(report: BenchReport, path, fmt: str = "csv") -> None:
    if fmt == "csv":
        _emit_csv(report, path)
    elif fmt == "json":
        _emit_json(report, path)
    else:
        raise UsageError(f"unknown report format {fmt!r}")


def _emit_csv(report: BenchReport, path) -> None:
    warmup = report.config.warmup_drop
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(_CSV_COLUMNS)
        for r in report.results:
            for mode in (TOTAL, EXPR_ONLY):
                for s in r.samples:
                    seconds = s.total_seconds if mode == TOTAL else s.expr_only_seconds
                    writer.writerow([r.expression_id, mode, "", s.run_index,
                                     f"{seconds:.9f}", json.dumps(s.predicates),
                                     s.checksum])
                mean = r.mean_seconds(mode, warmup)
                writer.writerow([r.expression_id, mode,
                                 "" if mean is None else f"{mean:.9f}",
                                 "", "", "", ""])


def _emit_json(report: BenchReport, path) -> None:
    warmup = report.config.warmup_drop
    payload = {
        "config": {
            "expressions": list(report.config.expressions),
            "dataset": report.config.dataset,
            "right_dataset": report.config.right_dataset_name,
            "runs_total": report.config.runs_total,
            "warmup_drop": report.config.warmup_drop,
            "seed": report.config.seed,
            "fixed_predicates": report.config.fixed_predicates,
        },
        "expressions": [
            {
                "id": r.expression_id,
                "description": r.description,
                "aborted": r.aborted,
                "error": r.error,
                "means": {
                    TOTAL: r.mean_seconds(TOTAL, warmup),
                    EXPR_ONLY: r.mean_seconds(EXPR_ONLY, warmup),
                },
                "runs": [
                    {
                        "run_index": s.run_index,
                        "total_seconds": s.total_seconds,
                        "expr_only_seconds": s.expr_only_seconds,
                        "predicates": s.predicates,
                        "checksum": s.checksum,
                    }
                    for s in r.samples
                ],
            }
            for r in report.results
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
