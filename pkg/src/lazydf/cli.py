"""Command-line entry point.

Subcommands:

* ``gen``          write a synthetic benchmark dataset
* ``translate``    print the query a benchmark expression (or a plan file)
                   renders to
* ``exec``         run a statement against an endpoint and print rows
* ``bench``        run the benchmark protocol and emit a report
* ``serve-oracle`` expose the in-memory executor over HTTP

Usage errors exit 2 with usage text; runtime failures exit 1 with a
structured message on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

from .bench import (
    EXPRESSION_IDS,
    BenchConfig,
    draw_predicates,
    emit_report,
    run_benchmark,
    translation_plan,
)
from .dialect import get_dialect
from .errors import LazyDfError, UsageError
from .http_client import DEFAULT_TIMEOUT_SECS, HttpBackend
from .memory import MemoryCatalog
from .oracle_server import OracleServer
from .plan import plan_from_dict
from .wisconsin import DEFAULT_STRING_LENGTH, GenConfig, generate, read_records


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lazydf",
        description="Lazy DataFrame-to-SQL++ toolkit: data generation, "
                    "translation, execution, and benchmarking.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a synthetic dataset file")
    gen.add_argument("--records", type=int, required=True)
    gen.add_argument("--seed", type=int, default=1)
    gen.add_argument("--format", choices=("json", "csv"), default="json")
    gen.add_argument("--string-length", type=int, default=DEFAULT_STRING_LENGTH)
    gen.add_argument("--pad-bytes", type=int, default=0)
    gen.add_argument("--low-memory", action="store_true",
                     help="stream a keyed bijective permutation instead of "
                          "shuffling in memory")
    gen.add_argument("--out", required=True)

    translate = sub.add_parser("translate", help="print a rendered query")
    group = translate.add_mutually_exclusive_group(required=True)
    group.add_argument("--expr", type=int, choices=EXPRESSION_IDS,
                       metavar="1..12")
    group.add_argument("--plan-file", help="JSON plan description")
    translate.add_argument("--dialect", choices=("sqlpp", "ansi"),
                           default="sqlpp")
    translate.add_argument("--seed", type=int, default=1,
                           help="seed for predicate literals")

    exec_ = sub.add_parser("exec", help="execute a statement on an endpoint")
    exec_.add_argument("statement", nargs="?",
                       help="statement text; omit when using --expr")
    exec_.add_argument("--expr", type=int, choices=EXPRESSION_IDS,
                       metavar="1..12")
    exec_.add_argument("--dialect", choices=("sqlpp", "ansi"), default="sqlpp")
    exec_.add_argument("--seed", type=int, default=1)
    exec_.add_argument("--dataset", default="Data")
    exec_.add_argument("--endpoint", default=None,
                       help="base URL; defaults to $LAZYDF_ENDPOINT")
    exec_.add_argument("--timeout-secs", type=float, default=DEFAULT_TIMEOUT_SECS)

    bench = sub.add_parser("bench", help="run the 12-expression benchmark")
    bench.add_argument("--endpoint", default=None)
    bench.add_argument("--dialect", choices=("sqlpp", "ansi"), default="sqlpp")
    bench.add_argument("--dataset", default="Data")
    bench.add_argument("--right-dataset", default=None)
    bench.add_argument("--dataverse", default=None)
    bench.add_argument("--expressions", default=None,
                       help="comma-separated ids, default all twelve")
    bench.add_argument("--runs", type=int, default=15)
    bench.add_argument("--warmup", type=int, default=5)
    bench.add_argument("--seed", type=int, default=1)
    bench.add_argument("--fixed-predicates", action="store_true")
    bench.add_argument("--report", default=None)
    bench.add_argument("--report-format", choices=("csv", "json"), default="csv")
    bench.add_argument("--timeout-secs", type=float, default=DEFAULT_TIMEOUT_SECS)

    serve = sub.add_parser("serve-oracle",
                           help="serve the in-memory executor over HTTP")
    serve.add_argument("--port", type=int, default=0)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--load", action="append", default=[],
                       metavar="NAME=PATH",
                       help="load a JSON-lines or CSV file as a dataset "
                            "(repeatable)")
    serve.add_argument("--strict-fields", action="store_true")

    return parser


def _cmd_gen(args) -> int:
    config = GenConfig(records=args.records, out=args.out, seed=args.seed,
                       format=args.format, string_length=args.string_length,
                       pad_bytes=args.pad_bytes, low_memory=args.low_memory)
    summary = generate(config)
    print(json.dumps({
        "records_written": summary.records_written,
        "bytes_written": summary.bytes_written,
        "kernel": summary.kernel,
        "path": summary.path,
    }))
    return 0


def _cmd_translate(args) -> int:
    dialect = get_dialect(args.dialect)
    if args.plan_file:
        with open(args.plan_file, "r", encoding="utf-8") as fh:
            plan = plan_from_dict(json.load(fh))
    else:
        import random

        predicates = draw_predicates(args.expr, random.Random(args.seed))
        plan = translation_plan(args.expr, predicates)
    print(dialect.render_query(plan))
    return 0


def _cmd_exec(args) -> int:
    backend = HttpBackend(args.endpoint, timeout=args.timeout_secs)
    if args.expr is not None:
        import random

        predicates = draw_predicates(args.expr, random.Random(args.seed))
        dialect = get_dialect(args.dialect)
        statement = dialect.render_query(translation_plan(
            args.expr, predicates,
            dataset=args.dataset, left_dataset=args.dataset,
            right_dataset=args.dataset,
        ))
    elif args.statement:
        statement = args.statement
    else:
        raise UsageError("provide a statement or --expr")
    result = backend.execute(statement)
    if not result.ok:
        raise LazyDfError(f"query failed: {result.error_message}")
    print(json.dumps(result.rows, default=str))
    return 0


def _cmd_bench(args) -> int:
    expressions = EXPRESSION_IDS
    if args.expressions:
        expressions = tuple(int(p) for p in args.expressions.split(",") if p)
    config = BenchConfig(
        expressions=expressions,
        dataset=args.dataset,
        right_dataset=args.right_dataset,
        dataverse=args.dataverse,
        runs_total=args.runs,
        warmup_drop=args.warmup,
        seed=args.seed,
        fixed_predicates=args.fixed_predicates,
    )
    backend = HttpBackend(args.endpoint, timeout=args.timeout_secs)
    report = run_benchmark(config, backend, get_dialect(args.dialect))
    for expression_id, mode, mean in report.mean_rows():
        shown = "aborted" if mean is None else f"{mean:.6f}s"
        print(f"expression {expression_id:>2} {mode:<9} mean {shown}")
    for r in report.results:
        if r.aborted:
            print(f"expression {r.expression_id} aborted: {r.error}",
                  file=sys.stderr)
    if args.report:
        emit_report(report, args.report, args.report_format)
        print(f"report written to {args.report}")
    return 1 if report.aborted else 0


def _cmd_serve_oracle(args) -> int:
    catalog = MemoryCatalog(strict_fields=args.strict_fields, auto_create=True)
    for spec in args.load:
        name, _, path = spec.partition("=")
        if not name or not path:
            raise UsageError(f"--load expects NAME=PATH, got {spec!r}")
        count = catalog.load(name, read_records(path))
        print(f"loaded {count} records into {name}", file=sys.stderr)
    server = OracleServer(catalog, host=args.host, port=args.port)
    print(f"oracle listening on {server.url}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    return 0


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "gen": _cmd_gen,
        "translate": _cmd_translate,
        "exec": _cmd_exec,
        "bench": _cmd_bench,
        "serve-oracle": _cmd_serve_oracle,
    }
    try:
        return handlers[args.command](args)
    except UsageError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return 2
    except LazyDfError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
