"""Lazy DataFrame operations translated incrementally into SQL++ (or ANSI
SQL) and executed against a remote query service or the bundled in-memory
oracle, plus a scalable synthetic dataset generator and a benchmark
harness."""

from .bench import BenchConfig, BenchReport, emit_report, run_benchmark, translation_plan
from .dialect import (
    AnsiDialect,
    CreateDataset,
    CreateIndex,
    CreateType,
    Dialect,
    LoadDataset,
    Persist,
    SqlppDialect,
    canonicalize,
    get_dialect,
)
from .errors import LazyDfError
from .frame import Frame, merge, open_frame
from .http_client import HttpBackend
from .memory import MemoryBackend, MemoryCatalog, memory_execute, memory_load
from .oracle_server import OracleServer
from .result import QueryResult, Status
from .wisconsin import GenConfig, derive_record, generate, permutation

__version__ = "0.1.0"

__all__ = [
    "AnsiDialect",
    "BenchConfig",
    "BenchReport",
    "CreateDataset",
    "CreateIndex",
    "CreateType",
    "Dialect",
    "Frame",
    "GenConfig",
    "HttpBackend",
    "LazyDfError",
    "LoadDataset",
    "MemoryBackend",
    "MemoryCatalog",
    "OracleServer",
    "Persist",
    "QueryResult",
    "SqlppDialect",
    "Status",
    "canonicalize",
    "derive_record",
    "emit_report",
    "generate",
    "get_dialect",
    "memory_execute",
    "memory_load",
    "merge",
    "open_frame",
    "permutation",
    "run_benchmark",
    "translation_plan",
    "__version__",
]
