"""Query result container shared by all backends."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional


class Status(enum.Enum):
    SUCCESS = "success"
    ERROR = "error"


@dataclass
class QueryResult:
    status: Status
    rows: list = field(default_factory=list)
    error_message: Optional[str] = None
    elapsed: float = 0.0

    def __post_init__(self):
        if self.status is Status.SUCCESS and self.error_message is not None:
            raise ValueError("successful results carry no error message")
        if self.status is Status.ERROR and self.rows:
            raise ValueError("error results carry no rows")

    @property
    def ok(self) -> bool:
        return self.status is Status.SUCCESS


def success(rows: list, elapsed: float = 0.0) -> QueryResult:
    return QueryResult(Status.SUCCESS, rows=rows, elapsed=elapsed)


def failure(message: str, elapsed: float = 0.0) -> QueryResult:
    return QueryResult(Status.ERROR, error_message=message, elapsed=elapsed)
