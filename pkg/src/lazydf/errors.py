"""Exception hierarchy.

Construction-time problems (bad identifiers, illegal plan shapes) are
distinct from usage errors in the frame API, which are distinct from
render-time and transport-time failures, so callers can handle each layer
separately.
"""

from __future__ import annotations


class LazyDfError(Exception):
    """Base class for all errors raised by this package."""


class InvalidIdentifierError(LazyDfError):
    """A dataverse, dataset, column, or alias name is not a legal identifier."""


class PlanShapeError(LazyDfError):
    """A plan composition violates a structural invariant."""


class UsageError(LazyDfError):
    """The frame API was called in an unsupported way."""


class RenderError(LazyDfError):
    """A plan cannot be rendered by the chosen dialect."""


class UnsupportedFeatureError(RenderError):
    """The dialect does not support the requested construct."""


class BackendError(LazyDfError):
    """Base class for backend failures; carries the statement that was sent."""

    def __init__(self, message: str, statement: str | None = None):
        super().__init__(message)
        self.statement = statement

    def __str__(self) -> str:
        base = super().__str__()
        if self.statement:
            return f"{base}\nstatement: {self.statement}"
        return base


class TransportError(BackendError):
    """The HTTP request could not be completed (connection, timeout)."""


class HttpStatusError(BackendError):
    """The server answered with a non-success HTTP status."""

    def __init__(self, message: str, status_code: int, statement: str | None = None):
        super().__init__(message, statement)
        self.status_code = status_code


class MalformedResponseError(BackendError):
    """The response body could not be interpreted as a query result."""


class QueryFailedError(BackendError):
    """The backend executed the statement and reported an error result."""


class MissingDatasetError(LazyDfError):
    """A scanned or loaded dataset does not exist in the catalog."""


class UnknownColumnError(LazyDfError):
    """A referenced field is absent and the catalog is in strict mode."""


class DuplicateKeyError(LazyDfError):
    """A load would violate a declared primary key."""


class ParseError(LazyDfError):
    """A statement sent to the in-memory oracle could not be parsed."""
