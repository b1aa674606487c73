"""Exception types shared across the engine.

Every error carries a stable machine-readable ``code`` that surfaces
unchanged through the CLI (stderr / ``--output json``) and the HTTP API
(error bodies), so scripted callers can branch on it.
"""

from __future__ import annotations


class ThreadloomError(Exception):
    """Base class for all engine errors."""

    code = "ERROR"
    http_status = 400

    def __init__(self, message: str = ""):
        super().__init__(message or self.__class__.__name__)
        self.message = message or self.__class__.__name__


class SchemaError(ThreadloomError):
    """Malformed input; ``field`` names the first offending field."""

    code = "SCHEMA"
    http_status = 422

    def __init__(self, field: str, message: str = ""):
        self.field = field
        super().__init__(message or f"schema violation at {field!r}")


class InvariantError(ThreadloomError):
    """Well-formed input that is internally inconsistent."""

    code = "INVARIANT"
    http_status = 422


class UnknownPage(ThreadloomError):
    code = "UNKNOWN_PAGE"


class PayloadTooLarge(ThreadloomError):
    code = "PAYLOAD_TOO_LARGE"
    http_status = 413


class NotInTank(ThreadloomError):
    code = "NOT_IN_TANK"
    http_status = 404


class EmptyCommit(ThreadloomError):
    code = "EMPTY_COMMIT"


class NoSuchThread(ThreadloomError):
    code = "NO_SUCH_THREAD"
    http_status = 404


class CycleError(ThreadloomError):
    code = "CYCLE"


class CannotMoveUnorganized(ThreadloomError):
    code = "CANNOT_MOVE_UNORGANIZED"


class ConfirmationRequired(ThreadloomError):
    """Recursive thread delete attempted without the explicit confirm flag."""

    code = "CONFIRMATION_REQUIRED"
    http_status = 409


class ConflictError(ThreadloomError):
    """Check-and-set failure: the expected workspace revision is stale."""

    code = "CONFLICT"
    http_status = 409


class StorageError(ThreadloomError):
    code = "STORAGE"
    http_status = 500


class ZeroVector(ThreadloomError):
    code = "ZERO_VECTOR"


class NoResolvedRefs(ThreadloomError):
    """Thread has no reference with an external paper id to recommend from."""

    code = "NO_RESOLVED_REFS"


class NotFound(ThreadloomError):
    """Definitive absence of a record, distinct from transient failures."""

    code = "NOT_FOUND"
    http_status = 404


class RateLimited(ThreadloomError):
    """Transient, retryable: the metadata backend throttled us."""

    code = "RATE_LIMITED"
    http_status = 429


class NetworkError(ThreadloomError):
    """Transient, retryable network failure reaching the metadata backend."""

    code = "NETWORK"
    http_status = 502


class FixtureMiss(ThreadloomError):
    """A query in fixture mode had no fixture file; tests must fail loudly."""

    code = "FIXTURE_MISS"
    http_status = 500
