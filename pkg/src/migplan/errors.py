"""Exception hierarchy shared by every pipeline stage."""

from __future__ import annotations


class MigplanError(Exception):
    """Base class for all errors raised by this package."""


# ingest

class NotARepository(MigplanError):
    pass


class NoPomFound(MigplanError):
    pass


class VcsError(MigplanError):
    def __init__(self, message: str, stderr: str = ""):
        super().__init__(f"{message}: {stderr.strip()}" if stderr else message)
        self.stderr = stderr


class FormatError(MigplanError):
    pass


class HttpError(MigplanError):
    def __init__(self, status: int, body: str = ""):
        super().__init__(f"HTTP {status}: {body[:200]}")
        self.status = status
        self.body = body[:200]


class RateLimited(HttpError):
    def __init__(self, status: int, retry_after: float | None, body: str = ""):
        super().__init__(status, body)
        self.retry_after = retry_after


# extract

class DiffFormatError(MigplanError):
    pass


# graph / issues persistence

class DirectionRejected(MigplanError):
    pass


class SchemaError(MigplanError):
    pass


class CsvFormatError(MigplanError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class DeltaMismatch(CsvFormatError):
    pass


# plan / rank

class UnknownVersion(MigplanError):
    def __init__(self, version: str, role: str = "version"):
        super().__init__(f"unknown {role} {version!r}")
        self.version = version
        self.role = role


class NoPath(MigplanError):
    pass


class ZeroWeight(MigplanError):
    pass


class EmptyPlanList(MigplanError):
    pass


# eval

class CorpusTooSmall(MigplanError):
    pass


class NoMigrations(MigplanError):
    pass


class EndpointMismatch(MigplanError):
    pass


class LengthMismatch(MigplanError):
    pass
