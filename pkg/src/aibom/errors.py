"""Exception types shared across the toolkit."""

from __future__ import annotations


class AibomError(Exception):
    """Base class for every error raised by this package."""


class ParseError(AibomError, ValueError):
    """Input text is not well-formed JSON (or YAML, for conda files)."""

    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message if offset is None else f"{message} (at byte offset {offset})")
        self.offset = offset


class StructuralError(AibomError, ValueError):
    """A known field has the wrong type or violates a model invariant."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


class AmbiguityError(AibomError, ValueError):
    """Two property entries map to the same logical field with different values."""

    def __init__(self, field: str, entries: list[tuple[str, str]]):
        listing = ", ".join(f"{n}={v!r}" for n, v in entries)
        super().__init__(f"conflicting values for {field}: {listing}")
        self.field = field
        self.entries = entries


class DomainError(AibomError, ValueError):
    """Arguments are outside the domain of an operation."""


class MissingPropertyError(DomainError, LookupError):
    """A required SACRO property (or signature block) is absent from the document."""


class KeyMaterialError(AibomError, ValueError):
    """Signing key bytes cannot be loaded for the requested algorithm."""


class UnresolvableError(DomainError):
    """A dependency cannot be turned into a package identifier."""


class SourceUnavailable(AibomError):
    """A vulnerability source could not be reached; carries whatever was fetched."""

    def __init__(self, message: str, partial: list | None = None):
        super().__init__(message)
        self.partial = list(partial or [])
