"""Exception hierarchy shared by every ssql component."""

from __future__ import annotations


class SsqlError(Exception):
    """Base class for all errors raised by this package."""


# --- query text ---------------------------------------------------------


class SsqlSyntaxError(SsqlError):
    """Malformed query text. Carries a 1-based source position."""

    def __init__(self, message: str, line: int, column: int, expected: tuple[str, ...] = ()):
        self.line = line
        self.column = column
        self.expected = expected
        suffix = f" (expected one of: {', '.join(expected)})" if expected else ""
        super().__init__(f"{message} at line {line}, column {column}{suffix}")


class MultipleSemanticError(SsqlSyntaxError):
    """More than one SEMANTIC clause in a single query."""


class EmptySemanticError(SsqlSyntaxError):
    """SEMANTIC clause whose string literal is empty after trimming."""


# --- catalog ------------------------------------------------------------


class FormatError(SsqlError):
    """Annotation document is missing required structure."""


class ReferentialError(SsqlError):
    """Annotation references an unknown image or category."""


class UnknownTableError(SsqlError):
    pass


class UnknownColumnError(SsqlError):
    pass


class QueryTypeError(SsqlError):
    """Comparison between incomparable operand types."""


class NonIntegerIdError(SsqlError):
    """The id-bearing column of a result contained a non-integer value."""


# --- embeddings ---------------------------------------------------------


class ZeroVectorError(SsqlError):
    pass


class DimensionMismatchError(SsqlError):
    pass


class NotNormalizedError(SsqlError):
    pass


class EmptyTextError(SsqlError):
    pass


class SidecarExitError(SsqlError):
    """Embedder process exited nonzero."""


class SidecarProtocolError(SsqlError):
    """Embedder process emitted malformed output."""


class SidecarTimeoutError(SsqlError, TimeoutError):
    """Embedder process did not answer within the configured timeout."""


class BadMagicError(SsqlError):
    """Embedding file does not start with the expected magic bytes."""


class DuplicateIdError(SsqlError):
    pass


# --- vector index -------------------------------------------------------


class AllMissingError(SsqlError):
    """No requested id is present in the index."""


# --- calibration --------------------------------------------------------


class EmptyCandidatesError(SsqlError):
    pass


class SessionDoneError(SsqlError):
    pass


class SessionNotDoneError(SsqlError):
    pass


class SessionNotFoundError(SsqlError):
    pass


# --- engine -------------------------------------------------------------


class EmptyCandidateSetError(SsqlError):
    """The relational half of a semantic query selected zero image ids."""
