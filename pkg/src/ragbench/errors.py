"""Exception taxonomy shared across the package.

Errors are grouped so the CLI can map them onto stable exit codes:
bad input or data (exit 2), remote-service trouble (exit 3), anything
else (exit 1).
"""


class RagBenchError(Exception):
    """Base class for every error raised by this package."""


class InputError(RagBenchError):
    """Invalid user-supplied input or data."""


class EmptyInputError(InputError):
    """An input that must be non-empty was empty."""


class ConfigError(InputError):
    """A configuration value violates its documented constraints."""


class DuplicateKeyError(InputError):
    """A key that must be unique appeared twice."""

    def __init__(self, key):
        super().__init__(f"duplicate key: {key!r}")
        self.key = key


class DatasetError(InputError):
    """A corpus or dataset record is malformed or violates an invariant."""


class DegenerateInputError(InputError):
    """Statistic undefined for this input (for example 0/0 in ANOVA)."""


class IndexFileError(InputError):
    """Base class for persisted-index file problems."""


class IndexFormatError(IndexFileError):
    """The file is structurally not a valid index (magic, layout)."""


class IndexVersionError(IndexFileError):
    """The file declares a format version this build does not support."""


class IndexTruncationError(IndexFileError):
    """The file ended before the declared contents were complete."""

    def __init__(self, expected: int, actual: int, what: str):
        super().__init__(
            f"truncated index file: needed {expected} bytes for {what}, have {actual}"
        )
        self.expected = expected
        self.actual = actual


class IndexChecksumError(IndexFileError):
    """Payload checksum does not match the header."""


class DimensionMismatchError(RagBenchError):
    """Vector dimensions disagree."""


class ZeroVectorError(RagBenchError):
    """A zero-norm vector where a direction is required."""


class TransportError(RagBenchError):
    """HTTP transport failed after all retries."""

    def __init__(self, message: str, attempts: int):
        super().__init__(f"{message} (after {attempts} attempt(s))")
        self.attempts = attempts


class ContractViolationError(RagBenchError):
    """A remote service replied outside its documented contract."""
