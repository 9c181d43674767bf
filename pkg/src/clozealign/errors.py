"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: ConfigurationError -> 2, DataError and
subclasses -> 3, DegenerateError and subclasses -> 4. Plain ValueError is
reserved for caller bugs (argument misuse) and is not caught by the CLI.
"""


class ClozeAlignError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(ClozeAlignError):
    """Invalid run configuration: bad flags, missing prerequisites, unknown keys."""


class DataError(ClozeAlignError):
    """Malformed or inconsistent input data."""


class ParseError(DataError):
    """A file could not be parsed; names the offending path and line."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        loc = ""
        if path is not None:
            loc = f"{path}:" if line is None else f"{path}:{line}:"
        super().__init__(f"{loc} {message}" if loc else message)
        self.path = path
        self.line = line


class DuplicateRecordError(DataError):
    """Two records share a key that must be unique."""


class ConsistencyError(DataError):
    """Stored values disagree with values recomputed from the same file."""


class CoverageError(DataError):
    """Required lookup entries are missing (e.g. words absent from a tokenization map)."""

    def __init__(self, message: str, missing: list[str] | None = None):
        super().__init__(message)
        self.missing = missing or []


class VocabularyError(DataError):
    """Token material cannot be resolved against the tokenizer vocabulary."""


class CompatibilityError(DataError):
    """Two artifacts that must share a tokenizer or word set do not."""


class DegenerateError(ClozeAlignError):
    """A statistic is undefined on the given data."""


class UndefinedCorrelationError(DegenerateError):
    """Correlation requested on a zero-variance or all-tied series."""


class DegenerateDistributionError(DegenerateError):
    """A score vector that must carry mass is identically zero."""


class DegenerateDesignError(DegenerateError):
    """Regression design matrix is rank deficient (zero predictor variance)."""


class EmptyModelError(DegenerateError):
    """An n-gram model with zero observed tokens was asked to score."""


class InsufficientOverlapError(DegenerateError):
    """Two semantic spaces share too few words to compare."""
