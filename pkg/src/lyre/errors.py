"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes (see `lyre.cli`): usage errors exit 1,
data/schema errors exit 2, numeric/convergence errors exit 3.
"""


class LyreError(Exception):
    """Base class for all toolkit errors."""


class UsageError(LyreError):
    """Bad invocation: unknown flag combinations, malformed config values."""


class DataError(LyreError):
    """Malformed or contract-violating input data."""


class SchemaError(DataError):
    """A required column or field is missing from an input file."""

    def __init__(self, name: str, message: str | None = None):
        self.name = name
        super().__init__(message or f"missing required column or field: {name!r}")


class RowError(DataError):
    """A single input row violates the record contract."""

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class LanguageDetectionError(DataError):
    """Text too short or degenerate for trigram language detection."""


class EmptyVocabularyError(DataError):
    """Document-frequency filters and exclusions removed every term."""


class DegenerateLabelsError(DataError):
    """A binary training set contains only one class."""


class StratificationError(DataError):
    """A class is too small to spread across the requested folds."""


class DimensionMismatchError(DataError):
    """Vector or matrix dimensions do not agree."""


class EmbeddingFileError(DataError):
    """Corrupt or mismatched embedding file (magic, version, truncation)."""


class UnembeddableLyricsError(DataError):
    """Lyrics yield zero sentence chunks; the song is excluded downstream."""


class NumericError(LyreError):
    """Numeric contract violations and convergence trouble."""


class NumericInputError(NumericError):
    """Non-finite values in a feature matrix."""


class ProviderContractError(NumericError):
    """A provider that declares bounded output emitted out-of-range components."""
