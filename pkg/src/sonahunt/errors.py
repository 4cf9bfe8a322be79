"""Exception types shared across the package.

Data errors (anything raised while parsing, validating, or resolving
user-supplied files) derive from :class:`DataError` so the CLI can map
them to a single exit code.
"""


class SonahuntError(Exception):
    """Base class for all package errors."""


class DataError(SonahuntError):
    """A problem with user-supplied data or files (CLI exit code 2)."""


# --- lexicon ---------------------------------------------------------------

class MalformedRecordError(DataError):
    """A line in an input file does not match the expected schema."""

    def __init__(self, path, line_no, field, message):
        self.path = str(path)
        self.line_no = line_no
        self.field = field
        super().__init__(f"{self.path}:{line_no}: bad field '{field}': {message}")


class DanglingReferenceError(DataError):
    """A record references a word_id that does not exist."""


class MissingDefinitionError(DataError):
    """A word has no definition, violating the lexicon invariant."""


class UnknownWordError(DataError):
    """A word_id lookup failed."""


class DefinitionWordMismatchError(DataError):
    """A definition_id does not belong to the given word_id."""


# --- embeddings ------------------------------------------------------------

class BadMagicError(DataError):
    """An embedding file does not start with the expected magic bytes."""


class TruncatedFileError(DataError):
    """A binary file ended mid-record."""


class DimMismatchError(DataError):
    """Vector dimensionality differs from what the container expects."""


class ZeroVectorError(DataError):
    """A zero vector cannot be normalized."""


class AllTokensOutOfVocabularyError(DataError):
    """No token of the input text is present in the word-vector table."""


# --- index -----------------------------------------------------------------

class DuplicateDefinitionIdError(DataError):
    """Two indexed points share a definition_id."""


class UnnormalizedVectorError(DataError):
    """A vector handed to the index is not unit length."""


class VersionMismatchError(DataError):
    """An index file has an unknown magic or version byte."""


# --- evaluation ------------------------------------------------------------

class MissingEmbeddingError(DataError):
    """An eligible query definition has no vector in the embedding set."""

    def __init__(self, definition_id):
        self.definition_id = definition_id
        super().__init__(f"no embedding for definition_id {definition_id}")


class MissingTargetError(DataError):
    """A labeled item's target word cannot be found in the index."""


class EmptyJudgmentsError(DataError):
    """An evaluation produced no judgable queries."""
