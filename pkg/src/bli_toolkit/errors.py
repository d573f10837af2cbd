"""Exception hierarchy shared by every module of the toolkit."""


class BliError(Exception):
    """Base class for toolkit errors (maps to CLI exit code 1)."""


class ConfigError(BliError):
    """Bad usage or configuration: missing files, invalid flag values (exit code 2)."""


class EmbeddingFormatError(BliError):
    """A text vector file could not be parsed."""


class DictionaryFormatError(BliError):
    """A bilingual dictionary file could not be parsed."""


class AlignmentError(BliError):
    """A mapping could not be fitted or applied."""


class RetrievalError(BliError):
    """Invalid retrieval request (depth, neighbourhood size, shapes)."""


class EvaluationError(BliError):
    """Retrieval results and lexicon are inconsistent, or nothing is left to evaluate."""


class RankDeficiencyWarning(UserWarning):
    """Training matrix is (numerically) rank deficient or under-determined."""
