"""Exception types mapped to CLI exit semantics (all subclasses exit with code 2)."""


class FairtrialError(Exception):
    """Base class for all data and validation errors raised by this package."""


class FormatError(FairtrialError):
    """Malformed input text (bad delimiter, missing column, unparseable field)."""


class DuplicateKeyError(FairtrialError):
    """A key that must be unique appeared more than once."""


class CorpusError(FairtrialError):
    """Corpus-level integrity failure: empty corpus, unresolvable reference."""


class GradingError(FairtrialError):
    """Pair cannot be graded: degenerate, unknown attributes, or a combination
    the grading schema defines no category for."""


class GenerationError(FairtrialError):
    """Trial-list generation cannot proceed (e.g. no eligible speakers)."""


class ScoreError(FairtrialError):
    """Score-set problem: conflicting duplicates or missing trial scores."""


class MetricError(FairtrialError):
    """Metric computation received unusable data (e.g. an empty score side)."""
