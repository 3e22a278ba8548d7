"""Exception types shared across the package.

Validation failures map to CLI exit code 1, I/O failures (plain OSError
and friends) to exit code 2.
"""


class ValidationError(ValueError):
    """Input violates a documented precondition or format contract."""


class SingleClassError(ValidationError):
    """Score/label vector contains only one class; ROC-AUC is undefined."""


class CorpusError(ValidationError):
    """Corpus ingestion failed (bad manifest, annotation, or audio file)."""


class InfeasiblePackingError(ValidationError):
    """Requested synthetic events cannot fit in the recording duration."""
