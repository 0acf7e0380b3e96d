"""Exception types shared across the package.

Every error raised by treematch derives from TreematchError so callers can
catch the whole family with one clause.  The CLI maps subfamilies to exit
codes (see cli.py).
"""


class TreematchError(Exception):
    """Base class for all treematch errors."""


class CycleDetectedError(TreematchError):
    """Ancestor iteration never reaches the root."""


class MultipleRootsError(TreematchError):
    """More than one node carries the root sentinel ancestor."""


class InvalidMatchingError(TreematchError):
    """A matching violates the strict two-sided ancestor ordering."""


class InstanceTooLargeError(TreematchError):
    """Brute-force enumeration refused: instance exceeds the size guard."""


class EmptyCorpusError(TreematchError):
    """An operation that needs at least one tree received none."""


class ArityMismatchError(TreematchError):
    """Label tuple arity differs from what a weight function expects."""


class RetriesExhaustedError(TreematchError):
    """Rejection sampling gave up.  ``attempts`` records how many were made."""

    def __init__(self, message, attempts):
        super().__init__(message)
        self.attempts = attempts


class PathNotChainError(TreematchError):
    """A supposed tree path is not a strictly descending ancestor chain."""


class DomainError(TreematchError, ValueError):
    """A numeric parameter lies outside its documented domain."""


class DegenerateRowError(TreematchError):
    """A similarity row is all zero, so the distance normalizer is undefined."""


class DimsTooLargeError(TreematchError):
    """Requested embedding dimension is not below the number of points."""


class EmptyInputError(TreematchError):
    """An aggregation over sequences received an empty collection."""


class ParseError(TreematchError):
    """A text input (tree file, config, matrix, telemetry) failed to parse.

    ``location`` is a human-readable position such as ``"foo.tsv line 12"``.
    """

    def __init__(self, message, location=None):
        super().__init__(message if location is None else f"{location}: {message}")
        self.location = location


class DataIntegrityError(TreematchError):
    """Telemetry repairs were needed and strict mode forbids them."""
