"""Exception hierarchy shared across the package."""


class FaceSolveError(Exception):
    """Base class for all package errors."""


class ParseError(FaceSolveError):
    """A document does not conform to its schema; the message names the path."""


class ValidationError(FaceSolveError):
    """A parsed object violates an invariant (dimensions, bounds, finiteness)."""
