"""Shared exception types."""


class LicqFailure(Exception):
    """Active constraint rows are linearly dependent; candidate set has no unique law."""


class SizeLimit(Exception):
    """An offline size cap (constraint count, region count, byte budget) was exceeded."""


class EmptySolution(Exception):
    """No full-dimensional critical region exists over the parameter set."""


class OracleError(Exception):
    """Brute-force reference solve could not certify optimality or infeasibility."""


class NameCollision(Exception):
    """Two user symbols sanitize to the same C identifier and cannot be disambiguated."""


class UnsupportedName(Exception):
    """A user symbol has no usable characters left after sanitization."""
