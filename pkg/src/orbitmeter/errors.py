"""Exception hierarchy shared by all orbitmeter modules.

Every operation distinguishes between malformed input values, violated
call contracts, structurally unusable objects, and regime/resource
problems; the CLI maps all of these to exit code 1.
"""


class OrbitmeterError(Exception):
    """Base class for all orbitmeter errors."""


class InputError(OrbitmeterError):
    """A value is malformed (symbol out of range, bad matrix entry, ...)."""


class PreconditionError(OrbitmeterError):
    """The caller violated an operation contract (horizon too short, ...)."""


class StructuralError(OrbitmeterError):
    """The object cannot support the operation (non-aperiodic chain,
    reducible transition matrix, non-disjoint partition, ...)."""


class DomainError(OrbitmeterError):
    """Parameters lie outside the regime the formula is valid in."""


class ResourceError(OrbitmeterError):
    """A configured size cap would be exceeded."""
