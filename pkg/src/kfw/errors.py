"""Exception types raised across the package."""


class KfwError(Exception):
    """Base class for errors raised by kfw."""


class CapacityError(KfwError, ValueError):
    """Requested size exceeds a configured memory or work cap."""


class OutOfRangeError(KfwError, IndexError):
    """Argument lies beyond the range covered by precomputed tables."""


class ToleranceUnreachableError(KfwError, ValueError):
    """A certified tolerance would need a prime cutoff above the cap."""


class PreconditionError(KfwError, ValueError):
    """Inputs violate a mathematical precondition (e.g. non-coprime moduli)."""
