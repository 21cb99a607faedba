"""Exception types shared across the package."""


class ProxilabError(Exception):
    """Base class for all package-specific failures."""


class DimensionMismatchError(ProxilabError, ValueError):
    """Operands live in spaces of different dimension."""


class InvalidSpecError(ProxilabError, ValueError):
    """A declarative spec (region, mapping, scenario) violates its invariants."""


class UnsupportedCapabilityError(ProxilabError, ValueError):
    """Requested norm/shape combination has no implemented projection."""


class ConvergenceFailureError(ProxilabError, RuntimeError):
    """An iterative geometry routine exhausted its iteration cap."""

    def __init__(self, message, last_gap=None):
        super().__init__(message)
        self.last_gap = last_gap


class SamplingFailureError(ProxilabError, RuntimeError):
    """Rejection sampling exceeded its rejection budget (degenerate region)."""


class MembershipError(ProxilabError, ValueError):
    """A point is not inside the region claimed for it."""


class ImageEscapeError(ProxilabError, RuntimeError):
    """An iterate left every region of the partition.

    Carries the offending step index, the escaped point and, when raised
    during iteration, the orbit built so far.
    """

    def __init__(self, message, step, point, partial_orbit=None):
        super().__init__(message)
        self.step = step
        self.point = point
        self.partial_orbit = partial_orbit


class InconclusiveError(ProxilabError, RuntimeError):
    """A verdict could not be established from the available data."""
