"""Exception types shared across the package.

Every error raised on purpose by this package derives from PerpLabError,
so callers can catch one base class at API boundaries.
"""


class PerpLabError(Exception):
    """Base class for all errors raised by perplab."""


class EqualEndpoints(PerpLabError):
    """Two boundary points that must be distinct coincide."""


class SetsTooClose(PerpLabError):
    """Convex sets touch or overlap, so no common perpendicular exists."""


class EndpointInSet(PerpLabError):
    """A boundary point lies in the boundary at infinity of the convex set."""


class LatticeOverflow(PerpLabError):
    """Exact integer matrix work would exceed the safe 64-bit entry range."""


class BudgetExceeded(PerpLabError):
    """An enumeration would visit more candidates than the configured cap."""


class NoReductionRule(PerpLabError):
    """Fundamental-domain reduction is not available for this group."""


class QuadratureDiverged(PerpLabError):
    """A self-consistency check between two quadrature settings failed."""


class UnsupportedSet(PerpLabError):
    """The requested operation is not implemented for this convex set kind."""


class NotConverged(PerpLabError):
    """An iterative limit did not settle within the requested tolerance."""


class UnsupportedPotential(PerpLabError):
    """The requested operation is not implemented for this potential kind."""


class InsufficientData(PerpLabError):
    """Not enough census data to perform the requested fit or estimate."""
