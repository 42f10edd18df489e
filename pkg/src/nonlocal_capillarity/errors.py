"""Exception types raised across the package."""


class DomainError(ValueError):
    """Argument outside the domain of an operation."""


class AccuracyError(RuntimeError):
    """A quadrature did not reach its requested tolerance."""


class NoBlowupError(ValueError):
    """The radial multiplier of a kernel has no limit 1 at the origin."""


class UnsupportedRegime(ValueError):
    """The interior angle equation is not valid for these exponents and sigma."""


class NoInteriorSolution(RuntimeError):
    """The Young deficit has the same sign at both ends of (0, pi)."""


class BracketError(RuntimeError):
    """No sign change was found for a monotone root search."""


class OverlapError(ValueError):
    """Two regions that must be disjoint overlap on a set of positive measure."""


class IndeterminateAngle(RuntimeError):
    """A mask has neither a contact line nor a sticking or detachment signature."""
