"""Exception types shared across the package."""


class SpecshiftError(Exception):
    """Base class for all library errors."""


class ConfigError(SpecshiftError):
    """Invalid experiment configuration or command-line usage."""


class NonFinite(SpecshiftError):
    """Input contains NaN or infinite entries."""


class DomainError(SpecshiftError):
    """A scalar function was evaluated outside its domain, or input data is
    structurally unusable (e.g. a matrix file that is not Hermitian)."""


class ConvergenceFailure(SpecshiftError):
    """A dense eigenroutine failed to meet its accuracy contract."""


class DegeneratePair(SpecshiftError):
    """Operator pair too close together to define an increment ratio."""


class BadInterval(SpecshiftError):
    """Interval endpoints are not finite, not ordered, or the grid is too small."""


class BadParams(SpecshiftError):
    """Catalog function parameters are malformed."""


class UnknownFunction(SpecshiftError):
    """Catalog function id is not recognised."""


class RefinementOverflow(SpecshiftError):
    """Segment refinement hit the subdivision cap; the function increment is
    effectively discontinuous along the path at working precision."""


class PreconditionViolated(SpecshiftError):
    """Operation precondition not met."""


class DegenerateIncrement(SpecshiftError):
    """A function increment vanishes where a nonzero value is required."""


class InvariantViolation(SpecshiftError):
    """A stated invariant failed to hold on constructed data."""
