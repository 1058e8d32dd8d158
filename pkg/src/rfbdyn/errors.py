"""Exception types shared across the package."""


class DomainError(ValueError):
    """A quantity left the open domain where a formula is defined
    (e.g. a concentration at or beyond the logarithmic singularity)."""


class ConfigError(ValueError):
    """Configuration file could not be parsed or failed validation."""


class NumericalBlowupError(RuntimeError):
    """A state component became non-finite after an integration step."""


class NoDischargeError(RuntimeError):
    """The current never rose above the arming threshold, so no
    discharge end can be assigned."""


class UnclassifiableError(RuntimeError):
    """A trajectory cannot be assigned a transient-case label."""


class NoBifurcationError(RuntimeError):
    """The characteristic-cubic discriminant does not change sign on
    the requested scan range."""


class EmptyBoundaryError(RuntimeError):
    """No column of the sweep grid straddles the requested consumption
    level, so no boundary polyline exists."""


class CalibrationMismatchError(RuntimeError):
    """Forward verification of a calibrated parameter missed its target
    by more than the allowed tolerance."""
