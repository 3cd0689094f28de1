"""Exception types shared across the package."""


class FacecovError(Exception):
    """Base class for all errors raised by this package."""


class InputError(FacecovError, ValueError):
    """Invalid data passed to an operation (non-finite entries, bad shapes, ...)."""


class ContractError(FacecovError, ValueError):
    """An argument violates a documented precondition (e.g. symmetry)."""


class ConfigError(FacecovError, ValueError):
    """Invalid configuration: knots, orders, sizes, campaign settings."""


class SingularityError(FacecovError, ValueError):
    """A matrix that must be positive definite is numerically singular."""


class DegenerateSmootherError(FacecovError, ValueError):
    """The GCV denominator vanished: effective dof reached the sample size."""


class FacecovWarning(UserWarning):
    """Non-fatal numerical fallback (ridge jitter, clamped variance, ...)."""
