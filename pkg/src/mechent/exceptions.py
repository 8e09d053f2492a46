"""Exception hierarchy for mechent."""


class MechentError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(MechentError, ValueError):
    """Invalid or non-finite input parameter."""


class SingularOperatingPointError(MechentError):
    """The steady-state cavity amplitude has a vanishing denominator."""


class SingularEliminationError(MechentError):
    """Adiabatic elimination is singular (kappa1*kappa2/4 == gain**2)."""


class UnstableSystemError(MechentError):
    """The drift matrix is not strictly stable; no steady state exists."""


class NumericalDegeneracyError(MechentError):
    """A linear system that should be regular turned out singular."""


class NearMarginalError(NumericalDegeneracyError):
    """Cramer determinant too small to trust; use the generic solver."""


class PhysicalityError(MechentError):
    """Covariance or diffusion matrix violates a physical constraint."""

    def __init__(self, message, **values):
        super().__init__(message)
        self.values = values


class NoFeasibleRegionError(MechentError):
    """No stable point was found in an optimisation box."""


class ConfigError(MechentError, ValueError):
    """Malformed parameter/config file."""
