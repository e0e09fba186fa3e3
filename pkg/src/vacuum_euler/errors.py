"""Exception hierarchy shared by all modules."""


class VacuumEulerError(Exception):
    """Base class for errors raised by this package."""


class ParameterError(VacuumEulerError, ValueError):
    """Gas parameters or function arguments outside their admissible range."""


class NumericalError(VacuumEulerError, RuntimeError):
    """A quadrature or root solve failed to reach its tolerance."""


class IntegrationError(VacuumEulerError, RuntimeError):
    """The ansatz ODE integration stopped before ``t_end``.

    ``last_time`` holds the last successfully reached time.
    """

    def __init__(self, message, last_time=None):
        super().__init__(message)
        self.last_time = last_time


class HorizonError(VacuumEulerError, RuntimeError):
    """The integration horizon is too short to resolve the requested feature."""


class ConfigurationError(VacuumEulerError, ValueError):
    """Invalid grid, perturbation or run configuration.

    ``key`` names the offending configuration entry when there is one.
    """

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class PerturbationTooLargeError(ConfigurationError):
    """Initial perturbation destroys monotonicity of the flow map."""


class SteppingError(VacuumEulerError, RuntimeError):
    """Flow map lost monotonicity (eta_x <= 0) during time stepping.

    Carries the time ``t`` and the first offending cell index ``index``.
    """

    def __init__(self, message, t=None, index=None):
        super().__init__(message)
        self.t = t
        self.index = index


class FitError(VacuumEulerError, ValueError):
    """Too few or invalid samples for a power-law fit."""
