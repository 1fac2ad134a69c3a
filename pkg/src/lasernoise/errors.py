"""Exception hierarchy shared by all modules."""


class LaserNoiseError(Exception):
    """Base class for library errors."""


class ValidationError(LaserNoiseError, ValueError):
    """Invalid model, config or input data."""


class DomainError(LaserNoiseError, ValueError):
    """Function evaluated outside its domain (e.g. S_phi at f = 0)."""


class DivergenceError(LaserNoiseError, ArithmeticError):
    """A requested integral diverges for the given model."""


class NoSolutionError(LaserNoiseError, ArithmeticError):
    """A root-finding problem has no solution in the admissible range."""


class RegimeError(LaserNoiseError, ValueError):
    """An approximation is requested outside its regime of validity."""


class NumericalError(LaserNoiseError, ArithmeticError):
    """Quadrature, integration or fitting failed to converge."""


class QuadratureError(NumericalError):
    """Adaptive quadrature did not reach the requested tolerance."""


class ConvergenceError(NumericalError):
    """Iterative fit or solver did not converge."""


class IntegrationError(NumericalError):
    """ODE propagation failed (step failure or norm drift)."""

    def __init__(self, message, trial=None):
        super().__init__(message if trial is None else f"trial {trial}: {message}")
        self.trial = trial


class TauMaxError(NumericalError):
    """Autocorrelation has not decayed by the requested ``tau_max``."""
