"""Laser phase-noise spectra, self-heterodyne analysis and qubit gate errors."""

__version__ = "0.1.0"

from . import analytic, dynamics, fitting, heterodyne, spectra, synth  # noqa: E402
from .common import Averaging, ErrorEstimate, Method  # noqa: E402
from .errors import (  # noqa: E402
    ConvergenceError,
    DivergenceError,
    DomainError,
    IntegrationError,
    LaserNoiseError,
    NoSolutionError,
    NumericalError,
    QuadratureError,
    RegimeError,
    TauMaxError,
    ValidationError,
)
from .spectra import BandLimitedWhite, Composite, ServoBump, White, model_from_dict, model_to_dict  # noqa: E402

__all__ = [
    "__version__",
    "analytic",
    "dynamics",
    "fitting",
    "heterodyne",
    "spectra",
    "synth",
    "Averaging",
    "ErrorEstimate",
    "Method",
    "White",
    "BandLimitedWhite",
    "ServoBump",
    "Composite",
    "model_from_dict",
    "model_to_dict",
    "LaserNoiseError",
    "ValidationError",
    "DomainError",
    "DivergenceError",
    "NoSolutionError",
    "RegimeError",
    "NumericalError",
    "QuadratureError",
    "ConvergenceError",
    "IntegrationError",
    "TauMaxError",
]
