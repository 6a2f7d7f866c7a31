"""Wick-Ito calculus for stationary-increment Gaussian processes via chaos expansions."""

__version__ = "0.1.0"

from .chaos import ChaosVector, dual_norm, norm, pairing, vage_constant, wick, wick_exp, wiener_norm
from .errors import AccuracyError, ParameterError
from .multi_index import MultiIndex
from .process import ProcessModel, TimeGrid
from .spectral import SpectralDensity, parse_preset, preset

__all__ = [
    "AccuracyError",
    "ChaosVector",
    "MultiIndex",
    "ParameterError",
    "ProcessModel",
    "SpectralDensity",
    "TimeGrid",
    "__version__",
    "dual_norm",
    "norm",
    "pairing",
    "parse_preset",
    "preset",
    "vage_constant",
    "wick",
    "wick_exp",
    "wiener_norm",
]
