"""Effective potential analytic continuation (EPAC) toolkit.

Real-time ``<q^2(t) q^2(0)>`` autocorrelation functions from the standard
effective potential, together with the exact eigenbasis references and the
harmonic closed forms used to compare against centroid and ring-polymer
molecular dynamics.
"""

from .errors import EpacError
from .model import PolynomialPotential, ThermoState, asymmetric_anharmonic, evaluate_potential, harmonic
from .series import CorrelationSeries

__all__ = [
    "CorrelationSeries",
    "EpacError",
    "PolynomialPotential",
    "ThermoState",
    "asymmetric_anharmonic",
    "evaluate_potential",
    "harmonic",
]

__version__ = "0.1.0"
