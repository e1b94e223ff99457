"""Dual *-Hopf algebra pricing: finite-group kernel, Quadratic Gauss and Linear Dirac models."""
from . import algebra, dirac, gauss, pricing, quadrature
from .errors import HopfPriceError, InputError, ModelError

__all__ = ["algebra", "dirac", "gauss", "pricing", "quadrature", "HopfPriceError", "InputError", "ModelError"]
__version__ = "0.1.0"
