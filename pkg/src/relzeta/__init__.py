"""Numerical evaluation of the linearized relativistic Boltzmann frequency multiplier."""
from .kernels import KernelConfig
from .multiplier import (MultiplierBreakdown, breakdown, default_m, tilde_zeta, zeta, zeta0,
                         zetaK, zetaL)
from .quadrature import QuadResult, QuadSpec, RegionSpec

__version__ = "0.1.0"

__all__ = ["KernelConfig", "MultiplierBreakdown", "QuadResult", "QuadSpec", "RegionSpec",
           "breakdown", "default_m", "tilde_zeta", "zeta", "zeta0", "zetaK", "zetaL"]
