"""Spectral simulation and resolvent analysis of the damped fractional Klein-Gordon equation."""

from .errors import NumericalGuardError, SingularOperatorError, UnderResolvedError
from .spectral import (DampingProfile, Grid, SpectralField, frac_laplacian_apply, make_grid,
                       multiply_pointwise, sobolev_norm)

__version__ = "0.1.0"

__all__ = [
    "DampingProfile",
    "Grid",
    "NumericalGuardError",
    "SingularOperatorError",
    "SpectralField",
    "UnderResolvedError",
    "frac_laplacian_apply",
    "make_grid",
    "multiply_pointwise",
    "sobolev_norm",
]
