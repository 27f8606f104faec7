"""Numerical laboratory for annulus SLE(kappa, Lambda): theta-function kernels,
Coulomb gas correlators, screening partition functions, Loewner dynamics and
Monte Carlo martingale checks."""
from . import _backend
from . import cli, coulomb_gas, correlations, loewner, martingale_mc, screening, special_fn
from .correlations import BoundaryCondition
from .coulomb_gas import DoubleDivisor, ForceDivisor, SleParams
from .errors import AnnulusSLEError, NumericalError, ValidationError
from .special_fn import SeriesControl

__version__ = "0.1.0"
BACKEND = _backend.NAME

__all__ = [
    "BACKEND", "BoundaryCondition", "DoubleDivisor", "ForceDivisor", "SleParams",
    "SeriesControl", "AnnulusSLEError", "NumericalError", "ValidationError",
    "cli", "coulomb_gas", "correlations", "loewner", "martingale_mc", "screening",
    "special_fn",
]
