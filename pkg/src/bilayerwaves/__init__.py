"""Pseudo-spectral models of internal waves in two shallow layers.

Exposes the grid/field types, the model hierarchy with a uniform
time-derivative contract, an RK4 time loop with conservation monitors, and
dispersion / residual-order analytics.
"""

__version__ = "0.1.0"

from .spectral import Field, Grid, VecField  # noqa: F401
from .params import Params, RegimeBounds  # noqa: F401
