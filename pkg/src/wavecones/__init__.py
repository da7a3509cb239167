"""Desk-scale numerical laboratory for weighted light-cone energy estimates
of the 3-D wave equation: a spherical-harmonic mode solver, exact multiplier
identity checks, weighted-norm diagnostics, exponent calculus and semilinear
lifespan experiments.
"""

__version__ = "0.1.0"

from .grid import Grid, RadialModeField, SphereQuadrature, sphere_quadrature
from .sources import SourceSpec, source_catalogue

__all__ = [
    "Grid",
    "RadialModeField",
    "SphereQuadrature",
    "SourceSpec",
    "source_catalogue",
    "sphere_quadrature",
    "__version__",
]
