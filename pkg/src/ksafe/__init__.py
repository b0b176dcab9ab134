"""Differential operators with Sobolev-graded coefficients on flat tori.

The package has a symbolic layer (grades, coefficients, operators) that
tracks which Sobolev regularity each coefficient needs, and a Fourier-spectral
layer (grid, spectral, parametrix) that measures the corresponding operator
norms, elliptic constants and Fredholm indices numerically.
"""

from .coefficients import Coefficient, GradeError
from .grades import INF
from .grid import SpectralField, TorusGrid, random_field, sobolev_norm
from .operators import (
    DiffOp,
    compose,
    divergence_form_laplacian,
    formal_adjoint,
    is_elliptic,
    is_safe,
    schroedinger_like,
)
from .spectral import apply, index_report, operator_matrix, operator_norm_estimate

__version__ = "0.1.0"

__all__ = [
    "INF",
    "Coefficient",
    "DiffOp",
    "GradeError",
    "SpectralField",
    "TorusGrid",
    "apply",
    "compose",
    "divergence_form_laplacian",
    "formal_adjoint",
    "index_report",
    "is_elliptic",
    "is_safe",
    "operator_matrix",
    "operator_norm_estimate",
    "random_field",
    "schroedinger_like",
    "sobolev_norm",
]
