"""Numerical models of Toeplitz operators on the Fock space F_alpha^p (one variable)."""

from .core import (
    CoeffVector,
    DegenerateInputError,
    GridField,
    QuadratureGrid,
    TruncationParams,
    evaluate,
    evaluate_weighted,
    fock_norm,
    inner_product,
    kernel_coeffs,
    kernel_tail,
    project,
    quadrature_grid,
)
from .operators import (
    OperatorMatrix,
    berezin,
    op_norm_2,
    op_norm_p_lower,
    rank_one,
    restricted_norm,
    toeplitz_from_measure,
    toeplitz_from_symbol,
    weighted_shift,
)
from .symbols import (
    BallIndicator,
    GaussianSum,
    GeneralizedGaussian,
    GridSampled,
    Lattice,
    Lebesgue,
    PointMasses,
    RadialProfile,
    heat_transform,
    q_beta,
    shift_symbol,
)

__version__ = "0.1.0"
