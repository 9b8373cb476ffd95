"""Singular values, canonical expansion and Borel-summed perturbation theory
for PT-symmetric oscillators -Δ + x² + igW(x) in a truncated Hermite basis."""

from .basis import (
    BasisTruncation,
    MultiIndex,
    degeneracy,
    enumerate_basis,
    h0_energy,
    ph0_energy,
)
from .borel import BorelResult, borel_sum, borel_transform, pade_continue
from .linalg import SpectralDecomposition, eig_general, eig_hermitian, eigvec_inverse_iteration
from .operators import (
    OperatorMatrix,
    assemble_h,
    assemble_h0,
    assemble_parity,
    assemble_q,
    assemble_q_prime,
    assemble_w,
    position_matrix_1d,
)
from .perturbation import PowerSeries, coefficient_growth_fit, rs_coefficients
from .potential import PolynomialPotential, evaluate, parse_potential
from .verify import VerificationReport, convergence_study

__version__ = "0.1.0"

__all__ = [
    "BasisTruncation",
    "BorelResult",
    "MultiIndex",
    "OperatorMatrix",
    "PolynomialPotential",
    "PowerSeries",
    "SpectralDecomposition",
    "VerificationReport",
    "assemble_h",
    "assemble_h0",
    "assemble_parity",
    "assemble_q",
    "assemble_q_prime",
    "assemble_w",
    "borel_sum",
    "borel_transform",
    "coefficient_growth_fit",
    "convergence_study",
    "degeneracy",
    "eig_general",
    "eig_hermitian",
    "eigvec_inverse_iteration",
    "enumerate_basis",
    "evaluate",
    "h0_energy",
    "pade_continue",
    "parse_potential",
    "ph0_energy",
    "position_matrix_1d",
    "rs_coefficients",
]
