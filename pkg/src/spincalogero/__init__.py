"""Dynamical r-matrices, spin Calogero flows and their reduction checks."""

from .dynamics import IntegratorConfig, Trajectory, conservation_report, integrate, vector_field
from .errors import (
    ConfigError,
    ConstraintError,
    DegenerateElementError,
    DimensionMismatchError,
    DomainError,
    SpinCalogeroError,
    UnsupportedAlgebraError,
)
from .lie import LieAlgebra, SubalgebraChain, build_algebra, parse_descriptor
from .phase import PhasePoint, hamiltonian, momentum_map, poisson_bracket, quasi_lax
from .reduction import map_m, map_m_inverse, solve_constraint, two_form_match, weyl_identify
from .rmatrix import CartanRMatrix, cdybe_residual, dirac_reduce, nonabelian_extend
from .suites import VerificationReport, run_reduce_check, run_verify

__version__ = "0.1.0"
