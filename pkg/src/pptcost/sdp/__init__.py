"""Dense block SDP programs and an interior-point solver."""

from .program import (
    Block,
    ConicProgram,
    ProgramBuilder,
    Term,
    dual_matrix,
    embed_complex,
    hermitian_basis,
    trace_norm_program,
)
from .solver import ConicSolution, SolverConfig, solve
from .standard_form import group_counts, matrix_equation_count, standard_form

__all__ = [
    "Block",
    "ConicProgram",
    "ConicSolution",
    "ProgramBuilder",
    "SolverConfig",
    "Term",
    "dual_matrix",
    "embed_complex",
    "hermitian_basis",
    "solve",
    "standard_form",
    "group_counts",
    "matrix_equation_count",
    "trace_norm_program",
]
