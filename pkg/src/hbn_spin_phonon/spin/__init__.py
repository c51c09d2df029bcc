from .hamiltonian import Eigensystem, build_hamiltonian, diagonalize
from .operators import build_spin_operators, embed
from .transitions import (
    merge_degenerate,
    multiplicity_weights,
    secular_lines,
    total_projection_values,
    transition_lines_exact,
)

__all__ = [
    "Eigensystem",
    "build_hamiltonian",
    "build_spin_operators",
    "diagonalize",
    "embed",
    "merge_degenerate",
    "multiplicity_weights",
    "secular_lines",
    "total_projection_values",
    "transition_lines_exact",
]
