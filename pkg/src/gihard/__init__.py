"""CFI graph pairs from group CSPs, with linear-algebraic and polynomial-calculus isomorphism tests.

The submodules are the real API; the most common entry points are re-exported here.
"""

from __future__ import annotations

from .cfi import ColoredGraph, GraphPair, brute_force_isomorphic, cfi_pair, extended_pair, or_pair
from .csp import CSPInstance, ExtendedGroupCSP, GroupCSP, boolean_tseitin, brute_force_solve, tseitin
from .errors import BudgetError, DomainError, GiHardError, PreconditionError, VerificationError
from .graphcore import DiGraph, UGraph, named_graph
from .group import FiniteAbelianGroup
from .linsys import combine_pq, lcsp_system, liso_system, solve_integer, solve_mod_p, verify
from .pc import PolySystem, degree_d_derivable, min_refutation_degree, p_csp, p_iso
from .witness import psi, theorem41_pipeline
from .wl import wl_distinguish, wl_report

__version__ = "0.1.0"

__all__ = [
    "BudgetError",
    "CSPInstance",
    "ColoredGraph",
    "DiGraph",
    "DomainError",
    "ExtendedGroupCSP",
    "FiniteAbelianGroup",
    "GiHardError",
    "GraphPair",
    "GroupCSP",
    "PolySystem",
    "PreconditionError",
    "UGraph",
    "VerificationError",
    "boolean_tseitin",
    "brute_force_isomorphic",
    "brute_force_solve",
    "cfi_pair",
    "combine_pq",
    "degree_d_derivable",
    "extended_pair",
    "lcsp_system",
    "liso_system",
    "min_refutation_degree",
    "named_graph",
    "or_pair",
    "p_csp",
    "p_iso",
    "psi",
    "solve_integer",
    "solve_mod_p",
    "theorem41_pipeline",
    "tseitin",
    "verify",
    "wl_distinguish",
    "wl_report",
]
