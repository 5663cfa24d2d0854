"""Convertibility of steering assemblages under local operations and shared randomness."""

from .assemblages import Assemblage, Povm, Scenario, family_GHZ, family_S, validate
from .conversion import decide_conversion, decide_conversion_multi, preorder_graph
from .freeness import is_free, is_free_bipartite, is_general_lhs_multi, is_losr_free_multi, is_tolhs_multi
from .functionals import epr_functional_bipartite, epr_functional_multi, evaluate, lhs_bound
from .locc import apply_1wlocc
from .monotones import epr_robustness, epr_weight, yield_monotone, yield_monotone_multi
from .sdp import DecisionSettings, SolverSettings

__version__ = "0.1.0"

__all__ = [
    "Assemblage",
    "DecisionSettings",
    "Povm",
    "Scenario",
    "SolverSettings",
    "apply_1wlocc",
    "decide_conversion",
    "decide_conversion_multi",
    "epr_functional_bipartite",
    "epr_functional_multi",
    "epr_robustness",
    "epr_weight",
    "evaluate",
    "family_GHZ",
    "family_S",
    "is_free",
    "is_free_bipartite",
    "is_general_lhs_multi",
    "is_losr_free_multi",
    "is_tolhs_multi",
    "lhs_bound",
    "preorder_graph",
    "validate",
    "yield_monotone",
    "yield_monotone_multi",
]
