"""Solvers for coalition structure formation in characteristic function games."""

from .baselines import SaParams, simulated_annealing
from .core import (AnytimeTrace, CharacteristicFunction, Coalition, CoalitionStructure,
                   PartialStructure, bell, brute_force_optimum, canonicalize, coalition_index,
                   coalition_members, cs_value, enumerate_structures, stirling)
from .exact import BoundedResult, DpTables, dp_solve, sandholm_anytime
from .instances import gen_normal, gen_uniform, read_instance, write_instance
from .neighborhood import OperatorKind, apply_operator, neighborhood, refinements
from .search import GraspParams, SolverResult, construct, grasp_csf, local_search

__version__ = "0.1.0"
