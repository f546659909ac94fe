"""Bi-criteria optimal control of a spatial capital-accumulation model.

Two criteria are traded off: discounted utility of consumption (``J1``) and
aggregate capital left at the horizon (``J2``).  The package offers weighted
scalarization by gradient ascent, an epsilon-constraint solver, the aggregate
bang-bang reduction for linear utility, weighted goal programming and
brute-force oracles for checking all of them.
"""

__version__ = "0.1.0"

from .aggregate import AggregateSpec, BangBangSolution, dp_oracle, reduce_to_aggregate, \
    solve_bang_bang
from .ascent import AscentConfig, AscentResult, ParetoFrontier, solve_model_I, \
    trace_pareto_frontier
from .constrained import EpsConstraintConfig, EpsConstraintResult, consistency_with_frontier, \
    solve_model_II
from .goal import GpSpec, discretize_gp, restore_efficiency, solve_model_III
from .io import load_preset
from .model import CriterionPair, Field, Grids, ModelSpec, make_grids, validate_spec
from .oracle import ControlClass, certify_solver_point, enumerate_criteria, nondominated_set
from .pde import SchemeConfig, evaluate_criteria, simulate_capital
from .simplex import LpInstance, LpSolution, solve_lp

__all__ = [
    "AggregateSpec", "AscentConfig", "AscentResult", "BangBangSolution", "ControlClass",
    "CriterionPair", "EpsConstraintConfig", "EpsConstraintResult", "Field", "GpSpec", "Grids",
    "LpInstance", "LpSolution", "ModelSpec", "ParetoFrontier", "SchemeConfig",
    "certify_solver_point", "consistency_with_frontier", "discretize_gp", "dp_oracle",
    "enumerate_criteria", "evaluate_criteria", "load_preset", "make_grids", "nondominated_set",
    "reduce_to_aggregate", "restore_efficiency", "simulate_capital", "solve_bang_bang",
    "solve_lp", "solve_model_I", "solve_model_II", "solve_model_III", "trace_pareto_frontier",
    "validate_spec",
]
