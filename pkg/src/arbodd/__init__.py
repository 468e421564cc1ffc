"""Decision-diagram reformulations for adaptive robust binary optimisation."""

from . import dd, milp
from .dd import Distance, Exact, Width, compile, enumerate_paths, filtered_shortest_path, reduce
from .evaluation import OracleTrace, evaluate_solution, model_gap
from .generators import AssignmentSpec, CapitalBudgetingSpec, gen_assignment, gen_capital
from .instance import ArboInstance, LinkingSets, UncertaintySet, lift_to_selective, load, save
from .kadapt import build_kadapt, build_kadapt_assignment, build_kadapt_capital
from .nf import DiagramBlock, build_approx_nf, build_exact_nf, build_integral, build_multi_nf, dualize_uncertainty
from .recursions import assignment_recursion, knapsack_recursion, rows_recursion

__version__ = "0.1.0"
