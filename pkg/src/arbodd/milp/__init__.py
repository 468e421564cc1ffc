"""Mixed-integer linear models, a built-in LP/B&B solver and LP-file I/O."""

from .external import find_external_solver, parse_solution, solve_external
from .lpfile import emit_lp_file, models_equivalent, parse_lp_file
from .model import (
    BINARY,
    CONTINUOUS,
    EQ,
    GE,
    INFEASIBLE,
    LE,
    MAX,
    MIN,
    OPTIMAL,
    TIME_LIMIT,
    UNBOUNDED,
    MilpModel,
    SolveResult,
)
from .solve import MilpOptions, solve_lp, solve_milp

__all__ = [
    "BINARY", "CONTINUOUS", "EQ", "GE", "INFEASIBLE", "LE", "MAX", "MIN", "OPTIMAL",
    "TIME_LIMIT", "UNBOUNDED", "MilpModel", "MilpOptions", "SolveResult",
    "emit_lp_file", "find_external_solver", "models_equivalent", "parse_lp_file",
    "parse_solution", "solve_external", "solve_lp", "solve_milp",
]
