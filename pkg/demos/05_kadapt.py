"""
K-adaptability as a primal baseline
===================================

K pre-committed plans give lower bounds (max form) that climb towards the
exact optimum as K grows.
"""

from arbodd import dd
from arbodd.generators import CapitalBudgetingSpec, gen_capital
from arbodd.kadapt import build_kadapt_capital
from arbodd.milp import solve_milp
from arbodd.nf import build_exact_nf

inst = gen_capital(CapitalBudgetingSpec(n=6, M=2, seed=0))
exact = solve_milp(build_exact_nf(inst, dd.compile(inst.recourse_recursion(), reduce_result=True)))
print("exact optimum:", round(exact.objective, 4))

for K in (1, 2, 3):
    km = build_kadapt_capital(inst, K, symmetry_breaking=True)
    res = solve_milp(km.model)
    print(f"K={K}: value {res.objective:.4f}, nodes {res.node_count}, plans")
    print(km.plans(res))
