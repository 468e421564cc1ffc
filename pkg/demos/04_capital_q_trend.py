"""
Relaxed diagrams on capital budgeting
=====================================

Sweep the merge distance Q and watch diagram size, time and the
model-based gap move together.
"""

import time

from arbodd import dd
from arbodd.evaluation import evaluate_solution, model_gap
from arbodd.generators import CapitalBudgetingSpec, gen_capital
from arbodd.milp import solve_milp
from arbodd.nf import build_approx_nf, first_stage

inst = gen_capital(CapitalBudgetingSpec(n=18, M=4, seed=2))
rec = inst.recourse_recursion()
exact = dd.compile(rec, reduce_result=True)

print(f"{'Q':>3} {'arcs':>6} {'max width':>9} {'time s':>7} {'bound':>9} {'z(x)':>9} {'gap %':>6}")
for Q in (0, 1, 3, 5, 10):
    t0 = time.perf_counter()
    raw = dd.compile(rec, dd.Distance(Q, dd.RELAXED))
    red = dd.reduce(raw)
    model = build_approx_nf(inst, red, include_relY=True)
    res = solve_milp(model)
    secs = time.perf_counter() - t0
    z = evaluate_solution(inst, first_stage(model, res), exact).z
    print(f"{Q:>3} {red.arc_count:>6} {max(raw.widths):>9} {secs:>7.2f} {res.bound:>9.3f} {z:>9.3f} "
          f"{model_gap(res.bound, z, inst.sense):>6.2f}")
