"""
Branch and bound and the LP file format
=======================================

A small mixed model solved by the built-in solver, written out as an LP
file and read back.
"""

from arbodd.milp import BINARY, EQ, GE, LE, MAX, MilpModel, emit_lp_file, parse_lp_file, solve_lp, solve_milp

m = MilpModel("demo")
x = m.add_vars("x", 3, 0, 1, BINARY)
z = m.add_var("z", -2.5, 4)
m.add_constr([x[0], x[1], x[2]], [3, -2, 1.5], LE, 4, "cap")
m.add_constr([x[0], z], [1, 1], GE, 1, "cover")
m.add_constr([x[1], x[2]], [1, 1], EQ, 1, "pick")
m.set_objective([x[0], x[1], x[2], z], [5, -1, 2, 0.5], MAX, 3)

lp = solve_lp(m)
print("LP relaxation:", lp.objective, lp.x)

res = solve_milp(m, record_events=True)
print(res.status, res.objective, res.x, "nodes:", res.node_count)
print("incumbents:", res.incumbents)

text = emit_lp_file(m)
print(text)
back = parse_lp_file(text)
print("after round trip:", solve_milp(back).objective)
