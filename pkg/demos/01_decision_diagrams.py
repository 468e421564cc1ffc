"""
Decision diagrams for a knapsack set
====================================

Compile, reduce, relax and restrict a diagram, then run a filtered
shortest path over it.
"""

import numpy as np

from arbodd import dd
from arbodd.instance import LinkingSets
from arbodd.recursions import knapsack_recursion

# y1 + y2 + 2 y3 + 2 y4 + 3 y5 <= 4
rec = knapsack_recursion([1, 1, 2, 2, 3], 4)
raw = dd.compile(rec)
red = dd.reduce(raw)
print("unreduced:", raw.stats())
print("reduced:  ", red.stats())
print("paths:", dd.count_paths(red))

# one-arcs per layer, 1-based, in the layer-major arc order
print([[int(a) + 1 for a in red.one_arcs(i)] for i in range(red.n)])

# %%
# Relaxed diagrams keep every feasible vector, restricted ones drop some.
for Q in (0, 1, 2):
    lo = dd.compile(rec, dd.Distance(Q, dd.RELAXED), reduce_result=True)
    hi = dd.compile(rec, dd.Distance(Q, dd.RESTRICTED), reduce_result=True)
    print(f"Q={Q}: relaxed {dd.count_paths(lo)} paths, restricted {dd.count_paths(hi)} paths")

w1 = dd.compile(rec, dd.Width(1, dd.RELAXED))
print("width-1 relaxation:", w1.widths, dd.count_paths(w1), "paths")

# %%
# Shortest path with y_i <= x_i on the first two items and x = (0, 1, 1, 1, 1)
w = np.array([-1.0, -1.0, -3.0, -2.0, -4.0])
link = LinkingSets(u1=[(0, 0), (1, 1)])
mask = dd.linking_mask(link, np.array([0, 1, 1, 1, 1]), 5)
print(dd.filtered_shortest_path(red, w, mask))

print(red.dump())
