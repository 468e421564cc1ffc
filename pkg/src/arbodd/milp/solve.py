"""LP and branch-and-bound entry points.

Everything runs in minimisation form; ``max`` models are negated on the way
in and the reported objective/bound are negated back.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass

import numpy as np

from .model import BINARY, INFEASIBLE, MAX, OPTIMAL, TIME_LIMIT, UNBOUNDED, MilpModel, SolveResult
from .simplex import HighsEngine, SimplexEngine

# dense simplex above this many matrix entries is slower than HiGHS
AUTO_DENSE_LIMIT = 60_000


@dataclass
class MilpOptions:
    time_limit: float = math.inf
    abs_gap: float = 1e-6
    int_tol: float = 1e-5
    seed: int = 0
    engine: str = "auto"
    node_limit: int = 10**7
    record_events: bool = False


def _engine(model: MilpModel, which: str, c):
    rows, cols = model.num_constrs, model.num_vars
    if which == "auto":
        which = "simplex" if rows * (cols + 2 * rows) <= AUTO_DENSE_LIMIT else "highs"
    if which == "simplex":
        return SimplexEngine(c, model.matrix(dense=True), model.senses(), model.rhs())
    if which == "highs":
        return HighsEngine(c, model.matrix(), model.senses(), model.rhs())
    raise ValueError(f"unknown LP engine {which!r}")


def _signed(model):
    sgn = -1.0 if model.obj_sense == MAX else 1.0
    return sgn, sgn * model.objective_vector()


def solve_lp(model: MilpModel, engine="auto") -> SolveResult:
    """Solve the continuous relaxation of ``model``."""
    t0 = time.perf_counter()
    sgn, c = _signed(model)
    eng = _engine(model, engine, c)
    out = eng.solve(np.asarray(model.lb, float), np.asarray(model.ub, float))
    res = SolveResult(out.status, node_count=1, iterations=out.iterations)
    if out.status == OPTIMAL:
        obj = sgn * out.objective + model.obj_const
        res.objective = res.bound = obj
        res.x = out.x
        res.duals = None if out.duals is None else sgn * out.duals
        res.reduced_costs = None if out.reduced_costs is None else sgn * out.reduced_costs
    res.wall_time = time.perf_counter() - t0
    return res


def solve_milp(model: MilpModel, opts: MilpOptions = None, **kw) -> SolveResult:
    """Best-bound branch-and-bound over the binary variables.

    Branches on the most fractional binary (lowest index on ties); children
    re-solve from the parent basis when the built-in simplex is in use.
    """
    opts = opts or MilpOptions(**kw)
    t0 = time.perf_counter()
    sgn, c = _signed(model)
    eng = _engine(model, opts.engine, c)
    lb0 = np.asarray(model.lb, float)
    ub0 = np.asarray(model.ub, float)
    bins = model.binaries
    res = SolveResult(INFEASIBLE)
    nodes = 0
    iters = 0

    def lp(lb, ub, warm):
        nonlocal nodes, iters
        nodes += 1
        out = eng.solve(lb, ub, warm)
        iters += out.iterations
        return out

    def branch_var(x):
        if len(bins) == 0:
            return -1
        frac = np.abs(x[bins] - np.round(x[bins]))
        k = int(np.argmax(frac))  # argmax returns the lowest index on ties
        return int(bins[k]) if frac[k] > opts.int_tol else -1

    def finish(status, inc_obj, inc_x, bound):
        res.status = status
        res.node_count = nodes
        res.iterations = iters
        res.wall_time = time.perf_counter() - t0
        if inc_x is not None:
            x = inc_x.copy()
            x[bins] = np.round(x[bins])
            res.x = x
            res.objective = sgn * inc_obj + model.obj_const
        res.bound = sgn * bound + model.obj_const if np.isfinite(bound) else sgn * bound
        return res

    root = lp(lb0, ub0, None)
    if root.status != OPTIMAL:
        return finish(root.status, math.inf, None, math.inf if root.status == INFEASIBLE else -math.inf)

    incumbent, inc_x = math.inf, None
    heap = []
    seq = 0

    def consider(out, lb, ub):
        """Either record an integral solution or queue the node."""
        nonlocal incumbent, inc_x, seq
        if out.status != OPTIMAL or out.objective >= incumbent - opts.abs_gap:
            return
        j = branch_var(out.x)
        if j < 0:
            incumbent, inc_x = out.objective, out.x
            res.incumbents.append((nodes, sgn * incumbent + model.obj_const))
            return
        heapq.heappush(heap, (out.objective, seq, lb, ub, out.state, out.x[j], j))
        seq += 1

    consider(root, lb0, ub0)
    while heap:
        bound = heap[0][0]
        if opts.record_events:
            res.events.append((bound, incumbent))
        if bound >= incumbent - opts.abs_gap:
            break
        if time.perf_counter() - t0 > opts.time_limit or nodes >= opts.node_limit:
            status = TIME_LIMIT
            return finish(status, incumbent, inc_x, min(bound, incumbent))
        _, _, lb, ub, state, xj, j = heapq.heappop(heap)
        for val in (0.0, 1.0):
            clb, cub = lb.copy(), ub.copy()
            clb[j] = cub[j] = val
            consider(lp(clb, cub, state), clb, cub)
    if inc_x is None:
        return finish(INFEASIBLE, math.inf, None, math.inf)
    return finish(OPTIMAL, incumbent, inc_x, min(incumbent, heap[0][0]) if heap else incumbent)
