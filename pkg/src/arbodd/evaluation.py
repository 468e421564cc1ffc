"""Worst-case value of a fixed first-stage decision by constraint generation.

For a fixed ``x`` the adversary solves ``max_alpha min_{y in Y cap S(x)}``.
The loop alternates a subproblem (best recourse against one scenario) with a
master LP over ``(v, alpha)`` that sees every recourse found so far:

    master:  max v  s.t.  v <= c'x + xi(alpha)'(Bx x + By y^j)  for all j,
                          T alpha <= d.

Each master value is an upper bound on z(x) (min form) and each subproblem
value a lower bound; the loop stops when they meet within ``eps``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from . import dd as ddm
from .errors import DiagramMismatch, Infeasible, InfeasibleRecourse, InvalidMode, IterationCapExceeded
from .instance import ArboInstance
from .milp.model import BINARY, LE, MAX, MIN, MilpModel
from .milp.solve import solve_lp, solve_milp

EPS = 1e-6
MAX_ITER = 10**4


@dataclass
class OracleTrace:
    sense: str
    xi_hats: list = field(default_factory=list)
    y_hats: list = field(default_factory=list)
    master_values: list = field(default_factory=list)  # min form
    sub_values: list = field(default_factory=list)  # min form
    capped: bool = False

    @property
    def iterations(self):
        return list(zip(self.xi_hats, self.y_hats, self.master_values, self.sub_values))

    @property
    def lower(self) -> float:
        return max(self.sub_values)

    @property
    def upper(self) -> float:
        return self.master_values[-1]

    @property
    def z(self) -> float:
        """z(x) in the instance's own sense."""
        return -self.lower if self.sense == MAX else self.lower

    def __repr__(self):
        flag = ", capped" if self.capped else ""
        return f"OracleTrace(z={self.z:.6g}, iterations={len(self.sub_values)}{flag})"


class _MilpRecourse:
    """Recourse subproblem as a small binary program (no diagram available)."""

    def __init__(self, inst: ArboInstance, x):
        m = MilpModel("recourse")
        y = m.add_vars("y", inst.n, 0.0, 1.0, BINARY)
        for k, (a, s, r) in enumerate(zip(inst.y_G, inst.y_senses, inst.y_rhs)):
            m.add_constr(y, a, s, r, f"rel_{k}")
        allow_zero, allow_one = ddm.linking_mask(inst.linking, x, inst.n)
        for i in range(inst.n):
            if not allow_one[i]:
                m.ub[y[i]] = 0.0
            if not allow_zero[i]:
                m.lb[y[i]] = 1.0
            if m.lb[y[i]] > m.ub[y[i]]:
                raise InfeasibleRecourse("linking fixes a recourse variable both ways")
        self.model, self.y = m, y

    def __call__(self, w):
        self.model.set_objective(self.y, w, MIN)
        res = solve_milp(self.model)
        if not res.optimal:
            raise InfeasibleRecourse("no recourse is compatible with the first-stage decision")
        return res.objective, np.round(res.x[self.y]).astype(np.int64)


class _DiagramRecourse:
    def __init__(self, inst, dd, x):
        if dd.kind != ddm.EXACT:
            raise InvalidMode("evaluation needs an exact diagram")
        if dd.n != inst.n:
            raise DiagramMismatch("diagram does not match the recourse dimension")
        self.dd = dd
        self.mask = ddm.linking_mask(inst.linking, x, inst.n)

    def __call__(self, w):
        try:
            return ddm.filtered_shortest_path(self.dd, w, self.mask)
        except Infeasible as exc:
            raise InfeasibleRecourse("no recourse is compatible with the first-stage decision") from exc


def _start_alpha(xs, seed):
    rng = np.random.default_rng(seed)
    g = rng.standard_normal(xs.factor_dim)
    r = linprog(-g, A_ub=xs.T, b_ub=xs.d, bounds=[(None, None)] * xs.factor_dim, method="highs")
    if r.status != 0:
        raise InvalidMode(f"cannot pick a starting scenario: {r.message}")
    return r.x


def evaluate_solution(
    inst: ArboInstance,
    x_hat,
    recourse=None,
    *,
    eps: float = EPS,
    max_iter: int = MAX_ITER,
    seed: int = 0,
    raise_on_cap: bool = False,
    engine: str = "auto",
) -> OracleTrace:
    """Compute z(x_hat).

    ``recourse`` is an exact diagram of Y (subproblems become shortest paths)
    or ``None`` (subproblems are solved as binary programs).
    """
    x = np.asarray(x_hat, dtype=float)
    if len(x) != inst.m:
        raise ValueError(f"x has length {len(x)}, expected {inst.m}")
    if not inst.x_feasible(x):
        raise ValueError("x violates the first-stage rows")
    sub = _DiagramRecourse(inst, recourse, x) if recourse is not None else _MilpRecourse(inst, x)
    c, Bx, By = inst.min_form()
    xs = inst.xi_set
    U, off = xs.U, xs.offset
    k = xs.factor_dim
    base_w = Bx @ x

    # master LP over (v, alpha); rows grow by one cut per iteration
    mp = MilpModel("master")
    v = mp.add_var("v", -math.inf, math.inf)
    a = np.array([mp.add_var(f"alpha_{j}", -math.inf, math.inf) for j in range(k)])
    for r, (t, dv) in enumerate(zip(xs.T, xs.d)):
        mp.add_constr(a, t, LE, dv, f"xi_{r}")
    mp.set_objective([v], [1.0], MAX)

    trace = OracleTrace(inst.sense)
    alpha = _start_alpha(xs, seed)
    for _ in range(max_iter):
        xi = off + U @ alpha
        val, y = sub(By.T @ xi)
        s_val = float(c @ x + xi @ base_w + val)
        w = base_w + By @ y
        # v - (U'w)'alpha <= c'x + off'w
        mp.add_constr(np.concatenate([[v], a]), np.concatenate([[1.0], -(U.T @ w)]), LE, float(c @ x + off @ w))
        res = solve_lp(mp, engine=engine)
        if not res.optimal:
            raise InvalidMode(f"master problem ended with status {res.status}")
        m_val = float(res.objective)
        trace.xi_hats.append(xi)
        trace.y_hats.append(np.asarray(y, dtype=np.int64))
        trace.sub_values.append(s_val)
        trace.master_values.append(m_val)
        if m_val - trace.lower <= eps:
            return trace
        alpha = res.x[a]
    trace.capped = True
    msg = f"constraint generation hit {max_iter} iterations (gap {trace.upper - trace.lower:.3g})"
    if raise_on_cap:
        raise IterationCapExceeded(msg)
    warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return trace


class GapUndefinedWarning(RuntimeWarning):
    pass


def model_gap(bound: float, z: float, sense: str = MAX) -> float:
    """Percentage gap between a dual bound and the value of a solution.

    Stated so that it is nonnegative for valid bounds in either sense. When
    ``z == 0`` the ratio is undefined: the absolute difference is returned
    and a :class:`GapUndefinedWarning` is emitted.
    """
    diff = (bound - z) if sense == MAX else (z - bound)
    if z == 0:
        warnings.warn("gap undefined for z = 0; returning the absolute difference", GapUndefinedWarning, stacklevel=2)
        return float(diff)
    return float(diff / abs(z) * 100.0)
