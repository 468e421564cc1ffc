"""Network-flow MILP formulations built from decision diagrams.

Every builder returns a :class:`MilpModel` whose objective is stated in the
instance's own sense (max instances produce max models). Internally the
inner worst case is always dualised in min form:

    max_{alpha : T alpha <= d} (offset + U alpha)'w
        = offset'w + min { d'lam : T'lam = U'w, lam >= 0 },

with ``w = Bx x + By y`` the min-form uncertain coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import dd as ddm
from .errors import DiagramMismatch, InvalidMode, OverlappingVariableMismatch
from .instance import FACTOR_BOX, ArboInstance
from .milp.model import BINARY, EQ, GE, LE, MAX, MIN, MilpModel
from .recursions import KnapsackRecursion, RowsRecursion

_TOL = 1e-12


def _checked(inst: ArboInstance):
    xs = inst.xi_set
    if not getattr(xs, "_bounded_ok", False):
        xs.check_bounded()
        xs._bounded_ok = True


class _Builder:
    """Accumulates a min-form objective while rows are added."""

    def __init__(self, inst: ArboInstance, name: str):
        _checked(inst)
        self.inst = inst
        self.model = MilpModel(name)
        self.obj: dict[int, float] = {}
        self.const = 0.0
        c, self.Bx, self.By = inst.min_form()
        self.x = self.model.add_vars("x", inst.m, 0.0, 1.0, BINARY)
        self.y = self.model.add_vars("y", inst.n, 0.0, 1.0)
        self.add_obj(self.x, c)

    def add_obj(self, idx, val):
        for i, v in zip(np.asarray(idx).ravel(), np.asarray(val, dtype=float).ravel()):
            if v != 0.0:
                self.obj[int(i)] = self.obj.get(int(i), 0.0) + float(v)

    def first_stage_rows(self):
        inst, mdl = self.inst, self.model
        for k, (a, s, r) in enumerate(zip(inst.x_A, inst.x_senses, inst.x_rhs)):
            mdl.add_constr(self.x, a, s, r, f"xrow_{k}")

    def linking_rows(self):
        for i, j, s in self.inst.linking.rows():
            self.model.add_constr([self.y[i], self.x[j]], [1.0, -1.0], s, 0.0, f"link_{i}_{j}")

    def rel_rows(self, prefix="rel"):
        inst = self.inst
        for k, (a, s, r) in enumerate(zip(inst.y_G, inst.y_senses, inst.y_rhs)):
            self.model.add_constr(self.y, a, s, r, f"{prefix}_{k}")

    def finish(self) -> MilpModel:
        idx = np.array(sorted(self.obj), dtype=np.int64)
        val = np.array([self.obj[i] for i in idx])
        if self.inst.sense == MAX:
            self.model.set_objective(idx, -val, MAX, -self.const)
        else:
            self.model.set_objective(idx, val, MIN, self.const)
        return self.model


# ---------------------------------------------------------------------------
def dualize_uncertainty(b: _Builder, y_vars=None, x_vars=None):
    """Add dual multipliers of the inner worst case; returns their indices.

    ``y_vars``/``x_vars`` default to the builder's y and x blocks; callers
    may pass other columns carrying the same coefficients (the K-adaptable
    model passes aggregated policy columns).
    """
    inst, mdl = b.inst, b.model
    xs = inst.xi_set
    y_vars = b.y if y_vars is None else y_vars
    x_vars = b.x if x_vars is None else x_vars
    T, d, U = xs.T, xs.d, xs.U
    if xs.form == FACTOR_BOX:
        M = xs.factor_dim
        lam = np.concatenate([mdl.add_vars("lam1", M), mdl.add_vars("lam2", M)])
    else:
        lam = mdl.add_vars("lam", T.shape[0])
    # T'lam - U'(Bx x + By y) = 0, one row per factor
    Gx = U.T @ b.Bx
    Gy = U.T @ b.By
    for j in range(xs.factor_dim):
        idx = np.concatenate([lam, x_vars, y_vars])
        val = np.concatenate([T[:, j], -Gx[j], -Gy[j]])
        mdl.add_constr(idx, val, EQ, 0.0, f"dual_{j}")
    b.add_obj(lam, d)
    # offset'w
    b.add_obj(x_vars, xs.offset @ b.Bx)
    b.add_obj(y_vars, xs.offset @ b.By)
    return lam


def flow_block(mdl: MilpModel, dd: ddm.DecisionDiagram, y_vars, tag="z"):
    """Flow conservation on ``dd`` plus ``y_i = sum of layer-i one-arc flows``."""
    if dd.n != len(y_vars):
        raise DiagramMismatch(f"diagram has {dd.n} layers but {len(y_vars)} variables are channelled")
    z = mdl.add_vars(tag, dd.arc_count, 0.0, np.inf)
    A = dd.incidence().tocsr()
    for v in range(dd.node_count):
        lo, hi = A.indptr[v], A.indptr[v + 1]
        rhs = -1.0 if v == dd.root else (1.0 if v == dd.terminal else 0.0)
        mdl.add_constr(z[A.indices[lo:hi]], A.data[lo:hi], EQ, rhs, f"{tag}_flow_{v}")
    for i in range(dd.n):
        ones = dd.one_arcs(i)
        mdl.add_constr(
            np.concatenate([[y_vars[i]], z[ones]]),
            np.concatenate([[1.0], -np.ones(len(ones))]),
            EQ,
            0.0,
            f"{tag}_chan_{i}",
        )
    return z


# ---------------------------------------------------------------------------
def _single(inst, dd, name, include_relY):
    if dd.n != inst.n:
        raise DiagramMismatch(f"diagram has {dd.n} layers, instance has {inst.n} recourse variables")
    b = _Builder(inst, name)
    flow_block(b.model, dd, b.y)
    dualize_uncertainty(b)
    b.linking_rows()
    b.first_stage_rows()
    if include_relY:
        b.rel_rows()
    return b.finish()


def build_exact_nf(inst: ArboInstance, dd: ddm.DecisionDiagram) -> MilpModel:
    """Exact reformulation from a diagram whose paths are exactly Y."""
    if dd.kind != ddm.EXACT:
        raise InvalidMode(f"exact model needs an exact diagram, got {dd.kind}")
    return _single(inst, dd, "exact_nf", False)


def build_approx_nf(inst: ArboInstance, dd: ddm.DecisionDiagram, include_relY: bool = False) -> MilpModel:
    """Restricted diagram: primal model. Relaxed diagram: dual-bounding model.

    ``include_relY`` adds the continuous recourse rows and is allowed only
    for relaxed diagrams.
    """
    if dd.kind not in (ddm.RESTRICTED, ddm.RELAXED):
        raise InvalidMode(f"approximate model needs a restricted or relaxed diagram, got {dd.kind}")
    if include_relY and dd.kind != ddm.RELAXED:
        raise InvalidMode("continuous recourse rows are only added to relaxed models")
    return _single(inst, dd, f"{dd.kind}_nf", include_relY)


@dataclass
class DiagramBlock:
    """A diagram over the recourse variables touched by some rows of Y.

    ``support`` lists the global y indices of the diagram layers in order;
    by default it is every variable with a nonzero coefficient in ``rows``.
    """

    rows: Sequence[int]
    dd: ddm.DecisionDiagram
    support: Optional[Sequence[int]] = None


def row_support(inst: ArboInstance, rows) -> list[int]:
    G = inst.y_G[list(rows)]
    return [i for i in range(inst.n) if np.any(np.abs(G[:, i]) > _TOL)]


def build_multi_nf(inst: ArboInstance, diagrams: Sequence[DiagramBlock], include_relY: bool = True) -> MilpModel:
    """Intersect several per-row-subset flow polytopes (and optionally rel(Y))."""
    b = _Builder(inst, "multi_nf")
    for k, blk in enumerate(diagrams):
        if blk.dd.kind not in (ddm.EXACT, ddm.RELAXED):
            raise InvalidMode("multi-network blocks must be exact or relaxed")
        support = list(blk.support) if blk.support is not None else row_support(inst, blk.rows)
        if support != sorted(support) or len(set(support)) != len(support):
            raise OverlappingVariableMismatch(f"block {k}: support must follow the global variable order")
        if blk.dd.n != len(support):
            raise OverlappingVariableMismatch(
                f"block {k}: diagram has {blk.dd.n} layers but its support has {len(support)} variables"
            )
        if support and (support[0] < 0 or support[-1] >= inst.n):
            raise OverlappingVariableMismatch(f"block {k}: support index out of range")
        flow_block(b.model, blk.dd, b.y[support], tag=f"z{k}")
    dualize_uncertainty(b)
    b.linking_rows()
    b.first_stage_rows()
    if include_relY:
        b.rel_rows()
    return b.finish()


def row_diagrams(inst: ArboInstance, row_groups, mode=None, reduce_result=True) -> list[DiagramBlock]:
    """One diagram per group of Y rows, compiled over the group's support."""
    mode = mode or ddm.Exact()
    blocks = []
    for rows in row_groups:
        rows = list(rows)
        support = row_support(inst, rows)
        G = inst.y_G[rows][:, support]
        sub = inst.copy(
            y_rows=(G, [inst.y_senses[r] for r in rows], inst.y_rhs[rows]),
            n=len(support),
            xi_y=inst.xi_y[:, support],
            linking=type(inst.linking)(),
            meta={},
            recursion=None,
        )
        rec = sub.recourse_recursion()
        dd = ddm.compile(rec, mode, reduce_result=reduce_result)
        blocks.append(DiagramBlock(rows, dd, support))
    return blocks


def build_integral(inst: ArboInstance) -> MilpModel:
    """Continuous recourse with the rows of Y; exact when rel(Y) is integral.

    Integrality of the recourse polytope is trusted, not checked.
    """
    b = _Builder(inst, "integral")
    b.rel_rows()
    dualize_uncertainty(b)
    b.linking_rows()
    b.first_stage_rows()
    return b.finish()


# ---------------------------------------------------------------------------
def fix_first_stage(model: MilpModel, x_hat) -> MilpModel:
    """Copy of ``model`` with the x block frozen at ``x_hat``."""
    out = model.copy()
    for j, v in zip(out.groups["x"], np.asarray(x_hat, dtype=float)):
        out.lb[j] = out.ub[j] = float(round(v))
    return out


def first_stage(model: MilpModel, res) -> np.ndarray:
    return np.round(res.x[model.groups["x"]]).astype(np.int64)
