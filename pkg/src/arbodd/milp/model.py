"""Solver-neutral mixed-integer linear model and solve record."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import NameCollision

CONTINUOUS, BINARY = "C", "B"
LE, EQ, GE = "<=", "=", ">="
MIN, MAX = "min", "max"

OPTIMAL, INFEASIBLE, UNBOUNDED, TIME_LIMIT = "Optimal", "Infeasible", "Unbounded", "TimeLimit"

_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


@dataclass
class Row:
    idx: np.ndarray
    val: np.ndarray
    sense: str
    rhs: float
    name: str


class MilpModel:
    """Variables with bounds and type, linear rows, and a linear objective.

    Variables and rows are addressed by integer index; names exist for LP
    export. ``groups`` maps a label (``"x"``, ``"y"``, ``"z0"`` ...) to the
    indices that builders created under it.
    """

    def __init__(self, name="model"):
        self.name = name
        self.var_names: list[str] = []
        self.lb: list[float] = []
        self.ub: list[float] = []
        self.vtype: list[str] = []
        self.rows: list[Row] = []
        self.obj = {}
        self.obj_sense = MIN
        self.obj_const = 0.0
        self.groups: dict[str, np.ndarray] = {}
        self.meta: dict = {}
        self._names = {}

    # -- construction -------------------------------------------------
    def add_var(self, name, lb=0.0, ub=math.inf, vtype=CONTINUOUS) -> int:
        if not _NAME_RE.match(name):
            raise ValueError(f"variable name {name!r} must be alphanumeric/underscore")
        if name in self._names:
            raise NameCollision(f"duplicate variable name {name!r}")
        if vtype not in (CONTINUOUS, BINARY):
            raise ValueError(f"unsupported variable type {vtype!r}")
        if vtype == BINARY:
            lb, ub = max(0.0, lb), min(1.0, ub)
        if lb > ub:
            raise ValueError(f"{name}: lb {lb} > ub {ub}")
        k = len(self.var_names)
        self._names[name] = k
        self.var_names.append(name)
        self.lb.append(float(lb))
        self.ub.append(float(ub))
        self.vtype.append(vtype)
        return k

    def add_vars(self, prefix, count, lb=0.0, ub=math.inf, vtype=CONTINUOUS) -> np.ndarray:
        idx = np.array([self.add_var(f"{prefix}_{k}", lb, ub, vtype) for k in range(count)], dtype=np.int64)
        self.groups[prefix] = idx
        return idx

    def var_index(self, name) -> int:
        return self._names[name]

    def add_constr(self, idx, val, sense, rhs, name=None) -> int:
        if sense not in (LE, EQ, GE):
            raise ValueError(f"unknown sense {sense!r}")
        idx = np.asarray(idx, dtype=np.int64).ravel()
        val = np.asarray(val, dtype=float).ravel()
        if idx.shape != val.shape:
            raise ValueError("index/value length mismatch")
        if len(idx) and (idx.min() < 0 or idx.max() >= self.num_vars):
            raise IndexError("constraint references an undeclared variable")
        if len(idx) != len(np.unique(idx)):
            # merge repeated indices
            u, inv = np.unique(idx, return_inverse=True)
            acc = np.zeros(len(u))
            np.add.at(acc, inv, val)
            idx, val = u, acc
        keep = val != 0.0
        k = len(self.rows)
        self.rows.append(Row(idx[keep], val[keep], sense, float(rhs), name or f"c{k}"))
        return k

    def set_objective(self, idx, val, sense=MIN, constant=0.0):
        if sense not in (MIN, MAX):
            raise ValueError(f"unknown objective sense {sense!r}")
        self.obj = {}
        for i, v in zip(np.asarray(idx, dtype=np.int64).ravel(), np.asarray(val, dtype=float).ravel()):
            self.obj[int(i)] = self.obj.get(int(i), 0.0) + float(v)
        self.obj_sense = sense
        self.obj_const = float(constant)

    # -- queries ------------------------------------------------------
    @property
    def num_vars(self):
        return len(self.var_names)

    @property
    def num_constrs(self):
        return len(self.rows)

    @property
    def binaries(self):
        return np.array([k for k, t in enumerate(self.vtype) if t == BINARY], dtype=np.int64)

    def objective_vector(self):
        c = np.zeros(self.num_vars)
        for i, v in self.obj.items():
            c[i] = v
        return c

    def matrix(self, dense=False):
        from scipy import sparse

        rows, cols, vals = [], [], []
        for r, row in enumerate(self.rows):
            rows.append(np.full(len(row.idx), r))
            cols.append(row.idx)
            vals.append(row.val)
        if rows:
            A = sparse.csr_matrix(
                (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                shape=(self.num_constrs, self.num_vars),
            )
        else:
            A = sparse.csr_matrix((0, self.num_vars))
        return A.toarray() if dense else A

    def senses(self):
        return [r.sense for r in self.rows]

    def rhs(self):
        return np.array([r.rhs for r in self.rows], dtype=float)

    def objective_value(self, x):
        return float(self.objective_vector() @ np.asarray(x, dtype=float) + self.obj_const)

    def max_violation(self, x) -> float:
        """Largest bound or row violation of ``x`` (0 when feasible)."""
        x = np.asarray(x, dtype=float)
        viol = max(
            float(np.max(np.asarray(self.lb) - x, initial=0.0)),
            float(np.max(x - np.asarray(self.ub), initial=0.0)),
        )
        for row in self.rows:
            act = float(row.val @ x[row.idx])
            if row.sense == LE:
                viol = max(viol, act - row.rhs)
            elif row.sense == GE:
                viol = max(viol, row.rhs - act)
            else:
                viol = max(viol, abs(act - row.rhs))
        return viol

    def relaxed(self) -> "MilpModel":
        m = self.copy()
        m.vtype = [CONTINUOUS] * m.num_vars
        return m

    def copy(self) -> "MilpModel":
        m = MilpModel(self.name)
        m.var_names = list(self.var_names)
        m.lb, m.ub, m.vtype = list(self.lb), list(self.ub), list(self.vtype)
        m.rows = [Row(r.idx.copy(), r.val.copy(), r.sense, r.rhs, r.name) for r in self.rows]
        m.obj = dict(self.obj)
        m.obj_sense, m.obj_const = self.obj_sense, self.obj_const
        m.groups = {k: v.copy() for k, v in self.groups.items()}
        m.meta = dict(self.meta)
        m._names = dict(self._names)
        return m

    def __repr__(self):
        nb = sum(t == BINARY for t in self.vtype)
        return f"MilpModel({self.name!r}, vars={self.num_vars}, binaries={nb}, rows={self.num_constrs})"


@dataclass
class SolveResult:
    status: str
    objective: float = math.nan
    bound: float = math.nan
    x: Optional[np.ndarray] = None
    node_count: int = 0
    wall_time: float = 0.0
    iterations: int = 0
    duals: Optional[np.ndarray] = field(default=None, repr=False)
    reduced_costs: Optional[np.ndarray] = field(default=None, repr=False)
    incumbents: list = field(default_factory=list, repr=False)
    events: list = field(default_factory=list, repr=False)

    @property
    def optimal(self):
        return self.status == OPTIMAL

    def value(self, idx):
        return self.x[np.asarray(idx)]
