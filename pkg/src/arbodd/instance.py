"""Problem data for adaptive robust binary optimisation with selective adaptability.

An instance is

    opt_x  worst_xi  opt_y   c'x + xi'(Bx x + By y)
    x in X (binary rows),  y in Y (binary rows),  y linked to x by U1/U2/U3,
    xi = offset + U alpha,  alpha in {alpha : T alpha <= d}.

``opt`` is min or max; the adversary plays the opposite role. ``Bx``/``By``
default to 0 and I, which gives the plain ``xi'y`` objective.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import linprog

from .errors import SchemaViolation, ShapeMismatch, UnboundedUncertainty
from .milp.model import EQ, GE, LE, MAX, MIN
from .recursions import AssignmentRecursion, KnapsackRecursion, RecursiveModel, RowsRecursion

POLYHEDRAL, FACTOR_BOX = "polyhedral", "factor_box"


# ---------------------------------------------------------------------------
# uncertainty
@dataclass
class UncertaintySet:
    """``{offset + U alpha : T alpha <= d}``; ``U=None`` means identity."""

    T: np.ndarray
    d: np.ndarray
    u_matrix: Optional[np.ndarray] = None
    offset: Optional[np.ndarray] = None
    form: str = POLYHEDRAL

    def __post_init__(self):
        self.T = np.atleast_2d(np.asarray(self.T, dtype=float))
        self.d = np.asarray(self.d, dtype=float).ravel()
        if self.T.shape[0] != len(self.d):
            raise ShapeMismatch(f"T has {self.T.shape[0]} rows but d has {len(self.d)}")
        if self.u_matrix is not None:
            self.u_matrix = np.atleast_2d(np.asarray(self.u_matrix, dtype=float))
            if self.u_matrix.shape[1] != self.T.shape[1]:
                raise ShapeMismatch("u_matrix columns must match the factor dimension")
        if self.offset is None:
            self.offset = np.zeros(self.dim)
        self.offset = np.asarray(self.offset, dtype=float).ravel()
        if len(self.offset) != self.dim:
            raise ShapeMismatch("offset length must match the uncertainty dimension")

    @classmethod
    def polyhedral(cls, T, d, u_matrix=None, offset=None):
        return cls(T, d, u_matrix, offset, POLYHEDRAL)

    @classmethod
    def factor_box(cls, u_matrix, offset=None):
        """``offset + U alpha`` with ``alpha in [-1, 1]^M``."""
        U = np.atleast_2d(np.asarray(u_matrix, dtype=float))
        M = U.shape[1]
        T = np.vstack([np.eye(M), -np.eye(M)])
        return cls(T, np.ones(2 * M), U, offset, FACTOR_BOX)

    @property
    def factor_dim(self) -> int:
        return self.T.shape[1]

    @property
    def dim(self) -> int:
        return self.T.shape[1] if self.u_matrix is None else self.u_matrix.shape[0]

    @property
    def U(self) -> np.ndarray:
        return np.eye(self.factor_dim) if self.u_matrix is None else self.u_matrix

    def xi(self, alpha) -> np.ndarray:
        return self.offset + self.U @ np.asarray(alpha, dtype=float)

    def contains_alpha(self, alpha, tol=1e-9) -> bool:
        return bool(np.all(self.T @ np.asarray(alpha, dtype=float) <= self.d + tol))

    def check_bounded(self):
        """Raise unless alpha-space is nonempty and bounded in every coordinate."""
        k = self.factor_dim
        bounds = [(None, None)] * k
        for j in range(k):
            for s in (1.0, -1.0):
                obj = np.zeros(k)
                obj[j] = s
                r = linprog(obj, A_ub=self.T, b_ub=self.d, bounds=bounds, method="highs")
                if r.status == 2:
                    raise UnboundedUncertainty("uncertainty set is empty")
                if r.status == 3:
                    raise UnboundedUncertainty(f"uncertainty set is unbounded along factor {j}")
                if r.status != 0:
                    raise UnboundedUncertainty(f"boundedness check failed: {r.message}")
        return True

    def maximize(self, w) -> tuple[float, np.ndarray]:
        """``max_xi w'xi`` over the set; returns (value, alpha)."""
        g = self.U.T @ np.asarray(w, dtype=float)
        r = linprog(-g, A_ub=self.T, b_ub=self.d, bounds=[(None, None)] * self.factor_dim, method="highs")
        if r.status != 0:
            raise UnboundedUncertainty(f"cannot optimise over the uncertainty set: {r.message}")
        return float(self.offset @ w - r.fun), r.x


# ---------------------------------------------------------------------------
# linking
@dataclass
class LinkingSets:
    """Pairs (i, j): U1 means y_i <= x_j, U2 means y_i = x_j, U3 means y_i >= x_j."""

    u1: list = field(default_factory=list)
    u2: list = field(default_factory=list)
    u3: list = field(default_factory=list)

    def __post_init__(self):
        self.u1 = sorted({(int(i), int(j)) for i, j in self.u1})
        self.u2 = sorted({(int(i), int(j)) for i, j in self.u2})
        self.u3 = sorted({(int(i), int(j)) for i, j in self.u3})
        s1, s2, s3 = set(self.u1), set(self.u2), set(self.u3)
        if s1 & s2 or s1 & s3 or s2 & s3:
            raise ShapeMismatch("linking sets must be pairwise disjoint")

    def check_range(self, n, m):
        for i, j in self.u1 + self.u2 + self.u3:
            if not (0 <= i < n and 0 <= j < m):
                raise ShapeMismatch(f"linking pair ({i}, {j}) outside {n} recourse x {m} first-stage")

    def satisfied(self, x, y) -> bool:
        return (
            all(y[i] <= x[j] for i, j in self.u1)
            and all(y[i] == x[j] for i, j in self.u2)
            and all(y[i] >= x[j] for i, j in self.u3)
        )

    def rows(self):
        """``(i, j, sense)`` triples for the row ``y_i - x_j (sense) 0``."""
        return [(i, j, LE) for i, j in self.u1] + [(i, j, EQ) for i, j in self.u2] + [(i, j, GE) for i, j in self.u3]


# ---------------------------------------------------------------------------
def _rows(A, senses, rhs, width):
    A = np.asarray(A, dtype=float).reshape(-1, width)
    senses = list(senses)
    rhs = np.asarray(rhs, dtype=float).ravel()
    if not (A.shape[0] == len(senses) == len(rhs)):
        raise ShapeMismatch("row matrix, senses and rhs disagree in length")
    for s in senses:
        if s not in (LE, GE, EQ):
            raise ShapeMismatch(f"unknown row sense {s!r}")
    return A, senses, rhs


def _le_form(A, senses, rhs):
    rows, b = [], []
    for a, s, r in zip(A, senses, rhs):
        if s in (LE, EQ):
            rows.append(a)
            b.append(r)
        if s in (GE, EQ):
            rows.append(-a)
            b.append(-r)
    width = A.shape[1]
    return np.array(rows, dtype=float).reshape(-1, width), np.array(b, dtype=float)


def _rows_ok(A, senses, rhs, v, tol=1e-9):
    act = A @ v
    for a, s, r in zip(act, senses, rhs):
        if (s == LE and a > r + tol) or (s == GE and a < r - tol) or (s == EQ and abs(a - r) > tol):
            return False
    return True


class ArboInstance:
    """One problem instance; see the module docstring for the model."""

    def __init__(
        self,
        c,
        x_rows,
        y_rows,
        linking: LinkingSets,
        xi_set: UncertaintySet,
        sense=MIN,
        xi_x=None,
        xi_y=None,
        meta=None,
        n=None,
        recursion: Optional[RecursiveModel] = None,
    ):
        self.c = np.asarray(c, dtype=float).ravel()
        m = len(self.c)
        self.x_A, self.x_senses, self.x_rhs = _rows(*x_rows, m) if x_rows is not None else _rows(np.zeros((0, m)), [], [], m)
        if n is None:
            n = np.asarray(y_rows[0]).shape[-1] if xi_y is None else np.atleast_2d(xi_y).shape[1]
        self.y_G, self.y_senses, self.y_rhs = _rows(*y_rows, n) if y_rows is not None else _rows(np.zeros((0, n)), [], [], n)
        self.linking = linking
        self.xi_set = xi_set
        if sense not in (MIN, MAX):
            raise ShapeMismatch(f"sense must be min or max, got {sense!r}")
        self.sense = sense
        p = xi_set.dim
        self.xi_x = np.zeros((p, m)) if xi_x is None else np.atleast_2d(np.asarray(xi_x, dtype=float)).reshape(p, m)
        self.xi_y = np.eye(n) if xi_y is None else np.atleast_2d(np.asarray(xi_y, dtype=float))
        self.meta = dict(meta or {})
        self.recursion = recursion
        self.validate()

    # -- sizes / checks -------------------------------------------------
    @property
    def m(self) -> int:
        return len(self.c)

    @property
    def n(self) -> int:
        return self.y_G.shape[1]

    def validate(self):
        if self.xi_y.shape != (self.xi_set.dim, self.n):
            raise ShapeMismatch(f"xi_y must be {self.xi_set.dim} x {self.n}, got {self.xi_y.shape}")
        if self.xi_x.shape != (self.xi_set.dim, self.m):
            raise ShapeMismatch(f"xi_x must be {self.xi_set.dim} x {self.m}")
        self.linking.check_range(self.n, self.m)
        if self.recursion is not None and self.recursion.n != self.n:
            raise ShapeMismatch("recursion length differs from the recourse dimension")

    def x_feasible(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return _rows_ok(self.x_A, self.x_senses, self.x_rhs, x)

    def y_feasible(self, y) -> bool:
        return _rows_ok(self.y_G, self.y_senses, self.y_rhs, np.asarray(y, dtype=float))

    def y_le_form(self):
        """Recourse rows as ``A y <= b``."""
        return _le_form(self.y_G, self.y_senses, self.y_rhs)

    def y_ge_form(self):
        """Recourse rows as ``G y >= h``."""
        A, b = self.y_le_form()
        return -A, -b

    def x_le_form(self):
        return _le_form(self.x_A, self.x_senses, self.x_rhs)

    # -- objective in min form -------------------------------------------
    def min_form(self):
        """``(c, Bx, By)`` with the objective negated for max instances."""
        s = -1.0 if self.sense == MAX else 1.0
        return s * self.c, s * self.xi_x, s * self.xi_y

    def payoff(self, x, y, xi) -> float:
        """Objective in the instance's own sense."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        xi = np.asarray(xi, dtype=float)
        return float(self.c @ x + xi @ (self.xi_x @ x + self.xi_y @ y))

    def recourse_recursion(self) -> RecursiveModel:
        """A recursion whose exact diagram encodes Y."""
        if self.recursion is not None:
            return self.recursion
        fam = self.meta.get("family")
        params = self.meta.get("params", {})
        if fam == "assignment" and {"L", "M", "links", "a", "b"} <= set(params):
            return AssignmentRecursion(params["L"], params["M"], params["links"], params["a"], params["b"])
        A, b = self.y_le_form()
        if A.shape[0] == 0:
            return KnapsackRecursion([0] * self.n, 0)
        if (
            A.shape[0] == 1
            and np.all(A >= 0)
            and np.allclose(A, np.round(A))
            and b[0] >= 0
        ):
            return KnapsackRecursion(np.round(A[0]).astype(int), int(math.floor(b[0] + 1e-9)))
        return RowsRecursion(A, b)

    # -- misc ------------------------------------------------------------
    def copy(self, **changes) -> "ArboInstance":
        kw = dict(
            c=self.c.copy(),
            x_rows=(self.x_A.copy(), list(self.x_senses), self.x_rhs.copy()),
            y_rows=(self.y_G.copy(), list(self.y_senses), self.y_rhs.copy()),
            linking=LinkingSets(self.linking.u1, self.linking.u2, self.linking.u3),
            xi_set=self.xi_set,
            sense=self.sense,
            xi_x=self.xi_x.copy(),
            xi_y=self.xi_y.copy(),
            meta=json.loads(json.dumps(self.meta)),
            n=self.n,
            recursion=self.recursion,
        )
        kw.update(changes)
        return ArboInstance(**kw)

    def __eq__(self, other):
        if not isinstance(other, ArboInstance):
            return NotImplemented
        return to_dict(self) == to_dict(other)

    def __repr__(self):
        fam = self.meta.get("family", "custom")
        return f"ArboInstance({fam}, sense={self.sense}, m={self.m}, n={self.n}, xi_dim={self.xi_set.dim})"


# ---------------------------------------------------------------------------
# general linking rows -> selective adaptability
def lift_to_selective(F, G, h, inst: ArboInstance) -> ArboInstance:
    """Rewrite rows ``F x + G y <= h`` by copying the x's they touch into Y.

    Every first-stage index j with a nonzero column in ``F`` gets an auxiliary
    recourse variable tied to x_j by an equality link; the rows then live in Y.
    """
    F = np.atleast_2d(np.asarray(F, dtype=float))
    G = np.atleast_2d(np.asarray(G, dtype=float))
    h = np.asarray(h, dtype=float).ravel()
    if F.size == 0 or F.shape[0] == 0:
        return inst.copy()
    touched = [j for j in range(inst.m) if np.any(F[:, j] != 0)]
    n, k = inst.n, len(touched)
    Gy = np.hstack([inst.y_G, np.zeros((inst.y_G.shape[0], k))])
    extra = np.hstack([G, F[:, touched]])
    y_rows = (np.vstack([Gy, extra]), list(inst.y_senses) + [LE] * len(h), np.concatenate([inst.y_rhs, h]))
    u2 = list(inst.linking.u2) + [(n + a, j) for a, j in enumerate(touched)]
    meta = json.loads(json.dumps(inst.meta))
    meta["lifted_from"] = touched
    meta.pop("family", None)  # the family recursion no longer covers the new rows
    return inst.copy(
        y_rows=y_rows,
        n=n + k,
        linking=LinkingSets(inst.linking.u1, u2, inst.linking.u3),
        xi_y=np.hstack([inst.xi_y, np.zeros((inst.xi_set.dim, k))]),
        meta=meta,
        recursion=None,
    )


# ---------------------------------------------------------------------------
# JSON
def _rows_to_json(A, senses, rhs):
    return [{"coeffs": [float(v) for v in a], "sense": s, "rhs": float(r)} for a, s, r in zip(A, senses, rhs)]


def _mat(A):
    return [[float(v) for v in row] for row in np.atleast_2d(A)]


def to_dict(inst: ArboInstance) -> dict:
    xs = inst.xi_set
    unc = {"form": xs.form, "offset": [float(v) for v in xs.offset]}
    if xs.form == FACTOR_BOX:
        unc["u_matrix"] = _mat(xs.U)
        unc["factor_dim"] = xs.factor_dim
    else:
        unc["t_rows"] = _mat(xs.T)
        unc["d"] = [float(v) for v in xs.d]
        if xs.u_matrix is not None:
            unc["u_matrix"] = _mat(xs.u_matrix)
    out = {
        "sense": inst.sense,
        "n": inst.n,
        "m": inst.m,
        "c": [float(v) for v in inst.c],
        "x_rows": _rows_to_json(inst.x_A, inst.x_senses, inst.x_rhs),
        "y_rows": _rows_to_json(inst.y_G, inst.y_senses, inst.y_rhs),
        "linking": {k: [list(p) for p in getattr(inst.linking, k)] for k in ("u1", "u2", "u3")},
        "uncertainty": unc,
        "meta": inst.meta,
    }
    if np.any(inst.xi_x != 0):
        out["xi_x"] = _mat(inst.xi_x)
    if inst.xi_y.shape != (inst.n, inst.n) or not np.array_equal(inst.xi_y, np.eye(inst.n)):
        out["xi_y"] = _mat(inst.xi_y)
    return out


def dumps(inst: ArboInstance) -> str:
    return json.dumps(to_dict(inst), indent=1, sort_keys=True) + "\n"


def save(inst: ArboInstance, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(inst))


def _need(d, key, path):
    if not isinstance(d, dict) or key not in d:
        raise SchemaViolation(f"{path}.{key}" if path else key, "required field is missing")
    return d[key]


def _num_list(v, path):
    if not isinstance(v, list) or not all(isinstance(t, (int, float)) and not isinstance(t, bool) for t in v):
        raise SchemaViolation(path, "expected a list of numbers")
    return [float(t) for t in v]


def _matrix(v, path, cols=None):
    if not isinstance(v, list):
        raise SchemaViolation(path, "expected a list of rows")
    rows = [_num_list(r, f"{path}[{k}]") for k, r in enumerate(v)]
    if rows and len({len(r) for r in rows}) != 1:
        raise SchemaViolation(path, "rows have different lengths")
    if cols is not None and rows and len(rows[0]) != cols:
        raise SchemaViolation(path, f"expected {cols} columns")
    return np.array(rows, dtype=float).reshape(len(rows), cols if cols is not None else (len(rows[0]) if rows else 0))


def _parse_rows(v, path, width):
    if not isinstance(v, list):
        raise SchemaViolation(path, "expected a list of rows")
    A, senses, rhs = [], [], []
    for k, r in enumerate(v):
        p = f"{path}[{k}]"
        coeffs = _num_list(_need(r, "coeffs", p), f"{p}.coeffs")
        if len(coeffs) != width:
            raise SchemaViolation(f"{p}.coeffs", f"expected {width} coefficients, got {len(coeffs)}")
        s = _need(r, "sense", p)
        if s not in (LE, GE, EQ):
            raise SchemaViolation(f"{p}.sense", f"unknown sense {s!r}")
        rv = _need(r, "rhs", p)
        if not isinstance(rv, (int, float)) or isinstance(rv, bool):
            raise SchemaViolation(f"{p}.rhs", "expected a number")
        A.append(coeffs)
        senses.append(s)
        rhs.append(float(rv))
    return np.array(A, dtype=float).reshape(len(A), width), senses, np.array(rhs)


def from_dict(d: dict) -> ArboInstance:
    sense = _need(d, "sense", "")
    if sense not in (MIN, MAX):
        raise SchemaViolation("sense", f"must be 'min' or 'max', got {sense!r}")
    c = _num_list(_need(d, "c", ""), "c")
    m = int(d.get("m", len(c)))
    if m != len(c):
        raise SchemaViolation("m", "disagrees with len(c)")
    y_raw = _need(d, "y_rows", "")
    if "n" in d:
        n = d["n"]
        if not isinstance(n, int) or n < 0:
            raise SchemaViolation("n", "expected a nonnegative integer")
    elif y_raw:
        n = len(_need(y_raw[0], "coeffs", "y_rows[0]"))
    else:
        raise SchemaViolation("n", "required when y_rows is empty")
    x_rows = _parse_rows(_need(d, "x_rows", ""), "x_rows", m)
    y_rows = _parse_rows(y_raw, "y_rows", n)
    lk = _need(d, "linking", "")
    pairs = {}
    for key in ("u1", "u2", "u3"):
        raw = lk.get(key, []) if isinstance(lk, dict) else None
        if not isinstance(raw, list) or not all(isinstance(p, list) and len(p) == 2 for p in raw):
            raise SchemaViolation(f"linking.{key}", "expected a list of [i, j] pairs")
        pairs[key] = [tuple(int(t) for t in p) for p in raw]
    try:
        linking = LinkingSets(**pairs)
    except ShapeMismatch as exc:
        raise SchemaViolation("linking", str(exc)) from exc
    unc = _need(d, "uncertainty", "")
    form = _need(unc, "form", "uncertainty")
    offset = unc.get("offset")
    if offset is not None:
        offset = _num_list(offset, "uncertainty.offset")
    try:
        if form == FACTOR_BOX:
            U = _matrix(_need(unc, "u_matrix", "uncertainty"), "uncertainty.u_matrix")
            fd = unc.get("factor_dim", U.shape[1])
            if fd != U.shape[1]:
                raise SchemaViolation("uncertainty.factor_dim", "disagrees with u_matrix")
            xi_set = UncertaintySet.factor_box(U, offset)
        elif form == POLYHEDRAL:
            T = _matrix(_need(unc, "t_rows", "uncertainty"), "uncertainty.t_rows")
            dv = _num_list(_need(unc, "d", "uncertainty"), "uncertainty.d")
            U = unc.get("u_matrix")
            U = None if U is None else _matrix(U, "uncertainty.u_matrix")
            xi_set = UncertaintySet.polyhedral(T, dv, U, offset)
        else:
            raise SchemaViolation("uncertainty.form", f"unknown form {form!r}")
    except ShapeMismatch as exc:
        raise SchemaViolation("uncertainty", str(exc)) from exc
    p = xi_set.dim
    xi_x = _matrix(d["xi_x"], "xi_x", m) if "xi_x" in d else None
    xi_y = _matrix(d["xi_y"], "xi_y", n) if "xi_y" in d else None
    meta = d.get("meta", {})
    if not isinstance(meta, dict):
        raise SchemaViolation("meta", "expected an object")
    try:
        return ArboInstance(c, x_rows, y_rows, linking, xi_set, sense, xi_x, xi_y, meta, n=n)
    except ShapeMismatch as exc:
        raise SchemaViolation("", str(exc)) from exc


def loads(text: str) -> ArboInstance:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaViolation("", f"not valid JSON: {exc}") from exc
    return from_dict(d)


def load(path) -> ArboInstance:
    with open(path) as fh:
        return loads(fh.read())
