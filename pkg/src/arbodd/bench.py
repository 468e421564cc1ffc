"""Benchmark harness: instances x methods -> CSV rows and a summary table.

Methods are written as ``name`` or ``name:param``:

    exact_nf, relaxed_nf:Q, restricted_nf:Q, restricted_nf:W<width>,
    multi_nf, integral, kadapt:K
"""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from functools import lru_cache
from typing import Optional

import numpy as np

from . import dd as ddm
from .errors import ArboError
from .evaluation import evaluate_solution, model_gap
from .generators import AssignmentSpec, CapitalBudgetingSpec, gen_assignment, gen_capital
from .instance import ArboInstance
from .kadapt import build_kadapt
from .milp.external import solve_external
from .milp.model import MAX, OPTIMAL, TIME_LIMIT
from .milp.solve import MilpOptions, solve_milp
from .nf import DiagramBlock, build_approx_nf, build_exact_nf, build_integral, build_multi_nf, row_diagrams

PRIMAL_METHODS = ("restricted_nf", "kadapt")
DUAL_METHODS = ("exact_nf", "relaxed_nf", "multi_nf", "integral")


# ---------------------------------------------------------------------------
# methods
@dataclass
class Built:
    model: object
    dd_build_time: float = 0.0
    dd_reduce_time: float = 0.0
    arcs_unreduced: Optional[int] = None
    arcs_reduced: Optional[int] = None


def parse_method(text: str) -> tuple[str, Optional[str]]:
    name, _, param = text.partition(":")
    name = name.strip()
    if name not in PRIMAL_METHODS + DUAL_METHODS:
        raise ValueError(f"unknown method {name!r}")
    if name in ("relaxed_nf", "restricted_nf", "kadapt") and not param:
        raise ValueError(f"method {name!r} needs a parameter, e.g. {name}:3")
    return name, (param.strip() or None)


def method_label(text: str) -> str:
    name, param = parse_method(text)
    if param is None:
        return name
    if name == "kadapt":
        return f"kadapt(K={param})"
    if param.upper().startswith("W"):
        return f"{name}(W={param[1:]})"
    return f"{name}(Q={param})"


def _timed_diagram(rec, mode):
    t0 = time.perf_counter()
    raw = ddm.compile(rec, mode)
    t1 = time.perf_counter()
    red = ddm.reduce(raw)
    t2 = time.perf_counter()
    return red, t1 - t0, t2 - t1, raw.arc_count


def build_for_method(inst: ArboInstance, method: str, seed: int = 0) -> Built:
    name, param = parse_method(method)
    rec = inst.recourse_recursion()
    if name == "exact_nf":
        dd, tb, tr, au = _timed_diagram(rec, ddm.Exact())
        return Built(build_exact_nf(inst, dd), tb, tr, au, dd.arc_count)
    if name in ("relaxed_nf", "restricted_nf"):
        direction = ddm.RELAXED if name == "relaxed_nf" else ddm.RESTRICTED
        if param.upper().startswith("W"):
            mode = ddm.Width(int(param[1:]), direction, seed=seed)
        else:
            mode = ddm.Distance(float(param), direction)
        dd, tb, tr, au = _timed_diagram(rec, mode)
        return Built(build_approx_nf(inst, dd, include_relY=(direction == ddm.RELAXED)), tb, tr, au, dd.arc_count)
    if name == "multi_nf":
        t0 = time.perf_counter()
        blocks = row_diagrams(inst, _multi_groups(inst), reduce_result=False)
        t1 = time.perf_counter()
        reduced = [DiagramBlock(b.rows, ddm.reduce(b.dd), b.support) for b in blocks]
        t2 = time.perf_counter()
        return Built(
            build_multi_nf(inst, reduced, include_relY=True),
            t1 - t0,
            t2 - t1,
            sum(b.dd.arc_count for b in blocks),
            sum(b.dd.arc_count for b in reduced),
        )
    if name == "integral":
        return Built(build_integral(inst))
    return Built(build_kadapt(inst, int(param), symmetry_breaking=True).model)


def _multi_groups(inst: ArboInstance):
    """One group per knapsack-type row; rows with all-unit coefficients are left to rel(Y)."""
    fam = inst.meta.get("family")
    if fam == "assignment":
        M = inst.meta["params"]["M"]
        return [[r] for r in range(M)]
    groups = []
    for r, a in enumerate(inst.y_G):
        nz = a[np.abs(a) > 0]
        if not (np.all(nz == 1.0) and inst.y_senses[r] == "<=" and inst.y_rhs[r] == 1.0):
            groups.append([r])
    return groups or [[r] for r in range(len(inst.y_G))]


# ---------------------------------------------------------------------------
# records
@dataclass
class BenchRecord:
    instance_id: str
    family: str
    size: str
    n: int
    method: str
    dd_build_time: Optional[float] = None
    dd_reduce_time: Optional[float] = None
    arcs_unreduced: Optional[int] = None
    arcs_reduced: Optional[int] = None
    num_vars: Optional[int] = None
    solve_time: Optional[float] = None
    status: str = ""
    node_count: Optional[int] = None
    objective: Optional[float] = None
    dual_bound: Optional[float] = None
    z_of_x: Optional[float] = None
    model_gap_pct: Optional[float] = None
    true_gap_pct: Optional[float] = None


COLUMNS = [f.name for f in fields(BenchRecord)]
TIME_COLUMNS = ("dd_build_time", "dd_reduce_time", "solve_time")
_INT_COLS = {"n", "arcs_unreduced", "arcs_reduced", "num_vars", "node_count"}
_STR_COLS = {"instance_id", "family", "size", "method", "status"}


@dataclass
class BenchConfig:
    family: str
    sizes: list
    seeds: list
    methods: list
    Q_list: list = field(default_factory=list)
    K_list: list = field(default_factory=list)
    time_limit: float = 600.0
    output: Optional[str] = None
    params: dict = field(default_factory=dict)
    solver: str = "builtin"
    workers: int = 1
    evaluate: bool = True

    @classmethod
    def from_dict(cls, d: dict) -> "BenchConfig":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown bench config keys: {sorted(extra)}")
        return cls(**d)

    def method_list(self) -> list[str]:
        """Expand ``relaxed_nf`` over Q_list and ``kadapt`` over K_list."""
        out = []
        for m in self.methods:
            if ":" in m:
                out.append(m)
            elif m in ("relaxed_nf", "restricted_nf"):
                out += [f"{m}:{q:g}" if isinstance(q, (int, float)) else f"{m}:{q}" for q in self.Q_list]
            elif m == "kadapt":
                out += [f"kadapt:{k}" for k in self.K_list]
            else:
                out.append(m)
        for m in out:
            parse_method(m)
        return out

    def instances(self) -> list[tuple]:
        keys = []
        for size in self.sizes:
            for seed in self.seeds:
                keys.append((self.family, tuple(size) if isinstance(size, list) else size, seed))
        return keys


def _size_label(family, size):
    if family == "capital":
        return f"n{size}"
    L, M = size
    return f"L{L}M{M}"


@lru_cache(maxsize=64)
def _instance(family, size, seed, params_key):
    params = dict(params_key)
    if family == "capital":
        return gen_capital(CapitalBudgetingSpec(n=int(size), seed=int(seed), **params))
    if family == "assignment":
        L, M = size
        return gen_assignment(AssignmentSpec(L=int(L), M=int(M), seed=int(seed), **params))
    raise ValueError(f"unknown family {family!r}")


@lru_cache(maxsize=64)
def _exact_dd(family, size, seed, params_key):
    inst = _instance(family, size, seed, params_key)
    return ddm.compile(inst.recourse_recursion(), ddm.Exact(), reduce_result=True)


def _solve(model, cfg: BenchConfig):
    if cfg.solver.startswith("external:"):
        from .milp.external import find_external_solver

        exe = find_external_solver(cfg.solver)
        if exe is None:
            raise ArboError(f"external solver {cfg.solver!r} not found")
        return solve_external(model, exe, cfg.time_limit)
    return solve_milp(model, MilpOptions(time_limit=cfg.time_limit))


def run_cell(cfg: BenchConfig, key, method) -> BenchRecord:
    family, size, seed = key
    pkey = tuple(sorted(cfg.params.items()))
    inst = _instance(family, size, seed, pkey)
    label = _size_label(family, size)
    rec = BenchRecord(f"{family}-{label}-s{seed}", family, label, inst.n, method_label(method))
    try:
        built = build_for_method(inst, method, seed=seed)
        rec.dd_build_time = built.dd_build_time
        rec.dd_reduce_time = built.dd_reduce_time
        rec.arcs_unreduced = built.arcs_unreduced
        rec.arcs_reduced = built.arcs_reduced
        rec.num_vars = built.model.num_vars
        t0 = time.perf_counter()
        res = _solve(built.model, cfg)
        rec.solve_time = time.perf_counter() - t0
        rec.status = res.status
        rec.node_count = res.node_count
        if res.x is None:
            return rec
        rec.objective = float(res.objective)
        name, _ = parse_method(method)
        if name in DUAL_METHODS and np.isfinite(res.bound):
            rec.dual_bound = float(res.bound)
        if cfg.evaluate:
            x = np.round(res.x[built.model.groups["x"]])
            z = evaluate_solution(inst, x, _exact_dd(family, size, seed, pkey)).z
            rec.z_of_x = float(z)
            if rec.dual_bound is not None and z != 0:
                rec.model_gap_pct = model_gap(rec.dual_bound, z, inst.sense)
    except (ArboError, ValueError, np.linalg.LinAlgError) as exc:
        rec.status = f"Error: {type(exc).__name__}: {exc}".replace("\n", " ")
    return rec


def _fill_true_gaps(rows: list[BenchRecord], senses: dict):
    best = {}
    for r in rows:
        if r.method == "exact_nf" and r.status == OPTIMAL and r.objective is not None:
            best[r.instance_id] = r.objective
    for r in rows:
        if r.instance_id in best and r.z_of_x is not None and r.z_of_x != 0:
            r.true_gap_pct = model_gap(best[r.instance_id], r.z_of_x, senses[r.instance_id])


def _cell_args(cfg):
    return [(cfg, key, m) for key in cfg.instances() for m in cfg.method_list()]


def _run_cell_tuple(args):
    return run_cell(*args)


def run_bench(config) -> tuple[list[BenchRecord], str]:
    """Run every (instance, method) cell; returns the rows and the summary text.

    Rows follow the config's instance order, then its method order. When
    ``config.output`` is set the CSV is written there.
    """
    cfg = config if isinstance(config, BenchConfig) else BenchConfig.from_dict(config)
    cells = _cell_args(cfg)
    if cfg.workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(_run_cell_tuple, cells))
    else:
        rows = [run_cell(*c) for c in cells]
    senses = {}
    pkey = tuple(sorted(cfg.params.items()))
    for key in cfg.instances():
        fam, size, seed = key
        senses[f"{fam}-{_size_label(fam, size)}-s{seed}"] = _instance(fam, size, seed, pkey).sense
    _fill_true_gaps(rows, senses)
    text = to_csv(rows)
    if cfg.output:
        with open(cfg.output, "w", newline="") as fh:
            fh.write(text)
    return rows, format_summary(summarize(from_csv(text)))


# ---------------------------------------------------------------------------
# CSV and summaries
def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def to_csv(rows: list[BenchRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([_fmt(getattr(r, c)) for c in COLUMNS])
    return buf.getvalue()


def from_csv(text: str) -> list[BenchRecord]:
    out = []
    for d in csv.DictReader(io.StringIO(text)):
        kw = {}
        for c in COLUMNS:
            v = d.get(c, "")
            if c in _STR_COLS:
                kw[c] = v
            elif v == "":
                kw[c] = None
            elif c in _INT_COLS:
                kw[c] = int(v)
            else:
                kw[c] = float(v)
        out.append(BenchRecord(**kw))
    return out


def read_csv(path) -> list[BenchRecord]:
    with open(path) as fh:
        return from_csv(fh.read())


def _mean(vals):
    vals = [v for v in vals if v is not None and not (isinstance(v, float) and math.isnan(v))]
    return sum(vals) / len(vals) if vals else None


def summarize(rows: list[BenchRecord]) -> list[dict]:
    """Per (family, size, method) aggregates.

    Times and gaps are averaged over runs that finished (status Optimal);
    runs stopped by the time limit are counted in ``censored``.
    """
    cells: dict = {}
    for r in rows:
        cells.setdefault((r.family, r.size, r.method), []).append(r)
    out = []
    for (fam, size, method), rs in cells.items():
        solved = [r for r in rs if r.status == OPTIMAL]
        out.append({
            "family": fam,
            "size": size,
            "method": method,
            "runs": len(rs),
            "solved": len(solved),
            "censored": sum(r.status == TIME_LIMIT for r in rs),
            "arcs_reduced": _mean([r.arcs_reduced for r in rs]),
            "build_time": _mean([(r.dd_build_time or 0.0) + (r.dd_reduce_time or 0.0) for r in solved]),
            "solve_time": _mean([r.solve_time for r in solved]),
            "model_gap_pct": _mean([r.model_gap_pct for r in solved]),
            "true_gap_pct": _mean([r.true_gap_pct for r in solved]),
        })
    return out


def format_summary(table: list[dict]) -> str:
    cols = ["family", "size", "method", "runs", "solved", "censored", "arcs_reduced",
            "build_time", "solve_time", "model_gap_pct", "true_gap_pct"]

    def cell(v):
        if v is None:
            return "-"
        if isinstance(v, float):
            return f"{v:.3f}"
        return str(v)

    body = [[cell(row[c]) for c in cols] for row in table]
    widths = [max(len(c), *(len(b[k]) for b in body)) if body else len(c) for k, c in enumerate(cols)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(cols, widths))]
    lines += ["  ".join(v.ljust(w) for v, w in zip(b, widths)) for b in body]
    return "\n".join(lines) + "\n"


def strip_times(text: str) -> str:
    """CSV text with the timing columns blanked (for reproducibility checks)."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        return text
    idx = [rows[0].index(c) for c in TIME_COLUMNS]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(rows[0])
    for r in rows[1:]:
        for k in idx:
            r[k] = ""
        w.writerow(r)
    return buf.getvalue()
