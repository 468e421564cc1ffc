"""Command-line entry point: ``arbodd <command> ...`` (or ``python -m arbodd``).

Exit codes: 0 success, 2 infeasible, 3 time limit, 4 input error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import dd as ddm
from . import instance as inst_io
from .bench import BenchConfig, build_for_method, run_bench
from .errors import ArboError, SchemaViolation
from .evaluation import evaluate_solution, model_gap
from .generators import AssignmentSpec, CapitalBudgetingSpec, gen_assignment, gen_capital
from .milp.external import find_external_solver, solve_external
from .milp.lpfile import emit_lp_file
from .milp.model import INFEASIBLE, OPTIMAL, TIME_LIMIT, UNBOUNDED
from .milp.solve import MilpOptions, solve_milp

EXIT_OK, EXIT_INFEASIBLE, EXIT_TIME_LIMIT, EXIT_INPUT = 0, 2, 3, 4


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _add_method_flags(p):
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--exact", action="store_true", help="exact network-flow model")
    g.add_argument("--relaxed", metavar="Q", help="relaxed diagram with merge distance Q (or W<width>)")
    g.add_argument("--restricted", metavar="Q", help="restricted diagram with merge distance Q (or W<width>)")
    g.add_argument("--multi", action="store_true", help="one exact diagram per knapsack row plus rel(Y)")
    g.add_argument("--integral", action="store_true", help="continuous recourse rows (integral recourse polytope)")
    g.add_argument("--kadapt", metavar="K", type=int, help="K-adaptability with K plans")


def _method(args) -> str:
    if args.exact:
        return "exact_nf"
    if args.relaxed is not None:
        return f"relaxed_nf:{args.relaxed}"
    if args.restricted is not None:
        return f"restricted_nf:{args.restricted}"
    if args.multi:
        return "multi_nf"
    if args.integral:
        return "integral"
    return f"kadapt:{args.kadapt}"


def _load(path):
    try:
        return inst_io.load(path)
    except OSError as exc:
        raise InputError(str(exc)) from exc


def _read_x(path, m):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(str(exc)) from exc
    try:
        data = json.loads(text)
        if isinstance(data, dict):
            data = data["x"]
        x = np.asarray(data, dtype=float)
    except (json.JSONDecodeError, KeyError, TypeError, ValueError):
        try:
            x = np.array([float(t) for t in text.split()])
        except ValueError as exc:
            raise InputError(f"cannot read a 0/1 vector from {path}") from exc
    if x.shape != (m,) or not np.all(np.isin(x, (0.0, 1.0))):
        raise InputError(f"expected {m} binary values in {path}")
    return x


def _out(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
def cmd_gen(args):
    if args.family == "capital":
        if args.n is None:
            raise InputError("capital instances need --n")
        inst = gen_capital(CapitalBudgetingSpec(args.n, args.factors, args.m_frac, args.f, args.seed))
    else:
        if args.L is None or args.M is None:
            raise InputError("assignment instances need --L and --M")
        inst = gen_assignment(AssignmentSpec(args.L, args.M, args.beta, 0.5, args.seed))
    _out(inst_io.dumps(inst), args.out)
    return EXIT_OK


def _mode(args):
    if args.mode == "exact":
        return ddm.Exact()
    if args.mode == "width":
        if args.W is None:
            raise InputError("width mode needs --W")
        return ddm.Width(args.W, args.direction, args.selector, args.seed)
    if args.Q is None:
        raise InputError("distance mode needs --Q")
    return ddm.Distance(args.Q, args.direction, seed=args.seed)


def cmd_compile(args):
    inst = _load(args.instance)
    raw = ddm.compile(inst.recourse_recursion(), _mode(args))
    red = ddm.reduce(raw)
    out = {"kind": raw.kind, "unreduced": raw.stats(), "reduced": red.stats()}
    print(json.dumps(out, indent=1, default=lambda v: v.tolist() if hasattr(v, "tolist") else str(v)))
    if args.dump:
        _out((red if args.reduce else raw).dump(), args.dump)
    return EXIT_OK


def _run_solver(model, args):
    if args.solver.startswith("external:"):
        exe = find_external_solver(args.solver)
        if exe is None:
            raise InputError(f"external solver not found: {args.solver}")
        return solve_external(model, exe, args.time_limit)
    if args.solver != "builtin":
        raise InputError(f"--solver must be 'builtin' or 'external:<path>', got {args.solver!r}")
    return solve_milp(model, MilpOptions(time_limit=args.time_limit))


def cmd_solve(args):
    inst = _load(args.instance)
    built = build_for_method(inst, _method(args))
    res = _run_solver(built.model, args)
    report = {"method": _method(args), "status": res.status, "node_count": res.node_count,
              "wall_time": res.wall_time}
    if res.x is not None:
        x = np.round(res.x[built.model.groups["x"]]).astype(int)
        report.update(objective=res.objective, bound=res.bound, x=x.tolist())
    print(json.dumps(report, indent=1))
    if args.out and res.x is not None:
        _out(json.dumps({"x": report["x"]}) + "\n", args.out)
    if res.status == OPTIMAL:
        return EXIT_OK
    if res.status == TIME_LIMIT:
        return EXIT_TIME_LIMIT
    return EXIT_INFEASIBLE


def cmd_evaluate(args):
    inst = _load(args.instance)
    x = _read_x(args.x, inst.m)
    dd = ddm.compile(inst.recourse_recursion(), ddm.Exact(), reduce_result=True) if not args.milp_recourse else None
    trace = evaluate_solution(inst, x, dd)
    report = {"z": trace.z, "iterations": len(trace.sub_values), "capped": trace.capped}
    if args.bound is not None:
        report["model_gap_pct"] = model_gap(args.bound, trace.z, inst.sense)
    print(json.dumps(report, indent=1))
    return EXIT_OK


def cmd_emit_lp(args):
    inst = _load(args.instance)
    built = build_for_method(inst, _method(args))
    _out(emit_lp_file(built.model), args.out)
    return EXIT_OK


def cmd_bench(args):
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read bench config: {exc}") from exc
    if args.out:
        cfg["output"] = args.out
    if args.workers:
        cfg["workers"] = args.workers
    try:
        config = BenchConfig.from_dict(cfg)
        config.method_list()
    except (TypeError, ValueError) as exc:
        raise InputError(str(exc)) from exc
    _, summary = run_bench(config)
    sys.stdout.write(summary)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="arbodd", description="Decision-diagram models for adaptive robust binary problems.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate an instance as JSON")
    g.add_argument("--family", choices=("capital", "assignment"), required=True)
    g.add_argument("--n", type=int, help="projects (capital)")
    g.add_argument("--factors", type=int, default=4, help="risk factors (capital)")
    g.add_argument("--m-frac", type=float, default=0.4, help="budget fraction (capital)")
    g.add_argument("--f", type=float, default=0.8, help="share earned by late investment (capital)")
    g.add_argument("--L", type=int, help="agents (assignment)")
    g.add_argument("--M", type=int, help="tasks (assignment)")
    g.add_argument("--beta", type=float, default=0.5, help="share of links that may be pre-selected")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", help="output file (default stdout)")
    g.set_defaults(func=cmd_gen)

    c = sub.add_parser("compile-dd", help="compile the recourse diagram and print statistics")
    c.add_argument("instance")
    c.add_argument("--mode", choices=("exact", "width", "distance"), default="exact")
    c.add_argument("--W", type=int)
    c.add_argument("--Q", type=float)
    c.add_argument("--direction", choices=(ddm.RELAXED, ddm.RESTRICTED), default=ddm.RELAXED)
    c.add_argument("--selector", choices=("random", "discard"), default="random")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--dump", help="write the arc listing to this file ('-' for stdout)")
    c.add_argument("--reduce", action="store_true", help="dump the reduced diagram")
    c.set_defaults(func=cmd_compile)

    s = sub.add_parser("solve", help="build and solve one model")
    s.add_argument("instance")
    _add_method_flags(s)
    s.add_argument("--solver", default="builtin", help="builtin or external:<path>")
    s.add_argument("--time-limit", type=float, default=math.inf)
    s.add_argument("--out", help="write the first-stage vector as JSON")
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("evaluate", help="worst-case value of a first-stage vector")
    e.add_argument("instance")
    e.add_argument("x", help="JSON list, {'x': [...]} or whitespace-separated 0/1 values")
    e.add_argument("--bound", type=float, help="dual bound for the model-based gap")
    e.add_argument("--milp-recourse", action="store_true", help="solve subproblems as binary programs")
    e.set_defaults(func=cmd_evaluate)

    lp = sub.add_parser("emit-lp", help="write a model in LP format")
    lp.add_argument("instance")
    _add_method_flags(lp)
    lp.add_argument("--out", help="output file (default stdout)")
    lp.set_defaults(func=cmd_emit_lp)

    b = sub.add_parser("bench", help="run a benchmark sweep from a JSON config")
    b.add_argument("config")
    b.add_argument("--out", help="CSV path (overrides the config)")
    b.add_argument("--workers", type=int)
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, SchemaViolation, ValueError) as exc:
        print(f"arbodd: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ArboError as exc:
        name = type(exc).__name__
        if name in ("InfeasibleRecourse", "EmptyDiagram", "Infeasible"):
            print(f"arbodd: infeasible: {exc}", file=sys.stderr)
            return EXIT_INFEASIBLE
        print(f"arbodd: input error: {name}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
