"""CPLEX-style LP text: deterministic writer and a parser for our own output."""

from __future__ import annotations

import math
import re

import numpy as np

from ..errors import LPParseError, NameCollision
from .model import BINARY, CONTINUOUS, EQ, GE, LE, MAX, MIN, MilpModel

_SENSE_TOKEN = {LE: "<=", GE: ">=", EQ: "="}
_LINE_WIDTH = 72


def _num(v: float) -> str:
    if v == math.inf:
        return "inf"
    if v == -math.inf:
        return "-inf"
    return repr(float(v)) if v != int(v) or abs(v) >= 1e15 else str(int(v))


def _expr(terms, names) -> list[str]:
    """Tokens of a linear expression, wrapped later."""
    toks = []
    for i, v in terms:
        sign = "-" if v < 0 else "+"
        if not toks:
            toks.append(f"{'- ' if v < 0 else ''}{_num(abs(v))} {names[i]}")
        else:
            toks.append(f"{sign} {_num(abs(v))} {names[i]}")
    return toks or ["0 " + names[0]] if names else ["0"]


def _wrap(head: str, toks: list[str], tail: str = "") -> list[str]:
    lines, cur = [], head
    for t in toks + ([tail] if tail else []):
        if len(cur) + 1 + len(t) > _LINE_WIDTH and cur.strip():
            lines.append(cur)
            cur = "   " + t
        else:
            cur = f"{cur} {t}" if cur else t
    lines.append(cur)
    return lines


def emit_lp_file(model: MilpModel) -> str:
    names = model.var_names
    if len(set(names)) != len(names):
        raise NameCollision("duplicate variable names")
    rnames = [r.name for r in model.rows]
    if len(set(rnames)) != len(rnames):
        raise NameCollision("duplicate constraint names")
    out = [f"\\ {model.name}", "Maximize" if model.obj_sense == MAX else "Minimize"]
    terms = sorted(model.obj.items())
    toks = _expr([(i, v) for i, v in terms if v != 0.0], names)
    if model.obj_const:
        toks.append(f"{'-' if model.obj_const < 0 else '+'} {_num(abs(model.obj_const))}")
    out += _wrap(" obj:", toks)
    out.append("Subject To")
    for r in model.rows:
        order = np.argsort(r.idx, kind="stable")
        toks = _expr([(int(r.idx[k]), float(r.val[k])) for k in order], names)
        out += _wrap(f" {r.name}:", toks, f"{_SENSE_TOKEN[r.sense]} {_num(r.rhs)}")
    out.append("Bounds")
    for k, name in enumerate(names):
        lb, ub = model.lb[k], model.ub[k]
        if model.vtype[k] == BINARY and lb == 0.0 and ub == 1.0:
            continue
        if lb == -math.inf and ub == math.inf:
            out.append(f" {name} free")
        elif lb == ub:
            out.append(f" {name} = {_num(lb)}")
        else:
            out.append(f" {_num(lb)} <= {name} <= {_num(ub)}")
    bins = [names[k] for k in model.binaries]
    if bins:
        out.append("Binaries")
        out += _wrap("", bins)
    out.append("End")
    return "\n".join(out) + "\n"


_SECTIONS = {
    "minimize": "obj", "minimum": "obj", "min": "obj",
    "maximize": "obj", "maximum": "obj", "max": "obj",
    "subject to": "st", "such that": "st", "st": "st", "s.t.": "st",
    "bounds": "bounds", "binaries": "bin", "binary": "bin", "bin": "bin",
    "generals": "gen", "general": "gen", "end": "end",
}
_TERM = re.compile(r"([+-])?\s*([0-9.eE+-]*(?:inf)?)\s*([A-Za-z_][A-Za-z0-9_]*)?")


def _parse_float(tok):
    t = tok.lower()
    if t in ("inf", "+inf", "infinity", "+infinity"):
        return math.inf
    if t in ("-inf", "-infinity"):
        return -math.inf
    try:
        return float(tok)
    except ValueError as exc:
        raise LPParseError(f"bad number {tok!r}") from exc


def _parse_expr(text):
    """Return (list of (name, coeff), constant)."""
    toks = text.replace("+", " + ").replace("-", " - ").split()
    # re-glue exponents split by the replace above ("1e - 05")
    glued = []
    for t in toks:
        if glued and glued[-1][-1:] in ("e", "E") and re.fullmatch(r"[0-9.]+[eE]", glued[-1]) and t in "+-":
            glued[-1] += t
            continue
        if glued and re.fullmatch(r"[0-9.]+[eE][+-]", glued[-1]):
            glued[-1] += t
            continue
        glued.append(t)
    terms, const = [], 0.0
    sign, coef = 1.0, None
    dangling = False
    for t in glued:
        if t in "+-":
            if dangling:
                raise LPParseError(f"two operators in a row in {text.strip()!r}")
            sign = -1.0 if t == "-" else 1.0
            dangling = True
            continue
        dangling = False
        if re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", t) and t.lower() not in ("inf", "infinity"):
            terms.append((t, sign * (1.0 if coef is None else coef)))
            sign, coef = 1.0, None
        else:
            if coef is not None:
                const += sign * coef
                sign = 1.0
            coef = _parse_float(t)
    if dangling:
        raise LPParseError(f"expression ends with an operator: {text.strip()!r}")
    if coef is not None:
        const += sign * coef
    return terms, const


def parse_lp_file(text: str) -> MilpModel:
    """Parse the subset of LP format produced by :func:`emit_lp_file`."""
    lines = []
    for raw in text.splitlines():
        line = raw.split("\\", 1)[0].strip()
        if line:
            lines.append(line)
    # join continuation lines into statements per section
    section, name = None, "model"
    head = text.lstrip()
    if head.startswith("\\"):
        name = head[1:].splitlines()[0].strip() or "model"
    sense = MIN
    blocks: dict[str, list[str]] = {"obj": [], "st": [], "bounds": [], "bin": [], "gen": []}
    for line in lines:
        key = _SECTIONS.get(line.lower())
        if key is not None:
            section = key
            if key == "obj":
                sense = MAX if line.lower().startswith("max") else MIN
            if key == "end":
                break
            continue
        if section is None:
            raise LPParseError(f"content before any section: {line!r}")
        blocks[section].append(line)

    def statements(block, sep_re):
        out, cur = [], ""
        for line in block:
            starts_new = re.match(r"^[A-Za-z_][A-Za-z0-9_]*\s*:", line)
            if starts_new and cur:
                out.append(cur)
                cur = line
            else:
                cur = f"{cur} {line}".strip()
            if sep_re and re.search(sep_re, cur):
                out.append(cur)
                cur = ""
        if cur:
            out.append(cur)
        return out

    obj_text = " ".join(blocks["obj"])
    if ":" in obj_text:
        obj_text = obj_text.split(":", 1)[1]
    obj_terms, obj_const = _parse_expr(obj_text)

    rows = []
    for k, st in enumerate(statements(blocks["st"], r"(<=|>=|=<|=>|=)\s*[-+]?[0-9.eEinf+-]+\s*$")):
        rname = f"c{k}"
        m = re.match(r"^([A-Za-z_][A-Za-z0-9_]*)\s*:(.*)$", st)
        if m:
            rname, st = m.group(1), m.group(2)
        m = re.match(r"^(.*?)(<=|>=|=<|=>|=)(.*)$", st)
        if not m:
            raise LPParseError(f"constraint without sense: {st!r}")
        lhs, tok, rhs = m.groups()
        s = {"<=": LE, "=<": LE, ">=": GE, "=>": GE, "=": EQ}[tok]
        terms, const = _parse_expr(lhs)
        rows.append((rname, terms, s, _parse_float(rhs.strip()) - const))

    var_order: list[str] = []
    seen = set()

    def touch(n):
        if n not in seen:
            seen.add(n)
            var_order.append(n)

    for n, _ in obj_terms:
        touch(n)
    for _, terms, _, _ in rows:
        for n, _ in terms:
            touch(n)
    bounds = {}
    for line in blocks["bounds"]:
        toks = line.split()
        if len(toks) == 2 and toks[1].lower() == "free":
            bounds[toks[0]] = (-math.inf, math.inf)
            touch(toks[0])
        elif len(toks) == 5 and toks[1] == "<=" and toks[3] == "<=":
            bounds[toks[2]] = (_parse_float(toks[0]), _parse_float(toks[4]))
            touch(toks[2])
        elif len(toks) == 3 and toks[1] in ("=", "<=", ">="):
            lo, hi = bounds.get(toks[0], (0.0, math.inf))
            v = _parse_float(toks[2])
            bounds[toks[0]] = {"=": (v, v), "<=": (lo, v), ">=": (v, hi)}[toks[1]]
            touch(toks[0])
        else:
            raise LPParseError(f"unsupported bound line {line!r}")
    binset = set(" ".join(blocks["bin"]).split())
    if blocks["gen"]:
        raise LPParseError("general integer variables are not supported")
    for n in sorted(binset - seen):
        touch(n)
    # emitted files list variables in index order through the Bounds section;
    # recover that order when every variable appears there or in Binaries
    model = MilpModel(name)
    for n in var_order:
        vt = BINARY if n in binset else CONTINUOUS
        lo, hi = bounds.get(n, (0.0, 1.0) if vt == BINARY else (0.0, math.inf))
        model.add_var(n, lo, hi, vt)
    for rname, terms, s, rhs in rows:
        model.add_constr([model.var_index(n) for n, _ in terms], [v for _, v in terms], s, rhs, rname)
    model.set_objective([model.var_index(n) for n, _ in obj_terms], [v for _, v in obj_terms], sense, obj_const)
    return model


def models_equivalent(a: MilpModel, b: MilpModel, tol=1e-12) -> bool:
    """Same variables (by name), bounds, types, rows and objective."""
    if sorted(a.var_names) != sorted(b.var_names) or a.num_constrs != b.num_constrs:
        return False
    perm = np.array([b.var_index(n) for n in a.var_names])
    for k in range(a.num_vars):
        j = perm[k]
        if a.vtype[k] != b.vtype[j] or a.lb[k] != b.lb[j] or a.ub[k] != b.ub[j]:
            return False
    if a.obj_sense != b.obj_sense or abs(a.obj_const - b.obj_const) > tol:
        return False
    if not np.allclose(a.objective_vector(), b.objective_vector()[perm], atol=tol):
        return False
    for ra, rb in zip(a.rows, b.rows):
        if ra.sense != rb.sense or abs(ra.rhs - rb.rhs) > tol:
            return False
        da = dict(zip(ra.idx.tolist(), ra.val.tolist()))
        db = {int(np.where(perm == j)[0][0]): v for j, v in zip(rb.idx.tolist(), rb.val.tolist())}
        if da.keys() != db.keys() or any(abs(da[i] - db[i]) > tol for i in da):
            return False
    return True
