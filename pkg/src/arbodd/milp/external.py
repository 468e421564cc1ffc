"""Adapter for an external MILP executable.

The executable is called as ``<path> <model.lp> <solution.txt>`` and must
write a solution listing::

    objective <float>
    <varname> <float>
    ...

A first line of ``status infeasible`` (or ``unbounded``) is also accepted.
"""

from __future__ import annotations

import math
import os
import shutil
import subprocess
import tempfile
import time

import numpy as np

from ..errors import ExternalSolverError
from .lpfile import emit_lp_file
from .model import INFEASIBLE, OPTIMAL, UNBOUNDED, MilpModel, SolveResult


def find_external_solver(spec: str | None = None) -> str | None:
    """Resolve ``external:<path>`` (or a bare path / env ``ARBODD_EXTERNAL_SOLVER``)."""
    spec = spec or os.environ.get("ARBODD_EXTERNAL_SOLVER")
    if not spec:
        return None
    path = spec.split(":", 1)[1] if spec.startswith("external:") else spec
    found = shutil.which(path) or (path if os.path.isfile(path) and os.access(path, os.X_OK) else None)
    return found


def parse_solution(text: str, model: MilpModel) -> SolveResult:
    lines = [ln.split() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ExternalSolverError("empty solution file")
    head = lines[0]
    if head[0].lower() == "status" and len(head) > 1 and head[1].lower() in ("infeasible", "unbounded"):
        return SolveResult(INFEASIBLE if head[1].lower() == "infeasible" else UNBOUNDED)
    if head[0].lower() != "objective" or len(head) != 2:
        raise ExternalSolverError(f"expected 'objective <float>', got {' '.join(head)!r}")
    try:
        obj = float(head[1])
        x = np.zeros(model.num_vars)
        for parts in lines[1:]:
            if len(parts) != 2:
                raise ExternalSolverError(f"bad solution line {' '.join(parts)!r}")
            x[model.var_index(parts[0])] = float(parts[1])
    except (ValueError, KeyError) as exc:
        raise ExternalSolverError(f"malformed solution listing: {exc}") from exc
    return SolveResult(OPTIMAL, objective=obj, bound=obj, x=x)


def solve_external(model: MilpModel, executable: str, time_limit: float = math.inf) -> SolveResult:
    t0 = time.perf_counter()
    with tempfile.TemporaryDirectory() as tmp:
        lp = os.path.join(tmp, "model.lp")
        sol = os.path.join(tmp, "solution.txt")
        with open(lp, "w") as fh:
            fh.write(emit_lp_file(model))
        try:
            subprocess.run(
                [executable, lp, sol],
                check=True,
                capture_output=True,
                timeout=None if math.isinf(time_limit) else time_limit,
            )
        except (OSError, subprocess.SubprocessError) as exc:
            raise ExternalSolverError(f"external solver failed: {exc}") from exc
        if not os.path.exists(sol):
            raise ExternalSolverError("external solver wrote no solution file")
        with open(sol) as fh:
            res = parse_solution(fh.read(), model)
    res.wall_time = time.perf_counter() - t0
    return res
