"""Seeded instance generators for the two experiment families."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import GenerationFailure
from .instance import ArboInstance, LinkingSets, UncertaintySet
from .milp.model import LE, MAX

RETRY_CAP = 1000


@dataclass(frozen=True)
class CapitalBudgetingSpec:
    n: int
    M: int = 4
    m_frac: float = 0.4
    f: float = 0.8
    seed: int = 0


@dataclass(frozen=True)
class AssignmentSpec:
    L: int
    M: int
    beta: float = 0.5
    sparsity: float = 0.5
    seed: int = 0


def gen_capital(spec: CapitalBudgetingSpec) -> ArboInstance:
    """Projects with costs g, budget h and factor-driven payoffs.

    Payoff of project i is ``xi_i = o + U_i alpha`` with ``alpha`` in the
    unit box and the constant ``o = max_i |U_i|_1``, which keeps every
    payoff nonnegative. Early investment earns ``(1 - f) xi``, any investment
    by the second stage earns ``f xi``.
    """
    if spec.n < 1 or spec.M < 1:
        raise ValueError("need n >= 1 and M >= 1")
    if not 0.0 <= spec.f < 1.0:
        raise ValueError("first-mover share f must lie in [0, 1)")
    rng = np.random.default_rng(spec.seed)
    n, M = spec.n, spec.M
    g = rng.integers(1, 51, size=n)
    U = rng.uniform(-1.0, 1.0, size=(n, M))
    offset = np.full(n, float(np.abs(U).sum(axis=1).max()))
    h = int(math.floor(spec.m_frac * g.sum() + 1e-9))
    row = (g[None].astype(float), [LE], [float(h)])
    return ArboInstance(
        c=np.zeros(n),
        x_rows=row,
        y_rows=row,
        linking=LinkingSets(u3=[(i, i) for i in range(n)]),
        xi_set=UncertaintySet.factor_box(U, offset),
        sense=MAX,
        xi_x=(1.0 - spec.f) * np.eye(n),
        xi_y=spec.f * np.eye(n),
        meta={"family": "capital", "seed": spec.seed, "params": asdict(spec) | {"g": g.tolist(), "h": h}},
    )


def _links(rng, L, M, p):
    for _ in range(RETRY_CAP):
        keep = rng.random((L, M)) < p
        if keep.any(axis=1).all():
            # ordered by task, then agent
            return [(ag, task) for task in range(M) for ag in range(L) if keep[ag, task]]
    raise GenerationFailure(f"could not give every agent a link after {RETRY_CAP} draws")


def gen_assignment(spec: AssignmentSpec) -> ArboInstance:
    """Sparse agent/task graph with relative-deviation reward uncertainty.

    The uncertainty ``sum |xi/xi0 - 1| <= 0.1|S|, |xi/xi0 - 1| <= 0.5`` is
    written in the lifted factor space ``alpha = (delta, s)`` with
    ``xi = xi0 + diag(xi0) delta`` and ``|delta| <= s``.
    """
    L, M = spec.L, spec.M
    if L < 1 or M < 1:
        raise ValueError("need L >= 1 and M >= 1")
    rng = np.random.default_rng(spec.seed)
    links = _links(rng, L, M, 1.0 - spec.sparsity)
    for _ in range(RETRY_CAP):
        a = rng.integers(1, 11, size=L)
        lo, hi = 2 * int(a.max()), int(a.sum()) // M
        if lo <= hi:
            break
    else:
        raise GenerationFailure("capacity interval stayed empty; increase L or decrease M")
    b = rng.integers(lo, hi + 1, size=M)
    S = len(links)
    xi0 = np.array([rng.uniform(0.5 * a[ag], a[ag]) for ag, _ in links])

    G, rhs = [], []
    for task in range(M):
        G.append([float(a[ag]) if t == task else 0.0 for ag, t in links])
        rhs.append(float(b[task]))
    for agent in range(L):
        G.append([1.0 if ag == agent else 0.0 for ag, _ in links])
        rhs.append(1.0)
    I = np.eye(S)
    Z = np.zeros((S, S))
    T = np.vstack([
        np.hstack([I, -I]),  # delta - s <= 0
        np.hstack([-I, -I]),  # -delta - s <= 0
        np.hstack([Z, I]),  # s <= 0.5
        np.concatenate([np.zeros(S), np.ones(S)])[None],  # sum s <= 0.1 |S|
    ])
    d = np.concatenate([np.zeros(2 * S), np.full(S, 0.5), [0.1 * S]])
    U = np.hstack([np.diag(xi0), Z])
    budget = int(math.floor(spec.beta * S + 1e-9))
    return ArboInstance(
        c=np.zeros(S),
        x_rows=(np.ones((1, S)), [LE], [float(budget)]),
        y_rows=(np.array(G), [LE] * len(G), np.array(rhs)),
        linking=LinkingSets(u1=[(k, k) for k in range(S)]),
        xi_set=UncertaintySet.polyhedral(T, d, U, xi0),
        sense=MAX,
        meta={
            "family": "assignment",
            "seed": spec.seed,
            "params": asdict(spec) | {"links": [list(lk) for lk in links], "a": a.tolist(), "b": b.tolist()},
        },
    )
