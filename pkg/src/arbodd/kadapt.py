"""K-adaptability: commit to K recourse plans, pick the best after xi is seen.

For fixed plans the adversary's problem ``max_xi min_k`` is rewritten with
convex weights ``mu`` over the plans (minimax over the simplex) and then
dualised. The products ``mu_k y^k_i`` become ``q^k_i`` with the usual
McCormick rows, which are exact because ``y^k`` is binary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatch
from .instance import FACTOR_BOX, ArboInstance
from .milp.model import BINARY, EQ, GE, LE, MilpModel
from .nf import _Builder, dualize_uncertainty


@dataclass
class KadaptModel:
    K: int
    model: MilpModel
    y: np.ndarray  # (K, n) variable indices of the plans
    mu: np.ndarray
    q: np.ndarray

    def plans(self, res) -> np.ndarray:
        return np.round(res.x[self.y]).astype(np.int64)


def build_kadapt(inst: ArboInstance, K: int, symmetry_breaking: bool = False) -> KadaptModel:
    if K < 1:
        raise ValueError("K must be at least 1")
    b = _Builder(inst, f"kadapt_{K}")
    mdl, n = b.model, inst.n
    # the shared y block becomes the aggregate sum_k q^k
    ys = np.array([mdl.add_vars(f"yk{k}", n, 0.0, 1.0, BINARY) for k in range(K)]).reshape(K, n)
    mu = mdl.add_vars("mu", K, 0.0, 1.0)
    q = np.array([mdl.add_vars(f"q{k}", n, 0.0, 1.0) for k in range(K)]).reshape(K, n)
    mdl.add_constr(mu, np.ones(K), EQ, 1.0, "simplex")
    for k in range(K):
        for i in range(n):
            mdl.add_constr([q[k, i], ys[k, i]], [1.0, -1.0], LE, 0.0, f"mc_a_{k}_{i}")
            mdl.add_constr([q[k, i], mu[k]], [1.0, -1.0], LE, 0.0, f"mc_b_{k}_{i}")
            mdl.add_constr([q[k, i], mu[k], ys[k, i]], [1.0, -1.0, -1.0], GE, -1.0, f"mc_c_{k}_{i}")
        for r, (a, s, rhs) in enumerate(zip(inst.y_G, inst.y_senses, inst.y_rhs)):
            mdl.add_constr(ys[k], a, s, rhs, f"plan{k}_row_{r}")
        for i, j, s in inst.linking.rows():
            mdl.add_constr([ys[k, i], b.x[j]], [1.0, -1.0], s, 0.0, f"plan{k}_link_{i}_{j}")
    for i in range(n):
        mdl.add_constr(np.concatenate([[b.y[i]], q[:, i]]), np.concatenate([[1.0], -np.ones(K)]), EQ, 0.0, f"agg_{i}")
    if symmetry_breaking and K > 1:
        w = 2.0 ** np.arange(n - 1, -1, -1)
        for k in range(K - 1):
            mdl.add_constr(np.concatenate([ys[k], ys[k + 1]]), np.concatenate([w, -w]), GE, 0.0, f"lex_{k}")
    # plan-independent costs sit outside the simplex weights
    dualize_uncertainty(b)
    b.first_stage_rows()
    return KadaptModel(K, b.finish(), ys, mu, q)


def _is_capital(inst: ArboInstance) -> bool:
    n = inst.n
    return (
        inst.xi_set.form == FACTOR_BOX
        and inst.m == n
        and set(inst.linking.u3) == {(i, i) for i in range(n)}
        and not inst.linking.u1
        and not inst.linking.u2
    )


def _is_assignment(inst: ArboInstance) -> bool:
    n = inst.n
    return (
        inst.m == n
        and set(inst.linking.u1) == {(i, i) for i in range(n)}
        and not inst.linking.u2
        and not inst.linking.u3
        and inst.meta.get("family", "assignment") == "assignment"
    )


def build_kadapt_capital(inst: ArboInstance, K: int, symmetry_breaking: bool = False) -> KadaptModel:
    if not _is_capital(inst):
        raise ShapeMismatch("expected a capital-budgeting instance (factor box, y_i >= x_i links)")
    return build_kadapt(inst, K, symmetry_breaking)


def build_kadapt_assignment(inst: ArboInstance, K: int, symmetry_breaking: bool = False) -> KadaptModel:
    if not _is_assignment(inst):
        raise ShapeMismatch("expected an assignment instance (y_k <= x_k links)")
    return build_kadapt(inst, K, symmetry_breaking)
