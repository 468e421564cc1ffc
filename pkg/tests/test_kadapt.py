import itertools

import numpy as np
import pytest

from arbodd import dd
from arbodd.errors import ShapeMismatch
from arbodd.generators import AssignmentSpec, CapitalBudgetingSpec, gen_assignment, gen_capital
from arbodd.kadapt import build_kadapt, build_kadapt_assignment, build_kadapt_capital
from arbodd.milp import solve_milp
from arbodd.nf import build_exact_nf
from conftest import random_instance
from oracles import binary_vectors, feasible_y, linked, rows_ok, worst_case_min_form


def brute_kadapt(inst, K):
    """min over x and K-subsets of compatible recourse of the worst case."""
    s = -1.0 if inst.sense == "max" else 1.0
    Y = feasible_y(inst)
    best = np.inf
    for x in binary_vectors(inst.m):
        if not rows_ok(inst.x_A, inst.x_senses, inst.x_rhs, x):
            continue
        ys = [y for y in Y if linked(inst, x, y)]
        for plans in itertools.combinations_with_replacement(range(len(ys)), K):
            best = min(best, worst_case_min_form(inst, x, [ys[k] for k in plans]))
    return s * best


@pytest.mark.parametrize("seed", range(8))
@pytest.mark.parametrize("K", [1, 2])
def test_matches_enumeration(seed, K):
    inst = random_instance(np.random.default_rng(seed), n_max=4)
    ref = brute_kadapt(inst, K)
    res = solve_milp(build_kadapt(inst, K).model)
    if np.isinf(ref):
        assert res.status == "Infeasible"
    else:
        assert res.objective == pytest.approx(ref, abs=1e-6)


@pytest.mark.parametrize("seed", range(3))
def test_monotone_and_bounded_on_capital(seed):
    inst = gen_capital(CapitalBudgetingSpec(5, M=2, seed=seed))
    exact = solve_milp(build_exact_nf(inst, dd.compile(inst.recourse_recursion(), reduce_result=True))).objective
    vals = [solve_milp(build_kadapt_capital(inst, K, symmetry_breaking=True).model).objective for K in (1, 2, 3)]
    assert vals[0] <= vals[1] + 1e-6 <= vals[2] + 2e-6
    assert vals[2] <= exact + 1e-6


def test_symmetry_breaking_keeps_value():
    inst = gen_capital(CapitalBudgetingSpec(5, M=2, seed=7))
    a = solve_milp(build_kadapt(inst, 2).model).objective
    b = solve_milp(build_kadapt(inst, 2, symmetry_breaking=True).model).objective
    assert a == pytest.approx(b, abs=1e-6)


def test_plans_are_feasible():
    inst = gen_capital(CapitalBudgetingSpec(5, M=2, seed=3))
    km = build_kadapt_capital(inst, 2, symmetry_breaking=True)
    res = solve_milp(km.model)
    plans = km.plans(res)
    assert plans.shape == (2, 5)
    x = np.round(res.x[km.model.groups["x"]])
    for y in plans:
        assert inst.y_feasible(y) and inst.linking.satisfied(x, y)
    w = 2 ** np.arange(4, -1, -1)
    assert plans[0] @ w >= plans[1] @ w


def test_family_checks():
    cap = gen_capital(CapitalBudgetingSpec(4, seed=0))
    asg = gen_assignment(AssignmentSpec(6, 2, seed=0))
    with pytest.raises(ShapeMismatch):
        build_kadapt_assignment(cap, 2)
    with pytest.raises(ShapeMismatch):
        build_kadapt_capital(asg, 2)
    build_kadapt_assignment(asg, 1)
    with pytest.raises(ValueError):
        build_kadapt(cap, 0)
