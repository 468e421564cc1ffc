import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from arbodd import instance as io
from arbodd.errors import SchemaViolation, ShapeMismatch, UnboundedUncertainty
from arbodd.generators import AssignmentSpec, CapitalBudgetingSpec, gen_assignment, gen_capital
from arbodd.instance import ArboInstance, LinkingSets, UncertaintySet, lift_to_selective
from conftest import small_instance, random_instance
from oracles import feasible_y, linked


def capital(seed=0, **kw):
    return gen_capital(CapitalBudgetingSpec(kw.pop("n", 8), seed=seed, **kw))


def assignment(seed=0, L=6, M=2, **kw):
    return gen_assignment(AssignmentSpec(L, M, seed=seed, **kw))


# ---------------------------------------------------------------------------
def test_generators_deterministic():
    assert io.dumps(capital(5)) == io.dumps(capital(5))
    assert io.dumps(capital(5)) != io.dumps(capital(6))
    assert io.dumps(assignment(3)) == io.dumps(assignment(3))


@pytest.mark.parametrize("seed", range(50))
def test_json_round_trip(seed):
    rng = np.random.default_rng(seed)
    inst = [capital(seed), assignment(seed), random_instance(rng)][seed % 3]
    back = io.loads(io.dumps(inst))
    assert back == inst
    assert io.dumps(back) == io.dumps(inst)


def test_file_round_trip(tmp_path):
    inst = capital(1)
    io.save(inst, tmp_path / "c.json")
    assert io.load(tmp_path / "c.json") == inst


@pytest.mark.parametrize("mutate, path", [
    (lambda d: d.pop("sense"), "sense"),
    (lambda d: d.__setitem__("sense", "maybe"), "sense"),
    (lambda d: d["y_rows"][0].__setitem__("coeffs", [1.0]), "y_rows[0].coeffs"),
    (lambda d: d["y_rows"][0].__setitem__("sense", "<"), "y_rows[0].sense"),
    (lambda d: d["uncertainty"].__setitem__("form", "ellipsoid"), "uncertainty.form"),
    (lambda d: d["linking"].__setitem__("u3", "all"), "linking.u3"),
])
def test_schema_violation_paths(mutate, path):
    d = io.to_dict(capital(0))
    mutate(d)
    with pytest.raises(SchemaViolation) as err:
        io.from_dict(d)
    assert err.value.path == path


def test_not_json():
    with pytest.raises(SchemaViolation):
        io.loads("{not json")


# ---------------------------------------------------------------------------
def test_capital_ranges():
    for seed in range(40):
        inst = capital(seed, n=25)
        g = np.array(inst.meta["params"]["g"])
        assert g.min() >= 1 and g.max() <= 50
        assert inst.meta["params"]["h"] == int(np.floor(0.4 * g.sum()))
        U = inst.xi_set.U
        assert np.all(np.abs(U) <= 1.0)
        # every payoff stays nonnegative on the factor box
        assert np.all(inst.xi_set.offset >= np.abs(U).sum(axis=1) - 1e-12)
        assert np.allclose(inst.xi_x + inst.xi_y, np.eye(25))


def test_capital_zero_budget():
    inst = capital(0, m_frac=0.0)
    assert inst.meta["params"]["h"] == 0
    assert [tuple(y) for y in feasible_y(inst)] == [tuple([0.0] * inst.n)]


def test_assignment_ranges():
    for seed in range(200):
        inst = assignment(seed)
        p = inst.meta["params"]
        a, b, links = np.array(p["a"]), np.array(p["b"]), p["links"]
        assert a.min() >= 1 and a.max() <= 10
        assert np.all(b >= 2 * a.max()) and np.all(b <= a.sum() // 2)
        agents = {ag for ag, _ in links}
        assert agents == set(range(6))
        assert links == sorted(links, key=lambda lk: (lk[1], lk[0]))
        xi0 = inst.xi_set.offset
        wts = a[[ag for ag, _ in links]]
        assert np.all(xi0 >= 0.5 * wts - 1e-12) and np.all(xi0 <= wts + 1e-12)
        assert inst.x_rhs[0] == np.floor(0.5 * len(links))


def test_assignment_uncertainty_budget():
    inst = assignment(4)
    xs = inst.xi_set
    S = inst.n
    rng = np.random.default_rng(0)
    for _ in range(50):
        val, alpha = xs.maximize(rng.normal(size=S))
        dev = np.abs(xs.xi(alpha) / xs.offset - 1.0)
        assert np.all(dev <= 0.5 + 1e-9)
        assert dev.sum() <= 0.1 * S + 1e-9


def test_assignment_recursion_matches_rows():
    from arbodd import dd

    inst = assignment(2)
    paths = {tuple(p) for p in dd.enumerate_paths(dd.compile(inst.recourse_recursion()))}
    assert paths == {tuple(int(v) for v in y) for y in feasible_y(inst)}


# ---------------------------------------------------------------------------
def test_uncertainty_checks():
    with pytest.raises(UnboundedUncertainty):
        UncertaintySet.polyhedral(-np.eye(2), np.zeros(2)).check_bounded()
    UncertaintySet.factor_box(np.ones((3, 2))).check_bounded()
    with pytest.raises(ShapeMismatch):
        UncertaintySet.polyhedral(np.eye(2), np.ones(3))


def test_linking_checks():
    with pytest.raises(ShapeMismatch):
        LinkingSets(u1=[(0, 0)], u2=[(0, 0)])
    with pytest.raises(ShapeMismatch):
        small_instance(linking=LinkingSets(u1=[(5, 0)]))
    lk = LinkingSets([(0, 0)], [(1, 1)], [(2, 2)])
    assert lk.satisfied([1, 1, 0], [0, 1, 1])
    assert not lk.satisfied([0, 1, 1], [1, 1, 1])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_lift_to_selective(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, n_max=4)
    F = rng.integers(-2, 3, size=(1, inst.m))
    G = rng.integers(0, 3, size=(1, inst.n))
    h = rng.integers(0, 4, size=1)
    lifted = lift_to_selective(F, G, h, inst)
    touched = lifted.meta["lifted_from"]
    Yl = feasible_y(lifted)
    for x in (rng.integers(0, 2, size=inst.m).astype(float) for _ in range(4)):
        direct = {tuple(y) for y in feasible_y(inst) if linked(inst, x, y) and F[0] @ x + G[0] @ y <= h[0]}
        via = {tuple(y[: inst.n]) for y in Yl if linked(lifted, x, y)}
        assert via == direct
        for y in Yl:
            if linked(lifted, x, y):
                assert np.array_equal(y[inst.n:], x[touched])


def test_payoff_and_min_form():
    inst = capital(0, n=4)
    x, y = np.array([1, 0, 0, 0.0]), np.array([1, 1, 0, 0.0])
    xi = inst.xi_set.xi(np.zeros(inst.xi_set.factor_dim))
    c, Bx, By = inst.min_form()
    assert inst.payoff(x, y, xi) == pytest.approx(-(c @ x + xi @ (Bx @ x + By @ y)))
    assert inst.payoff(x, y, xi) == pytest.approx(xi @ (0.2 * x + 0.8 * y))


def test_shape_errors():
    with pytest.raises(ShapeMismatch):
        ArboInstance([0, 0], None, ([[1, 1]], ["<="], [1]), LinkingSets(), UncertaintySet.factor_box(np.ones((3, 1))))
    with pytest.raises(ShapeMismatch):
        small_instance().copy(sense="sideways")


def test_generation_failure():
    from arbodd.errors import GenerationFailure

    # four agents on two tasks need four equal weights; the retry cap runs out
    with pytest.raises(GenerationFailure):
        assignment(0, L=4, M=2)
    with pytest.raises(GenerationFailure):
        assignment(0, L=3, M=2, sparsity=1.0)
