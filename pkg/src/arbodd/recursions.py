"""Recursive (dynamic-programming) formulations that drive diagram compilation.

A recursion exposes, for every stage ``i`` (0-based, one per binary variable):

* ``feasible(i, s)``: the labels in {0, 1} allowed from state ``s``;
* ``transition(i, s, y)``: the successor state;
* ``merge_relaxed`` / ``merge_restricted``: collapse a group of states into
  one state that keeps every / only feasible continuations;
* ``distance`` and ``partition``: used by distance-based compilation.

States must be hashable and totally ordered (ints or tuples of ints), so that
layers can be sorted deterministically.
"""

from __future__ import annotations

import math
from typing import Hashable, Sequence

import numpy as np

from .errors import NegativeWeight, UnknownLink


class RecursiveModel:
    """Base class. Subclasses fill in the state-space callbacks."""

    n: int
    initial_state: Hashable

    def feasible(self, i, state) -> tuple:
        raise NotImplementedError

    def transition(self, i, state, y):
        raise NotImplementedError

    def merge_relaxed(self, states):
        raise NotImplementedError

    def merge_restricted(self, states):
        raise NotImplementedError

    def distance(self, a, b) -> float:
        raise NotImplementedError

    def has_merge(self, direction: str) -> bool:
        meth = getattr(type(self), f"merge_{direction}", None)
        return meth is not None and meth is not getattr(RecursiveModel, f"merge_{direction}")

    def partition(self, states: Sequence, q: float) -> list[list[int]]:
        """Group ``states`` so that each group has pairwise distance <= q.

        First-fit over the sorted states; a state opens a new group only when
        it is farther than ``q`` from some member of every open group, so any
        two groups contain a cross pair at distance > q.
        """
        order = sorted(range(len(states)), key=lambda k: states[k])
        groups: list[list[int]] = []
        for k in order:
            for grp in groups:
                if all(self.distance(states[k], states[j]) <= q for j in grp):
                    grp.append(k)
                    break
            else:
                groups.append([k])
        return groups

    def check_merge(self, i, members, merged, direction):
        """Assert the one-step relaxation/restriction guarantee of a merge.

        ``i`` is the stage whose actions are taken *from* the merged layer.
        """
        if i >= self.n:
            return
        got = set(self.feasible(i, merged))
        member_sets = [set(self.feasible(i, s)) for s in members]
        if direction == "relaxed":
            union = set().union(*member_sets)
            assert union <= got, f"relaxed merge lost actions {union - got} at stage {i}"
        else:
            union = set().union(*member_sets)
            assert got <= union, f"restricted merge added actions {got - union} at stage {i}"


def _as_int_if_integral(values):
    arr = np.asarray(values, dtype=float)
    if np.all(np.isfinite(arr)) and np.allclose(arr, np.round(arr)):
        return [int(round(v)) for v in arr]
    return [float(v) for v in arr]


class KnapsackRecursion(RecursiveModel):
    """Single knapsack row ``sum g_i y_i <= h``; state = capacity already used."""

    def __init__(self, g, h):
        g = _as_int_if_integral(g)
        if any(w < 0 for w in g):
            raise NegativeWeight(f"knapsack weights must be nonnegative, got {g}")
        if h < 0:
            raise NegativeWeight(f"knapsack capacity must be nonnegative, got {h}")
        self.g = g
        self.h = h
        self.n = len(g)
        self.initial_state = 0

    def feasible(self, i, state):
        if state + self.g[i] <= self.h:
            return (0, 1)
        return (0,)

    def transition(self, i, state, y):
        return state + self.g[i] * y

    def merge_relaxed(self, states):
        return min(states)

    def merge_restricted(self, states):
        return max(states)

    def distance(self, a, b):
        return abs(a - b)

    def partition(self, states, q):
        # sort ascending, open a new group once a state exceeds group min + q
        order = sorted(range(len(states)), key=lambda k: states[k])
        groups = []
        low = None
        for k in order:
            if low is None or states[k] > low + q:
                groups.append([k])
                low = states[k]
            else:
                groups[-1].append(k)
        return groups


def knapsack_recursion(g, h) -> KnapsackRecursion:
    return KnapsackRecursion(g, h)


class RowsRecursion(RecursiveModel):
    """Several rows ``A y <= b`` with arbitrary signs; state = per-row usage.

    A lookahead over the most negative remaining contribution keeps the
    recursion exact when coefficients are negative (e.g. ``>=`` rows that
    were negated). Rows whose joint feasibility fails deeper in the diagram
    leave dead-end nodes, which compilation prunes.
    """

    def __init__(self, A, b):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        self.rows = [_as_int_if_integral(r) for r in A]
        self.b = _as_int_if_integral(np.atleast_1d(b))
        self.n = A.shape[1]
        neg = np.minimum(A, 0.0)
        # lookahead[r][i] = most negative sum of row r over stages i+1..n-1
        tail = np.zeros_like(A)
        if self.n > 1:
            tail[:, :-1] = np.cumsum(neg[:, ::-1], axis=1)[:, ::-1][:, 1:]
        self.lookahead = tail
        self.initial_state = tuple(0 for _ in self.rows)
        self._tol = 1e-9

    def feasible(self, i, state):
        out = [0, 1]
        for y in (0, 1):
            for r, row in enumerate(self.rows):
                if state[r] + row[i] * y + self.lookahead[r, i] > self.b[r] + self._tol:
                    out.remove(y)
                    break
        return tuple(out)

    def transition(self, i, state, y):
        if y == 0:
            return state
        return tuple(s + row[i] for s, row in zip(state, self.rows))

    def merge_relaxed(self, states):
        return tuple(min(c) for c in zip(*states))

    def merge_restricted(self, states):
        return tuple(max(c) for c in zip(*states))

    def distance(self, a, b):
        return max((abs(u - v) for u, v in zip(a, b)), default=0)


def rows_recursion(A, b) -> RowsRecursion:
    return RowsRecursion(A, b)


class AssignmentRecursion(RecursiveModel):
    """Capacity rows per task plus at-most-one row per agent.

    Stage ``k`` decides link ``links[k] = (agent, task)``. The state is the
    flat tuple ``(used_0..used_{M-1}, assigned_0..assigned_{L-1})``.
    """

    def __init__(self, L, M, links, a, b, allow_cross_assignment=False):
        self.L, self.M = int(L), int(M)
        self.links = [tuple(int(v) for v in lk) for lk in links]
        for ag, task in self.links:
            if not (0 <= ag < self.L and 0 <= task < self.M):
                raise UnknownLink(f"link ({ag}, {task}) outside {self.L} agents x {self.M} tasks")
        self.a = _as_int_if_integral(a)
        self.b = _as_int_if_integral(b)
        if len(self.a) != self.L or len(self.b) != self.M:
            raise UnknownLink("weight/capacity vectors do not match L/M")
        self.n = len(self.links)
        self.initial_state = tuple([0] * (self.M + self.L))
        self.allow_cross_assignment = allow_cross_assignment
        self._amax = max(self.a) if self.a else 1

    def feasible(self, i, state):
        ag, task = self.links[i]
        if state[self.M + ag] == 0 and state[task] + self.a[ag] <= self.b[task]:
            return (0, 1)
        return (0,)

    def transition(self, i, state, y):
        if y == 0:
            return state
        ag, task = self.links[i]
        s = list(state)
        s[task] += self.a[ag]
        s[self.M + ag] = 1
        return tuple(s)

    def merge_relaxed(self, states):
        used = [min(c) for c in zip(*(s[: self.M] for s in states))]
        assigned = [min(c) for c in zip(*(s[self.M:] for s in states))]
        return tuple(used + assigned)

    def merge_restricted(self, states):
        used = [max(c) for c in zip(*(s[: self.M] for s in states))]
        assigned = [max(c) for c in zip(*(s[self.M:] for s in states))]
        return tuple(used + assigned)

    def distance(self, a, b):
        ham = sum(u != v for u, v in zip(a[self.M:], b[self.M:]))
        if ham and not self.allow_cross_assignment:
            return math.inf
        return sum(abs(u - v) for u, v in zip(a[: self.M], b[: self.M])) + self._amax * ham


def assignment_recursion(L, M, links, a, b, allow_cross_assignment=False) -> AssignmentRecursion:
    return AssignmentRecursion(L, M, links, a, b, allow_cross_assignment)
