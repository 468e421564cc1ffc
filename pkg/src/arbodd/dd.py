"""Binary decision diagrams: top-down compilation, reduction and queries.

Layout conventions
------------------
Nodes carry contiguous integer ids grouped by layer (root is node 0, the
terminal is the last node). Inside a layer nodes are sorted by state, so the
order is deterministic and, for knapsack recursions, matches the usual
left-to-right drawing (ascending used capacity). Arcs are stored sorted by
``(layer, tail, label)``; arc ``k`` in that order is flow variable ``z_k``.
Layers are 0-based in the API: arcs of layer ``i`` decide ``y[i]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import CapExceeded, EmptyDiagram, Infeasible, InvalidMode
from .recursions import RecursiveModel

EXACT, RESTRICTED, RELAXED = "exact", "restricted", "relaxed"


@dataclass(frozen=True)
class Exact:
    pass


@dataclass(frozen=True)
class Width:
    W: int
    direction: str = RELAXED
    selector: Union[str, Callable] = "random"
    seed: int = 0


@dataclass(frozen=True)
class Distance:
    Q: float
    direction: str = RELAXED
    merge_prob: Optional[float] = None
    seed: int = 0


CompileMode = Union[Exact, Width, Distance]


@dataclass(frozen=True, eq=False)
class DecisionDiagram:
    n: int
    layer_ptr: np.ndarray  # nodes of layer i: layer_ptr[i]:layer_ptr[i+1]
    arc_tail: np.ndarray
    arc_head: np.ndarray
    arc_label: np.ndarray
    arc_ptr: np.ndarray  # arcs of layer i: arc_ptr[i]:arc_ptr[i+1]
    kind: str = EXACT
    states: Optional[tuple] = field(default=None, repr=False)

    @property
    def node_count(self):
        return int(self.layer_ptr[-1])

    @property
    def arc_count(self):
        return len(self.arc_tail)

    @property
    def root(self):
        return 0

    @property
    def terminal(self):
        return self.node_count - 1

    @property
    def widths(self):
        return tuple(int(w) for w in np.diff(self.layer_ptr))

    @property
    def arc_layer(self):
        return np.repeat(np.arange(self.n), np.diff(self.arc_ptr))

    def layer_nodes(self, i):
        return range(int(self.layer_ptr[i]), int(self.layer_ptr[i + 1]))

    def layer_arcs(self, i):
        return range(int(self.arc_ptr[i]), int(self.arc_ptr[i + 1]))

    def one_arcs(self, i):
        """Arc ids of the one-labelled arcs in layer ``i``."""
        sl = slice(int(self.arc_ptr[i]), int(self.arc_ptr[i + 1]))
        return np.flatnonzero(self.arc_label[sl] == 1) + sl.start

    def zero_arcs(self, i):
        sl = slice(int(self.arc_ptr[i]), int(self.arc_ptr[i + 1]))
        return np.flatnonzero(self.arc_label[sl] == 0) + sl.start

    def incidence(self):
        """Node-arc incidence (+1 at head, -1 at tail) as a scipy sparse matrix."""
        from scipy import sparse

        m = self.arc_count
        rows = np.concatenate([self.arc_head, self.arc_tail])
        cols = np.concatenate([np.arange(m), np.arange(m)])
        vals = np.concatenate([np.ones(m), -np.ones(m)])
        return sparse.csr_matrix((vals, (rows, cols)), shape=(self.node_count, m))

    def stats(self):
        return {
            "kind": self.kind,
            "n": self.n,
            "nodes": self.node_count,
            "arcs": self.arc_count,
            "max_width": max(self.widths),
            "widths": list(self.widths),
        }

    def dump(self) -> str:
        """Deterministic text dump: header ``n nodes arcs`` then one line per arc
        ``layer tail head label`` with 1-based layers and 0-based node ids."""
        lines = [f"{self.n} {self.node_count} {self.arc_count}"]
        for i in range(self.n):
            for k in self.layer_arcs(i):
                lines.append(f"{i + 1} {self.arc_tail[k]} {self.arc_head[k]} {self.arc_label[k]}")
        return "\n".join(lines) + "\n"

    def __repr__(self):
        return f"DecisionDiagram(kind={self.kind!r}, n={self.n}, nodes={self.node_count}, arcs={self.arc_count})"


def load_dump(text: str, kind: str = EXACT) -> DecisionDiagram:
    lines = [ln.split() for ln in text.strip().splitlines() if ln.strip()]
    n, n_nodes, n_arcs = (int(v) for v in lines[0])
    body = np.array([[int(v) for v in ln] for ln in lines[1:]], dtype=np.int64).reshape(-1, 4)
    if len(body) != n_arcs:
        raise ValueError(f"dump declares {n_arcs} arcs but lists {len(body)}")
    layer_of_node = np.full(n_nodes, -1)
    layer_of_node[0] = 0
    for lay, tail, head, _ in body:
        layer_of_node[tail] = lay - 1
        layer_of_node[head] = lay
    layer_ptr = np.searchsorted(layer_of_node, np.arange(n + 2))
    arc_ptr = np.searchsorted(body[:, 0] - 1, np.arange(n + 1))
    return DecisionDiagram(n, layer_ptr, body[:, 1].copy(), body[:, 2].copy(), body[:, 3].copy(), arc_ptr, kind)


def _assemble(n, layer_states, layer_arcs, kind) -> DecisionDiagram:
    """Build arrays from per-layer state lists and ``(tail_pos, label, head_pos)`` arcs."""
    widths = [len(s) for s in layer_states]
    layer_ptr = np.zeros(n + 2, dtype=np.int64)
    layer_ptr[1:] = np.cumsum(widths)
    tails, heads, labels, arc_ptr = [], [], [], [0]
    for i, arcs in enumerate(layer_arcs):
        arcs = sorted(arcs)
        for tp, y, hp in arcs:
            tails.append(layer_ptr[i] + tp)
            heads.append(layer_ptr[i + 1] + hp)
            labels.append(y)
        arc_ptr.append(len(tails))
    states = tuple(s for layer in layer_states for s in layer)
    return DecisionDiagram(
        n,
        layer_ptr,
        np.asarray(tails, dtype=np.int64),
        np.asarray(heads, dtype=np.int64),
        np.asarray(labels, dtype=np.int8),
        np.asarray(arc_ptr, dtype=np.int64),
        kind,
        states,
    )


def _prune(n, layer_states, layer_arcs):
    """Drop dead ends (backward) and then unreachable nodes (forward).

    ``layer_arcs[i]`` holds ``(tail_pos, label, head_pos)`` triples. Returns new
    lists with positions renumbered; raises EmptyDiagram when the root dies.
    """
    alive = [None] * (n + 1)
    alive[n] = [True]
    for i in range(n - 1, -1, -1):
        ok = [False] * len(layer_states[i])
        kept = []
        for tp, y, hp in layer_arcs[i]:
            if alive[i + 1][hp]:
                ok[tp] = True
                kept.append((tp, y, hp))
        layer_arcs[i] = kept
        alive[i] = ok
    if not alive[0][0]:
        raise EmptyDiagram("recursion admits no feasible solution")
    reach = [None] * (n + 1)
    reach[0] = [True]
    for i in range(n):
        r = [False] * len(layer_states[i + 1])
        kept = []
        for tp, y, hp in layer_arcs[i]:
            if reach[i][tp] and alive[i][tp]:
                r[hp] = True
                kept.append((tp, y, hp))
        layer_arcs[i] = kept
        reach[i + 1] = r
    new_states, remaps = [], []
    for i in range(n + 1):
        keep = [p for p in range(len(layer_states[i])) if reach[i][p] and alive[i][p]]
        remaps.append({p: k for k, p in enumerate(keep)})
        new_states.append([layer_states[i][p] for p in keep])
    new_arcs = [[(remaps[i][tp], y, remaps[i + 1][hp]) for tp, y, hp in layer_arcs[i]] for i in range(n)]
    return new_states, new_arcs


def _select_random(states, k, rng):
    return sorted(rng.choice(len(states), size=k, replace=False).tolist())


_SELECTORS = {"random": _select_random, "discard": _select_random}


def _check_partition(model, states, groups, q):
    for grp in groups:
        for a in grp:
            for b in grp:
                assert model.distance(states[a], states[b]) <= q, "partition group wider than Q"
    for gi in range(len(groups)):
        for gj in range(gi + 1, len(groups)):
            assert any(
                model.distance(states[a], states[b]) > q for a in groups[gi] for b in groups[gj]
            ), "two partition groups could have been one"


def compile(model: RecursiveModel, mode: CompileMode = Exact(), *, check=False, reduce_result=False) -> DecisionDiagram:
    """Compile a recursion into an exact, restricted or relaxed diagram.

    Merging happens after each layer is fully built. With ``check=True`` every
    merge and partition is verified against the recursion's guarantees.
    """
    n = model.n
    if n < 1:
        raise InvalidMode("recursion must have at least one variable")
    kind = EXACT
    rng = None
    if isinstance(mode, (Width, Distance)):
        if mode.direction not in (RESTRICTED, RELAXED):
            raise InvalidMode(f"unknown direction {mode.direction!r}")
        discard = isinstance(mode, Width) and mode.selector == "discard"
        if discard and mode.direction != RESTRICTED:
            raise InvalidMode("the discard selector only builds restricted diagrams")
        if not discard and not model.has_merge(mode.direction):
            raise InvalidMode(f"recursion has no {mode.direction} merge operator")
        if isinstance(mode, Width) and mode.W < 1:
            raise InvalidMode("width must be positive")
        if isinstance(mode, Distance) and mode.Q < 0:
            raise InvalidMode("distance threshold must be nonnegative")
        kind = mode.direction
        rng = np.random.default_rng(mode.seed)
    elif not isinstance(mode, Exact):
        raise InvalidMode(f"unknown compile mode {mode!r}")

    layer_states = [[model.initial_state]]
    layer_arcs = []
    for i in range(n - 1):
        arcs = []
        succ = set()
        for pos, s in enumerate(layer_states[i]):
            for y in model.feasible(i, s):
                t = model.transition(i, s, y)
                succ.add(t)
                arcs.append((pos, y, t))
        states = sorted(succ)
        mapping = _merge_layer(model, mode, states, rng, i + 1, check)
        new_states = sorted({v for v in mapping.values() if v is not None})
        pos_of = {s: k for k, s in enumerate(new_states)}
        layer_arcs.append(
            [(tp, y, pos_of[mapping[t]]) for tp, y, t in arcs if mapping[t] is not None]
        )
        layer_states.append(new_states)
    last = []
    for pos, s in enumerate(layer_states[n - 1]):
        for y in model.feasible(n - 1, s):
            last.append((pos, y, 0))
    layer_arcs.append(last)
    layer_states.append([None])
    layer_states, layer_arcs = _prune(n, layer_states, layer_arcs)
    dd = _assemble(n, layer_states, layer_arcs, kind)
    return reduce(dd) if reduce_result else dd


def _merge_layer(model, mode, states, rng, stage, check):
    """Map each state of a freshly built layer to its surviving state (or None)."""
    mapping = {s: s for s in states}
    if isinstance(mode, Exact):
        return mapping
    direction = mode.direction
    merge = getattr(model, f"merge_{direction}", None)
    if isinstance(mode, Width):
        if len(states) <= mode.W:
            return mapping
        select = _SELECTORS.get(mode.selector, mode.selector) if isinstance(mode.selector, str) else mode.selector
        if select is None or not callable(select):
            raise InvalidMode(f"unknown selector {mode.selector!r}")
        if mode.selector == "discard":
            for k in select(states, len(states) - mode.W, rng):
                mapping[states[k]] = None
            return mapping
        picked = [states[k] for k in select(states, len(states) - mode.W + 1, rng)]
        merged = merge(picked)
        if check:
            model.check_merge(stage, picked, merged, direction)
        for s in picked:
            mapping[s] = merged
        return mapping
    groups = model.partition(states, mode.Q)
    if check:
        _check_partition(model, states, groups, mode.Q)
    for grp in groups:
        if len(grp) < 2:
            continue
        if mode.merge_prob is not None and rng.random() >= mode.merge_prob:
            continue
        members = [states[k] for k in grp]
        merged = merge(members)
        if check:
            model.check_merge(stage, members, merged, direction)
        for s in members:
            mapping[s] = merged
    return mapping


def reduce(dd: DecisionDiagram) -> DecisionDiagram:
    """Bottom-up merge of nodes with identical outgoing (label, head) sets."""
    n = dd.n
    # new position of every node inside its layer after merging
    newpos = np.zeros(dd.node_count, dtype=np.int64)
    keep = [None] * (n + 1)
    keep[n] = [dd.terminal]
    out = {}
    for k in range(dd.arc_count):
        out.setdefault(int(dd.arc_tail[k]), []).append(k)
    for i in range(n - 1, -1, -1):
        sig_pos = {}
        reps = []
        for v in dd.layer_nodes(i):
            sig = tuple((int(dd.arc_label[k]), int(newpos[dd.arc_head[k]])) for k in out.get(v, ()))
            if sig not in sig_pos:
                sig_pos[sig] = len(reps)
                reps.append(v)
            newpos[v] = sig_pos[sig]
        keep[i] = reps
    states = dd.states
    layer_states = [[states[v] if states else v for v in keep[i]] for i in range(n + 1)]
    layer_arcs = []
    for i in range(n):
        arcs = []
        for p, v in enumerate(keep[i]):
            for k in out.get(v, ()):
                arcs.append((p, int(dd.arc_label[k]), int(newpos[dd.arc_head[k]])))
        layer_arcs.append(arcs)
    red = _assemble(n, layer_states, layer_arcs, dd.kind)
    if not states:
        red = DecisionDiagram(n, red.layer_ptr, red.arc_tail, red.arc_head, red.arc_label, red.arc_ptr, dd.kind)
    return red


def from_paths(n: int, paths: Sequence[Sequence[int]], kind: str = EXACT) -> DecisionDiagram:
    """Unreduced trie whose root-terminal paths are exactly ``paths``."""
    paths = sorted({tuple(int(v) for v in p) for p in paths})
    if not paths:
        raise EmptyDiagram("no paths given")
    layer_states = [[()]]
    layer_arcs = []
    for i in range(n):
        if i < n - 1:
            nxt = sorted({p[: i + 1] for p in paths})
        else:
            nxt = [None]
        pos_of = {s: k for k, s in enumerate(nxt)}
        cur_pos = {s: k for k, s in enumerate(layer_states[i])}
        arcs = set()
        for p in paths:
            head = p[: i + 1] if i < n - 1 else None
            arcs.add((cur_pos[p[:i]], p[i], pos_of[head]))
        layer_arcs.append(sorted(arcs))
        layer_states.append(nxt)
    return _assemble(n, layer_states, layer_arcs, kind)


def count_paths(dd: DecisionDiagram) -> int:
    counts = [0] * dd.node_count
    counts[dd.terminal] = 1
    for k in range(dd.arc_count - 1, -1, -1):
        counts[dd.arc_tail[k]] += counts[dd.arc_head[k]]
    return counts[dd.root]


def enumerate_paths(dd: DecisionDiagram, cap: int = 10**6) -> list:
    """All root-terminal label vectors, lexicographically ordered."""
    total = count_paths(dd)
    if total > cap:
        raise CapExceeded(f"diagram has {total} paths, cap is {cap}")
    out = {}
    for k in range(dd.arc_count):
        out.setdefault(int(dd.arc_tail[k]), []).append(k)
    suffix = {dd.terminal: [()]}
    for i in range(dd.n - 1, -1, -1):
        for v in dd.layer_nodes(i):
            acc = []
            for k in out.get(v, ()):
                lab = int(dd.arc_label[k])
                acc.extend((lab,) + s for s in suffix[int(dd.arc_head[k])])
            suffix[v] = acc
    return suffix[dd.root]


def linking_mask(linking, x_hat, n):
    """Arc availability per layer induced by a first-stage vector.

    Returns ``(allow_zero, allow_one)``. A one-arc in layer i is blocked when
    some (i, j) in U1 or U2 has x_j = 0; a zero-arc is blocked when some
    (i, j) in U2 or U3 has x_j = 1.
    """
    allow_zero = np.ones(n, dtype=bool)
    allow_one = np.ones(n, dtype=bool)
    x_hat = np.asarray(x_hat)
    for i, j in list(linking.u1) + list(linking.u2):
        if x_hat[j] < 0.5:
            allow_one[i] = False
    for i, j in list(linking.u2) + list(linking.u3):
        if x_hat[j] > 0.5:
            allow_zero[i] = False
    return allow_zero, allow_one


def filtered_shortest_path(dd: DecisionDiagram, weights, mask=None):
    """Minimum-weight root-terminal path over unblocked arcs.

    One-arcs of layer i cost ``weights[i]``, zero-arcs cost nothing. ``mask`` is
    ``(allow_zero, allow_one)`` as produced by :func:`linking_mask`.
    Returns ``(value, y)``.
    """
    if dd.kind != EXACT:
        raise InvalidMode("shortest-path queries need an exact diagram")
    w = np.asarray(weights, dtype=float)
    if len(w) != dd.n:
        raise ValueError(f"expected {dd.n} weights, got {len(w)}")
    layer = dd.arc_layer
    lab = dd.arc_label.astype(bool)
    cost = np.where(lab, w[layer], 0.0)
    if mask is None:
        allowed = np.ones(dd.arc_count, dtype=bool)
    else:
        allow_zero, allow_one = (np.asarray(m, dtype=bool) for m in mask)
        allowed = np.where(lab, allow_one[layer], allow_zero[layer])
    dist = np.full(dd.node_count, np.inf)
    dist[dd.root] = 0.0
    for i in range(dd.n):
        sl = slice(int(dd.arc_ptr[i]), int(dd.arc_ptr[i + 1]))
        ok = allowed[sl]
        cand = dist[dd.arc_tail[sl]] + cost[sl]
        np.minimum.at(dist, dd.arc_head[sl][ok], cand[ok])
    if not np.isfinite(dist[dd.terminal]):
        raise Infeasible("no path survives the mask")
    y = np.zeros(dd.n, dtype=np.int64)
    cur = dd.terminal
    for i in range(dd.n - 1, -1, -1):
        for k in dd.layer_arcs(i):
            if allowed[k] and dd.arc_head[k] == cur:
                t = dd.arc_tail[k]
                if abs(dist[t] + cost[k] - dist[cur]) <= 1e-9 * max(1.0, abs(dist[cur])):
                    y[i] = dd.arc_label[k]
                    cur = t
                    break
        else:  # pragma: no cover - dist bookkeeping guarantees a predecessor
            raise RuntimeError("shortest-path backtrack failed")
    return float(dist[dd.terminal]), y
