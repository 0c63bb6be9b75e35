"""Cut analysis of marked graphs.

A set F of z-edges splits the Z-graph into two sides A and B when every
edge of F runs between them. Such a cut is *good* when the smaller side
carries at most |F| output marks (or at most t marks under the ``literal``
condition). A marked graph is t-robust when every cut of at most t z-edges
is good.

Rather than walking all z-edge subsets, :func:`is_t_robust` enumerates the
vertex bipartitions (S, V \\ S) of the underlying cubic graph that cross at
most t graph edges. For fixed S with d crossing edges, the cheapest cut cuts
each crossing edge once, and the marks on crossing edges can be pushed to
either side by choosing where on the edge to cut. A violation at weight d
therefore exists iff

    inside(S) + crossing >= need,  inside(V \\ S) + crossing >= need,
    total marks >= 2 * need

with ``need = d + 1`` (per-weight) or ``need = t + 1`` (literal). Cutting an
edge path twice isolates at most two marks at a cost of two, so minimal
violations never do it. The bipartitions are generated from a spanning tree:
every S crossing at most t graph edges crosses at most t tree edges, and S is
the XOR of the subtrees hanging below those tree edges.
"""

from __future__ import annotations

import itertools
import logging
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .graph_core import MarkedGraph
from .sat import CNF, SAT, BackendError, SatResult, at_most_k, solve
from .treeplan import ZGraph, to_zgraph, zedge_offsets

logger = logging.getLogger(__name__)

PER_WEIGHT = "per_weight"
LITERAL = "literal"

__all__ = [
    "BackendError",
    "Cut",
    "RobustnessReport",
    "cut_sides",
    "decode_nonlocal_cut",
    "has_nonlocal_cut_bruteforce",
    "has_nonlocal_cut_sat",
    "is_t_robust",
    "nonlocal_cut_cnf",
    "small_vertex_cuts",
    "solve_cnf",
    "validate_cut",
]


@dataclass(frozen=True)
class Cut:
    """A bipartition witness.

    For z-cuts, ``cut_edges`` are z-edge ids and the sides are spider ids.
    For graph cuts (nonlocal-cut search), they are canonical graph edge ids
    and vertex ids, and ``marks_a`` counts marks on edges inside side A.
    """

    cut_edges: tuple[int, ...]
    side_a_vertices: frozenset[int]
    side_b_vertices: frozenset[int]
    marks_a: int
    marks_b: int

    @property
    def weight(self) -> int:
        return len(self.cut_edges)

    def to_json(self) -> dict:
        return {
            "cut_edges": list(self.cut_edges),
            "side_a": sorted(self.side_a_vertices),
            "side_b": sorted(self.side_b_vertices),
            "marks_a": self.marks_a,
            "marks_b": self.marks_b,
        }


@dataclass(frozen=True)
class RobustnessReport:
    verdict: str
    t: int
    fault_weights_checked: int
    counterexample: Cut | None
    cuts_enumerated: int
    condition: str = PER_WEIGHT

    @property
    def robust(self) -> bool:
        return self.verdict == "robust"

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "t": self.t,
            "condition": self.condition,
            "fault_weights_checked": self.fault_weights_checked,
            "cuts_enumerated": self.cuts_enumerated,
            "counterexample": None if self.counterexample is None else self.counterexample.to_json(),
        }


def cut_sides(z: ZGraph, cut_edges: Sequence[int]) -> tuple[frozenset[int], frozenset[int]] | None:
    """Split the Z-graph along ``cut_edges``.

    Returns the two sides when the components left after removing the edges
    can be 2-coloured so that every removed edge joins the two colours and
    the colouring is unique; side A holds spider 0 unless it is empty.
    Returns ``None`` otherwise.
    """
    removed = set(cut_edges)
    if len(removed) != len(cut_edges):
        return None
    n = z.spider_count
    adj = z.adjacency()
    comp = [-1] * n
    ncomp = 0
    for s in range(n):
        if comp[s] >= 0:
            continue
        comp[s] = ncomp
        queue = deque([s])
        while queue:
            x = queue.popleft()
            for y, e in adj[x]:
                if e not in removed and comp[y] < 0:
                    comp[y] = ncomp
                    queue.append(y)
        ncomp += 1
    cadj: list[set[int]] = [set() for _ in range(ncomp)]
    for e in removed:
        a, b = z.z_edges[e]
        if comp[a] == comp[b]:
            return None
        cadj[comp[a]].add(comp[b])
        cadj[comp[b]].add(comp[a])
    colour = [-1] * ncomp
    colour[0] = 0
    queue = deque([0])
    while queue:
        c = queue.popleft()
        for d in cadj[c]:
            if colour[d] < 0:
                colour[d] = 1 - colour[c]
                queue.append(d)
            elif colour[d] == colour[c]:
                return None
    if -1 in colour:
        return None
    side_a = frozenset(s for s in range(n) if colour[comp[s]] == 0)
    side_b = frozenset(range(n)) - side_a
    if not side_a or not side_b:
        return None
    return side_a, side_b


def validate_cut(g: MarkedGraph, cut: Cut, t: int, condition: str = PER_WEIGHT) -> bool:
    """Independent re-check that ``cut`` is a violating z-cut of ``g``."""
    z = to_zgraph(g)
    if not g.is_connected():
        return cut.weight == 0
    sides = cut_sides(z, cut.cut_edges)
    if sides is None or {sides[0], sides[1]} != {cut.side_a_vertices, cut.side_b_vertices}:
        return False
    ma = sum(1 for s in cut.side_a_vertices if z.is_boundary(s))
    mb = sum(1 for s in cut.side_b_vertices if z.is_boundary(s))
    if (ma, mb) != (cut.marks_a, cut.marks_b):
        return False
    bound = cut.weight if condition == PER_WEIGHT else t
    return cut.weight <= t and min(ma, mb) > bound


# ---------------------------------------------------------------------------
# exact robustness check


def _spanning_tree_subtrees(g: MarkedGraph) -> np.ndarray:
    """Row i is the vertex set below the i-th tree edge of a BFS tree from 0."""
    n = g.vertex_count
    nbr = g.neighbors()
    parent = [-1] * n
    order = [0]
    seen = [False] * n
    seen[0] = True
    for x in order:
        for y in sorted(nbr[x]):
            if not seen[y]:
                seen[y] = True
                parent[y] = x
                order.append(y)
    below = np.zeros((n, n), dtype=bool)
    for v in reversed(order):
        below[v, v] = True
        if parent[v] >= 0:
            below[parent[v]] |= below[v]
    return below[1:]


def _combo_chunks(m: int, t: int, chunk: int) -> Iterator[np.ndarray]:
    for k in range(1, min(t, m) + 1):
        it = itertools.combinations(range(m), k)
        while True:
            block = list(itertools.islice(it, chunk))
            if not block:
                break
            yield np.array(block, dtype=np.int64)


def _scan_chunk(args) -> tuple[int, list[tuple[int, bytes]]]:
    """Evaluate one block of tree-edge subsets; return (count, violating sets)."""
    combos, below, us, vs, marks, t, total, literal = args
    sets = np.bitwise_xor.reduce(below[combos], axis=1)
    su = sets[:, us]
    sv = sets[:, vs]
    cross = su != sv
    d = cross.sum(axis=1)
    a = (su & sv) @ marks
    b = cross @ marks
    c = (~su & ~sv) @ marks
    need = np.full(d.shape, t + 1) if literal else d + 1
    bad = (d <= t) & (a + b >= need) & (c + b >= need) & (total >= 2 * need)
    hits = [(int(d[i]), np.packbits(sets[i]).tobytes()) for i in np.flatnonzero(bad)]
    return len(combos), hits


def small_vertex_cuts(g: MarkedGraph, t: int) -> list[tuple[frozenset[int], int]]:
    """Every vertex set S avoiding vertex 0 whose edge boundary has at most t edges.

    Returned as (S, boundary size) pairs in enumeration order. Each
    bipartition appears once, represented by the side without vertex 0.
    """
    if g.vertex_count < 2:
        return []
    below = _spanning_tree_subtrees(g)
    us = np.array([u for u, _, _ in g.edges], dtype=np.int64)
    vs = np.array([v for _, v, _ in g.edges], dtype=np.int64)
    out = []
    for combos in _combo_chunks(below.shape[0], t, 20_000):
        sets = np.bitwise_xor.reduce(below[combos], axis=1)
        d = (sets[:, us] != sets[:, vs]).sum(axis=1)
        for i in np.flatnonzero(d <= t):
            out.append((frozenset(np.flatnonzero(sets[i]).tolist()), int(d[i])))
    return out


def _best_zcut(g: MarkedGraph, in_s: np.ndarray, t: int, literal: bool) -> tuple[int, ...] | None:
    """Colex-least z-edge set realising a violation for vertex set S."""
    offsets = zedge_offsets(g)
    a = c = 0
    crossing = []
    for i, (u, v, m) in enumerate(g.edges):
        if in_s[u] and in_s[v]:
            a += m
        elif not in_s[u] and not in_s[v]:
            c += m
        else:
            crossing.append((i, m, bool(in_s[u])))
    d = len(crossing)
    need = t + 1 if literal else d + 1
    best = None
    for choice in itertools.product(*[range(m + 1) for _, m, _ in crossing]):
        to_s = sum(s if u_in else m - s for s, (_, m, u_in) in zip(choice, crossing))
        n_s = a + to_s
        n_rest = c + sum(m for _, m, _ in crossing) - to_s
        if n_s >= need and n_rest >= need:
            ids = tuple(sorted(offsets[i] + s for s, (i, _, _) in zip(choice, crossing)))
            if best is None or ids[::-1] < best[::-1]:
                best = ids
    return best


def is_t_robust(g: MarkedGraph, t: int, condition: str = PER_WEIGHT, jobs: int = 1,
                chunk: int = 20_000) -> RobustnessReport:
    """Decide whether every z-cut of weight at most ``t`` is good.

    The counterexample, if any, has the least weight and among those the
    colexicographically least sorted z-edge tuple. The result does not depend
    on ``jobs``.
    """
    if t < 1:
        raise ValueError("t must be positive")
    if condition not in (PER_WEIGHT, LITERAL):
        raise ValueError(f"unknown condition {condition!r}")
    literal = condition == LITERAL
    z = to_zgraph(g)
    if not g.is_connected():
        comp = _component_of_zero(z)
        ma = sum(1 for s in comp if z.is_boundary(s))
        cut = Cut((), frozenset(comp), frozenset(range(z.spider_count)) - comp, ma, g.mark_count - ma)
        return RobustnessReport("violated", t, t, cut, 0, condition)
    if g.vertex_count < 2:
        return RobustnessReport("robust", t, t, None, 0, condition)
    below = _spanning_tree_subtrees(g)
    us = np.array([u for u, _, _ in g.edges], dtype=np.int64)
    vs = np.array([v for _, v, _ in g.edges], dtype=np.int64)
    marks = np.array(g.marks, dtype=np.int64)
    total = g.mark_count
    tasks = ((combos, below, us, vs, marks, t, total, literal)
             for combos in _combo_chunks(below.shape[0], t, chunk))
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            results = list(pool.map(_scan_chunk, tasks))
    else:
        results = [_scan_chunk(task) for task in tasks]
    enumerated = 1 + sum(r[0] for r in results)
    hits = [h for r in results for h in r[1]]
    if not hits:
        return RobustnessReport("robust", t, t, None, enumerated, condition)
    dmin = min(d for d, _ in hits)
    best = None
    n = g.vertex_count
    for d, packed in hits:
        if d != dmin:
            continue
        in_s = np.unpackbits(np.frombuffer(packed, dtype=np.uint8))[:n].astype(bool)
        ids = _best_zcut(g, in_s, t, literal)
        if ids is not None and (best is None or ids[::-1] < best[::-1]):
            best = ids
    assert best is not None
    side_a, side_b = cut_sides(z, best)
    ma = sum(1 for s in side_a if z.is_boundary(s))
    cut = Cut(best, side_a, side_b, ma, total - ma)
    return RobustnessReport("violated", t, t, cut, enumerated, condition)


def _component_of_zero(z: ZGraph) -> frozenset[int]:
    adj = z.adjacency()
    seen = {0}
    queue = deque([0])
    while queue:
        x = queue.popleft()
        for y, _ in adj[x]:
            if y not in seen:
                seen.add(y)
                queue.append(y)
    return frozenset(seen)


# ---------------------------------------------------------------------------
# nonlocal cuts


def _graph_components(n: int, pairs: Sequence[tuple[int, int]]) -> list[int]:
    comp = [-1] * n
    adj: list[list[int]] = [[] for _ in range(n)]
    for u, v in pairs:
        adj[u].append(v)
        adj[v].append(u)
    label = 0
    for s in range(n):
        if comp[s] >= 0:
            continue
        comp[s] = label
        stack = [s]
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if comp[y] < 0:
                    comp[y] = label
                    stack.append(y)
        label += 1
    return comp


def _colex_combinations(m: int, k: int) -> Iterator[tuple[int, ...]]:
    if k == 0:
        yield ()
        return
    for last in range(k - 1, m):
        for head in _colex_combinations(last, k - 1):
            yield head + (last,)


def has_nonlocal_cut_bruteforce(g: MarkedGraph, t: int) -> Cut | None:
    """First (by weight, then colex) edge cut of size <= t whose two sides both hold a cycle."""
    pairs = [(u, v) for u, v, _ in g.edges]
    n = g.vertex_count
    for k in range(1, t + 1):
        for combo in _colex_combinations(len(pairs), k):
            removed = set(combo)
            comp = _graph_components(n, [p for i, p in enumerate(pairs) if i not in removed])
            if max(comp) != 1:
                continue
            if any(comp[pairs[i][0]] == comp[pairs[i][1]] for i in combo):
                continue
            vcount = [comp.count(0), comp.count(1)]
            ecount = [0, 0]
            marks = [0, 0]
            for i, (u, v, m) in enumerate(g.edges):
                if i not in removed:
                    ecount[comp[u]] += 1
                    marks[comp[u]] += m
            if ecount[0] >= vcount[0] and ecount[1] >= vcount[1]:
                side_a = frozenset(v for v in range(n) if comp[v] == 0)
                return Cut(combo, side_a, frozenset(range(n)) - side_a, marks[0], g.mark_count - marks[0])
    return None


@dataclass(frozen=True)
class NonlocalEncoding:
    cnf: CNF
    x: tuple[int, ...]
    a: tuple[int, ...]
    b: tuple[int, ...]
    d: tuple[int, ...]


def _nonlocal_encoding(g: MarkedGraph, t: int) -> NonlocalEncoding:
    n = g.vertex_count
    cnf = CNF()
    x = tuple(cnf.new_var(f"x{u}") for u in range(n))
    a = tuple(cnf.new_var(f"a{u}") for u in range(n))
    b = tuple(cnf.new_var(f"b{u}") for u in range(n))
    d = tuple(cnf.new_var(f"d{u}_{v}") for u, v, _ in g.edges)
    for (u, v, _), de in zip(g.edges, d):
        cnf.add([-x[u], x[v], de])
        cnf.add([x[u], -x[v], de])
    at_most_k(cnf, list(d), t)
    cnf.add(list(a))
    cnf.add(list(b))
    nbr = g.neighbors()
    for u in range(n):
        cnf.add([-a[u], x[u]])
        cnf.add([-b[u], -x[u]])
        for p, q in itertools.combinations(nbr[u], 2):
            cnf.add([-a[u], a[p], a[q]])
            cnf.add([-b[u], b[p], b[q]])
    cnf.add([x[0]])
    return NonlocalEncoding(cnf, x, a, b, d)


def nonlocal_cut_cnf(g: MarkedGraph, t: int) -> CNF:
    """CNF satisfiable iff some bipartition crosses <= t edges and both sides hold a cycle.

    Variables: x (side of each vertex), a and b (witness subgraphs of minimum
    degree two on either side), d (crossing edges, at most t of them).
    """
    return _nonlocal_encoding(g, t).cnf


def solve_cnf(cnf: CNF, backend: str | None = None, timeout: float | None = None) -> SatResult:
    return solve(cnf, backend, timeout)


def decode_nonlocal_cut(g: MarkedGraph, t: int, result: SatResult) -> Cut:
    """Turn a model of :func:`nonlocal_cut_cnf` into a concrete two-component cut."""
    enc = _nonlocal_encoding(g, t)
    n = g.vertex_count
    in_x = [result.value(v) for v in enc.x]
    # keep the component of the x-side that contains the witness cycle, then
    # take the component of its complement that holds the other witness
    pairs = [(u, v) for u, v, _ in g.edges]
    comp_x = _graph_components(n, [(u, v) for u, v in pairs if in_x[u] and in_x[v]])
    seed_a = next(u for u in range(n) if result.value(enc.a[u]))
    core = {u for u in range(n) if in_x[u] and comp_x[u] == comp_x[seed_a]}
    rest = [(u, v) for u, v in pairs if u not in core and v not in core]
    comp_r = _graph_components(n, rest)
    seed_b = next(u for u in range(n) if result.value(enc.b[u]))
    other = frozenset(u for u in range(n) if u not in core and comp_r[u] == comp_r[seed_b])
    side_a = frozenset(range(n)) - other
    cut_edges = tuple(i for i, (u, v) in enumerate(pairs) if (u in other) != (v in other))
    ma = sum(m for u, v, m in g.edges if u in side_a and v in side_a)
    return Cut(cut_edges, side_a, other, ma, g.mark_count - ma)


def has_nonlocal_cut_sat(g: MarkedGraph, t: int, backend: str | None = None) -> bool:
    return solve(nonlocal_cut_cnf(g, t), backend).status == SAT
