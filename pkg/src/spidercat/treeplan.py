"""Z-graphs and spider-ordering trees."""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass

from .graph_core import MarkedGraph

INTERNAL = "internal"
BOUNDARY = "boundary"


class TreeError(ValueError):
    """No valid spider-ordering tree could be built or the given one is invalid."""


@dataclass(frozen=True)
class ZGraph:
    """Spider diagram derived from a marked graph.

    Spiders ``0..internal_count-1`` are the 3-legged internal spiders (one per
    graph vertex). The remaining spiders are 2-legged boundary spiders, one
    per mark, each carrying one output leg; ``outputs`` lists them in qubit
    order. Z-edge ``i`` is ``z_edges[i]``.
    """

    internal_count: int
    boundary_count: int
    z_edges: tuple[tuple[int, int], ...]

    @property
    def spider_count(self) -> int:
        return self.internal_count + self.boundary_count

    @property
    def outputs(self) -> tuple[int, ...]:
        return tuple(range(self.internal_count, self.spider_count))

    def kind(self, spider: int) -> str:
        return INTERNAL if spider < self.internal_count else BOUNDARY

    def is_boundary(self, spider: int) -> bool:
        return spider >= self.internal_count

    def adjacency(self) -> list[list[tuple[int, int]]]:
        """Per spider, the (neighbour, z-edge id) pairs in z-edge order."""
        adj: list[list[tuple[int, int]]] = [[] for _ in range(self.spider_count)]
        for i, (a, b) in enumerate(self.z_edges):
            adj[a].append((b, i))
            adj[b].append((a, i))
        return adj

    def is_connected(self) -> bool:
        if self.spider_count == 0:
            return True
        adj = self.adjacency()
        seen = {0}
        queue = deque([0])
        while queue:
            x = queue.popleft()
            for y, _ in adj[x]:
                if y not in seen:
                    seen.add(y)
                    queue.append(y)
        return len(seen) == self.spider_count


def zedge_offsets(g: MarkedGraph) -> list[int]:
    """First z-edge id of every canonical graph edge (plus a final sentinel)."""
    offsets = [0]
    for _, _, m in g.edges:
        offsets.append(offsets[-1] + m + 1)
    return offsets


def to_zgraph(g: MarkedGraph) -> ZGraph:
    """Subdivide every edge by its marks.

    An edge (u, v) with marks m becomes the path u, b_1, .., b_m, v whose
    m+1 z-edges get consecutive ids; boundary ids follow canonical edge
    order and then mark index.
    """
    z_edges: list[tuple[int, int]] = []
    nxt = g.vertex_count
    for u, v, m in g.edges:
        path = [u] + list(range(nxt, nxt + m)) + [v]
        nxt += m
        z_edges += [(path[s], path[s + 1]) for s in range(m + 1)]
    return ZGraph(g.vertex_count, nxt - g.vertex_count, tuple(z_edges))


def ring_zgraph(n: int) -> ZGraph:
    """Cycle of n boundary spiders, the Z-graph of a weight-1 CAT preparation."""
    if n < 2:
        raise ValueError("a ring needs at least two spiders")
    return ZGraph(0, n, tuple((i, (i + 1) % n) for i in range(n)))


def star_zgraph(legs: int = 3) -> ZGraph:
    """One internal spider whose legs all end in outputs (bare output wires)."""
    return ZGraph(1, legs, tuple((0, 1 + i) for i in range(legs)))


@dataclass(frozen=True)
class SpiderTree:
    """Rooted spanning tree of a Z-graph; ``parent[root] == -1``.

    ``merges`` records each greedy merge as (u, v, predicted diameter).
    """

    root: int
    parent: tuple[int, ...]
    merges: tuple[tuple[int, int, int], ...] = ()

    def children(self) -> list[list[int]]:
        kids: list[list[int]] = [[] for _ in self.parent]
        for v, p in enumerate(self.parent):
            if p >= 0:
                kids[p].append(v)
        return kids

    def tree_edges(self) -> set[frozenset[int]]:
        return {frozenset((v, p)) for v, p in enumerate(self.parent) if p >= 0}

    def depth(self) -> int:
        kids = self.children()
        best = 0
        stack = [(self.root, 0)]
        while stack:
            x, d = stack.pop()
            best = max(best, d)
            stack += [(c, d + 1) for c in kids[x]]
        return best


def _tree_distances(nodes: list[int], tadj: list[list[int]]) -> dict[int, dict[int, int]]:
    dist = {}
    for s in nodes:
        d = {s: 0}
        queue = deque([s])
        while queue:
            x = queue.popleft()
            for y in tadj[x]:
                if y not in d:
                    d[y] = d[x] + 1
                    queue.append(y)
        dist[s] = d
    return dist


def tree_problems(z: ZGraph, tree: SpiderTree) -> list[str]:
    """Reasons ``tree`` is not a valid spider-ordering tree (empty when valid)."""
    n = z.spider_count
    problems = []
    if len(tree.parent) != n:
        return [f"parent array has {len(tree.parent)} entries for {n} spiders"]
    if tree.parent[tree.root] != -1:
        problems.append("root has a parent")
    if z.internal_count and z.is_boundary(tree.root):
        problems.append("root is a boundary spider although internal spiders exist")
    zpairs = {}
    for i, (a, b) in enumerate(z.z_edges):
        zpairs.setdefault(frozenset((a, b)), []).append(i)
    for v, p in enumerate(tree.parent):
        if v != tree.root and (p < 0 or frozenset((v, p)) not in zpairs):
            problems.append(f"spider {v} hangs from {p}, which is not a z-edge")
    if problems:
        return problems
    kids = tree.children()
    seen = set()
    stack = [tree.root]
    while stack:
        x = stack.pop()
        if x in seen:
            return ["tree contains a cycle"]
        seen.add(x)
        stack += kids[x]
    if len(seen) != n:
        problems.append("tree does not span the Z-graph")
    bad = [v for v in range(n) if v != tree.root and not kids[v] and not z.is_boundary(v)]
    if bad:
        problems.append(f"internal spiders {bad} are leaves")
    return problems


def build_spider_tree(z: ZGraph) -> SpiderTree:
    """Spanning tree for circuit extraction.

    Internal spiders are first joined by a breadth-first forest over the
    z-edges between them. Trees are then merged greedily: the bridging
    z-edge (u, v) minimising max(diam A, diam B, ecc_A(u) + 1 + ecc_B(v))
    wins, ties going to the smallest (u, v). The root is the internal spider
    of least eccentricity. Internal leaves are repaired by swapping in an
    adjacent off-tree edge. If repair fails, randomized depth-first trees
    and finally (on small Z-graphs) every spanning tree are tried; deciding
    whether a tree with prescribed leaves exists is hard in general.
    """
    n = z.spider_count
    if n == 0 or not z.is_connected():
        raise TreeError("Z-graph must be non-empty and connected")
    adj = z.adjacency()
    tadj: list[list[int]] = [[] for _ in range(n)]
    owner = list(range(n))
    seen = [False] * n
    for s in range(z.internal_count):
        if seen[s]:
            continue
        seen[s] = True
        queue = deque([s])
        while queue:
            x = queue.popleft()
            owner[x] = s
            for y, _ in adj[x]:
                if y < z.internal_count and not seen[y]:
                    seen[y] = True
                    tadj[x].append(y)
                    tadj[y].append(x)
                    queue.append(y)
    members: dict[int, list[int]] = {}
    for v in range(n):
        members.setdefault(owner[v], []).append(v)
    ecc: dict[int, int] = {}
    diam: dict[int, int] = {}
    for root, nodes in members.items():
        dist = _tree_distances(nodes, tadj)
        for v in nodes:
            ecc[v] = max(dist[v].values())
        diam[root] = max(ecc[v] for v in nodes)
    merges = []
    while len(members) > 1:
        best = None
        for a, b in z.z_edges:
            ra, rb = owner[a], owner[b]
            if ra == rb:
                continue
            cost = max(diam[ra], diam[rb], ecc[a] + 1 + ecc[b])
            key = (cost, min(a, b), max(a, b))
            if best is None or key < best:
                best = key
        cost, a, b = best
        ra, rb = owner[a], owner[b]
        keep, drop = min(ra, rb), max(ra, rb)
        tadj[a].append(b)
        tadj[b].append(a)
        nodes = members.pop(drop)
        for v in nodes:
            owner[v] = keep
        members[keep] += nodes
        members[keep].sort()
        dist = _tree_distances(members[keep], tadj)
        for v in members[keep]:
            ecc[v] = max(dist[v].values())
        diam[keep] = max(ecc[v] for v in members[keep])
        del diam[drop]
        merges.append((a, b, cost))
    candidates = range(z.internal_count) if z.internal_count else range(n)
    root = min(candidates, key=lambda v: (ecc[v], v))
    _repair_leaves(z, tadj, root)
    tree = SpiderTree(root, _orient(tadj, root), tuple(merges))
    problems = tree_problems(z, tree)
    if problems:
        fallback = _fallback_tree(z)
        if fallback is None:
            raise TreeError("; ".join(problems))
        return fallback
    return tree


def _fallback_tree(z: ZGraph, attempts: int = 64, exhaustive_limit: int = 24,
                   max_trees: int = 200_000) -> SpiderTree | None:
    """Search for any valid tree when the greedy construction gets stuck."""
    n = z.spider_count
    adj = z.adjacency()
    roots = list(range(z.internal_count)) or list(range(n))
    rng = random.Random(0)
    for attempt in range(attempts):
        root = roots[attempt % len(roots)]
        tadj: list[list[int]] = [[] for _ in range(n)]
        seen = {root}
        stack = [root]
        # depth-first, walking into internal spiders first so boundary spiders end paths
        while stack:
            x = stack[-1]
            options = [y for y, _ in adj[x] if y not in seen]
            if not options:
                stack.pop()
                continue
            rng.shuffle(options)
            options.sort(key=z.is_boundary)
            y = options[0]
            seen.add(y)
            tadj[x].append(y)
            tadj[y].append(x)
            stack.append(y)
        tree = SpiderTree(root, _orient(tadj, root))
        if not tree_problems(z, tree):
            return tree
    if n > exhaustive_limit:
        return None
    import networkx as nx

    g = nx.Graph()
    g.add_nodes_from(range(n))
    g.add_edges_from((a, b) for a, b in z.z_edges if a != b)
    for count, t in enumerate(nx.SpanningTreeIterator(g)):
        if count >= max_trees:
            break
        tadj = [sorted(t.neighbors(v)) for v in range(n)]
        for root in roots:
            leaves_ok = all(v == root or z.is_boundary(v) or len(tadj[v]) > 1 for v in range(n))
            if leaves_ok:
                return SpiderTree(root, _orient(tadj, root))
    return None


def _orient(tadj: list[list[int]], root: int) -> tuple[int, ...]:
    parent = [-2] * len(tadj)
    parent[root] = -1
    queue = deque([root])
    while queue:
        x = queue.popleft()
        for y in sorted(tadj[x]):
            if parent[y] == -2:
                parent[y] = x
                queue.append(y)
    return tuple(parent)


def _tree_path(tadj: list[list[int]], a: int, b: int) -> list[int]:
    prev = {a: -1}
    queue = deque([a])
    while queue:
        x = queue.popleft()
        if x == b:
            break
        for y in tadj[x]:
            if y not in prev:
                prev[y] = x
                queue.append(y)
    path = [b]
    while path[-1] != a:
        path.append(prev[path[-1]])
    return path[::-1]


def _repair_leaves(z: ZGraph, tadj: list[list[int]], root: int, max_passes: int = 50) -> None:
    """Re-hang internal leaves in place by exchanging one tree edge on a cycle."""
    def bad(v: int) -> bool:
        return v != root and not z.is_boundary(v) and len(tadj[v]) <= 1

    adj = z.adjacency()
    for _ in range(max_passes):
        leaves = [v for v in range(z.spider_count) if bad(v)]
        if not leaves:
            return
        fixed = False
        for x in leaves:
            for y, _ in adj[x]:
                if y in tadj[x] or y == x:
                    continue
                path = _tree_path(tadj, x, y)
                for p, q in zip(path[1:], path[2:]):
                    tadj[p].remove(q)
                    tadj[q].remove(p)
                    tadj[x].append(y)
                    tadj[y].append(x)
                    if not bad(p) and not bad(q) and not bad(x):
                        fixed = True
                        break
                    tadj[x].remove(y)
                    tadj[y].remove(x)
                    tadj[p].append(q)
                    tadj[q].append(p)
                if fixed:
                    break
            if fixed:
                break
        if not fixed:
            return
