"""Cubic marked graphs: representation, generation, local search and families.

A marked graph is a 3-regular multigraph whose edges carry 0, 1 or 2 marks.
Each mark stands for one output qubit of the CAT state that will later be
extracted from the graph.
"""

from __future__ import annotations

import itertools
import logging
import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

logger = logging.getLogger(__name__)

Edge = tuple[int, int, int]


class GraphFormatError(ValueError):
    """Raised when a graph text file cannot be parsed."""


def make_rng(seed: int | np.random.Generator | None) -> np.random.Generator:
    """Return a PCG64 generator; generators pass through untouched."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


@dataclass(frozen=True)
class MarkedGraph:
    """Immutable 3-regular multigraph with per-edge mark counts.

    Edges are stored canonically (``u <= v``, sorted), so two graphs compare
    equal exactly when their canonical edge lists agree.
    """

    vertex_count: int
    edges: tuple[Edge, ...]

    def __post_init__(self) -> None:
        canon = tuple(sorted((min(u, v), max(u, v), int(m)) for u, v, m in self.edges))
        object.__setattr__(self, "edges", canon)
        degree = [0] * self.vertex_count
        for u, v, m in canon:
            if not (0 <= u < self.vertex_count and 0 <= v < self.vertex_count):
                raise ValueError(f"edge ({u}, {v}) references a missing vertex")
            if not 0 <= m <= 2:
                raise ValueError(f"edge ({u}, {v}) carries {m} marks; at most 2 allowed")
            degree[u] += 1
            degree[v] += 1
        bad = [v for v, d in enumerate(degree) if d != 3]
        if bad:
            raise ValueError(f"vertices {bad[:5]} do not have degree 3")

    @classmethod
    def from_pairs(cls, vertex_count: int, pairs: Iterable[tuple[int, int]]) -> MarkedGraph:
        return cls(vertex_count, tuple((u, v, 0) for u, v in pairs))

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def mark_count(self) -> int:
        return sum(m for _, _, m in self.edges)

    @property
    def marks(self) -> tuple[int, ...]:
        return tuple(m for _, _, m in self.edges)

    @property
    def vertex_ratio(self) -> Fraction:
        if self.mark_count == 0:
            raise ZeroDivisionError("vertex ratio undefined without marks")
        return Fraction(self.vertex_count, self.mark_count)

    @property
    def is_simple(self) -> bool:
        pairs = [(u, v) for u, v, _ in self.edges]
        return all(u != v for u, v in pairs) and len(set(pairs)) == len(pairs)

    def with_marks(self, marks: Sequence[int]) -> MarkedGraph:
        """Return a copy whose i-th canonical edge carries ``marks[i]``."""
        if len(marks) != len(self.edges):
            raise ValueError("one mark count per edge is required")
        return MarkedGraph(self.vertex_count, tuple((u, v, m) for (u, v, _), m in zip(self.edges, marks)))

    def unmarked(self) -> MarkedGraph:
        return self.with_marks([0] * len(self.edges))

    def incidence(self) -> list[list[int]]:
        """Edge ids incident to each vertex (a self-loop appears twice)."""
        inc: list[list[int]] = [[] for _ in range(self.vertex_count)]
        for i, (u, v, _) in enumerate(self.edges):
            inc[u].append(i)
            inc[v].append(i)
        return inc

    def neighbors(self) -> list[list[int]]:
        nbr: list[list[int]] = [[] for _ in range(self.vertex_count)]
        for u, v, _ in self.edges:
            nbr[u].append(v)
            nbr[v].append(u)
        return nbr

    def is_connected(self) -> bool:
        return _is_connected(self.vertex_count, [(u, v) for u, v, _ in self.edges])

    def to_text(self) -> str:
        lines = [f"cubic {self.vertex_count}"]
        lines += [f"e {u} {v} {m}" for u, v, m in self.edges]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> MarkedGraph:
        vertex_count: int | None = None
        edges: list[Edge] = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            try:
                if parts[0] == "cubic" and len(parts) == 2 and vertex_count is None:
                    vertex_count = int(parts[1])
                elif parts[0] == "e" and len(parts) == 4 and vertex_count is not None:
                    edges.append((int(parts[1]), int(parts[2]), int(parts[3])))
                else:
                    raise GraphFormatError(f"line {lineno}: unexpected {raw!r}")
            except ValueError as exc:
                raise GraphFormatError(f"line {lineno}: {exc}") from exc
        if vertex_count is None:
            raise GraphFormatError("missing 'cubic <vertex_count>' header")
        try:
            return cls(vertex_count, tuple(edges))
        except ValueError as exc:
            raise GraphFormatError(str(exc)) from exc


def read_graph(path: str | Path) -> MarkedGraph:
    return MarkedGraph.from_text(Path(path).read_text())


def write_graph(g: MarkedGraph, path: str | Path) -> None:
    Path(path).write_text(g.to_text())


def _is_connected(n: int, pairs: Sequence[tuple[int, int]]) -> bool:
    if n == 0:
        return True
    adj: list[list[int]] = [[] for _ in range(n)]
    for u, v in pairs:
        adj[u].append(v)
        adj[v].append(u)
    seen = [False] * n
    seen[0] = True
    stack = [0]
    while stack:
        x = stack.pop()
        for y in adj[x]:
            if not seen[y]:
                seen[y] = True
                stack.append(y)
    return all(seen)


# ---------------------------------------------------------------------------
# generation and perturbation


def random_cubic(vertex_count: int, seed: int | np.random.Generator | None = 0,
                 max_attempts: int = 100_000) -> MarkedGraph:
    """Sample a connected simple cubic graph with the pairing model.

    Pairings producing loops, parallel edges or disconnected graphs are
    rejected and redrawn, so the result is deterministic for a fixed seed.
    """
    if vertex_count < 4 or vertex_count % 2:
        raise ValueError("a simple cubic graph needs an even vertex count >= 4")
    rng = make_rng(seed)
    points = np.repeat(np.arange(vertex_count), 3)
    for _ in range(max_attempts):
        perm = points[rng.permutation(points.size)]
        pairs = [(int(min(a, b)), int(max(a, b))) for a, b in perm.reshape(-1, 2)]
        if any(u == v for u, v in pairs) or len(set(pairs)) != len(pairs):
            continue
        if not _is_connected(vertex_count, pairs):
            continue
        return MarkedGraph.from_pairs(vertex_count, pairs)
    raise RuntimeError("pairing model did not produce a simple connected graph")


def double_edge_swap(g: MarkedGraph, rng: np.random.Generator, max_tries: int = 100) -> MarkedGraph:
    """Rewire two disjoint edges (a,b),(c,d) into (a,c),(b,d) or (a,d),(b,c).

    Only swaps keeping the graph simple and connected are accepted. When the
    retry budget runs out the input object itself is returned, which callers
    can detect with ``is``.
    """
    pairs = [(u, v) for u, v, _ in g.edges]
    present = set(pairs)
    m = len(pairs)
    for _ in range(max_tries):
        i, j = rng.choice(m, size=2, replace=False)
        (a, b), (c, d) = pairs[i], pairs[j]
        if len({a, b, c, d}) < 4:
            continue
        if rng.random() < 0.5:
            new1, new2 = (a, c), (b, d)
        else:
            new1, new2 = (a, d), (b, c)
        new1 = (min(new1), max(new1))
        new2 = (min(new2), max(new2))
        if new1 in present or new2 in present:
            continue
        trial = [p for k, p in enumerate(pairs) if k not in (i, j)] + [new1, new2]
        if not _is_connected(g.vertex_count, trial):
            continue
        return MarkedGraph.from_pairs(g.vertex_count, trial)
    logger.debug("double_edge_swap: retry budget of %d exhausted", max_tries)
    return g


# ---------------------------------------------------------------------------
# invariants


def girth(g: MarkedGraph) -> float:
    """Length of the shortest cycle; ``math.inf`` for a forest."""
    pairs = [(u, v) for u, v, _ in g.edges]
    if any(u == v for u, v in pairs):
        return 1
    if len(set(pairs)) != len(pairs):
        return 2
    nbr = g.neighbors()
    best = math.inf
    for root in range(g.vertex_count):
        dist = [-1] * g.vertex_count
        parent = [-1] * g.vertex_count
        dist[root] = 0
        queue = deque([root])
        while queue:
            x = queue.popleft()
            if 2 * dist[x] + 1 >= best:
                break
            for y in nbr[x]:
                if dist[y] < 0:
                    dist[y] = dist[x] + 1
                    parent[y] = x
                    queue.append(y)
                elif parent[x] != y:
                    best = min(best, dist[x] + dist[y] + 1)
    return best


def laplacian(g: MarkedGraph) -> np.ndarray:
    lap = np.zeros((g.vertex_count, g.vertex_count))
    for u, v, _ in g.edges:
        if u == v:
            continue
        lap[u, v] -= 1
        lap[v, u] -= 1
        lap[u, u] += 1
        lap[v, v] += 1
    return lap


def algebraic_connectivity(g: MarkedGraph) -> float:
    """Second-smallest Laplacian eigenvalue; exactly 0.0 when disconnected."""
    if g.vertex_count < 2 or not g.is_connected():
        return 0.0
    eig = np.linalg.eigvalsh(laplacian(g))
    return float(eig[1])


# ---------------------------------------------------------------------------
# hill climbing


@dataclass(frozen=True)
class GraphSearchConfig:
    target_t: int
    vertex_count: int
    max_iters: int = 20_000
    seed: int = 0
    lambda_thresh: float | None = None

    def __post_init__(self) -> None:
        if self.target_t < 1:
            raise ValueError("target_t must be positive")
        if self.vertex_count < 4 or self.vertex_count % 2:
            raise ValueError("vertex_count must be even and at least 4")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if self.lambda_thresh is None:
            object.__setattr__(self, "lambda_thresh", 10 / 3 * self.target_t / self.vertex_count)
        if self.lambda_thresh <= 0:
            raise ValueError("lambda_thresh must be positive")


@dataclass(frozen=True)
class SearchOutcome:
    """Result of :func:`hill_climb`; ``status`` is ``"found"`` or ``"failure"``."""

    status: str
    graph: MarkedGraph
    iterations: int
    girth: float
    lambda2: float
    cut_checks: int = 0

    @property
    def found(self) -> bool:
        return self.status == "found"


def moore_bound(girth_value: int) -> int:
    """Fewest vertices a cubic graph of the given girth can have."""
    if girth_value <= 2:
        return 2
    d = (girth_value - 1) // 2
    if girth_value % 2:
        return 1 + 3 * (2**d - 1)
    return 2 * (2 ** (d + 1) - 1)


def hill_climb(cfg: GraphSearchConfig, cut_checker=None) -> SearchOutcome:
    """Local search for a cubic graph with girth > t and no nonlocal t-cut.

    Girth is raised first; once it exceeds t, swaps are kept only if they
    strictly increase the algebraic connectivity. The expensive nonlocal-cut
    check runs only after both cheap gates pass. ``cut_checker(g, t)`` must
    return True when a nonlocal cut exists; by default the SAT encoding is
    used.
    """
    if cut_checker is None:
        from .robustness import has_nonlocal_cut_sat

        cut_checker = has_nonlocal_cut_sat
    t = cfg.target_t
    rng = make_rng(cfg.seed)
    g = random_cubic(cfg.vertex_count, rng)
    gir = girth(g)
    lam = algebraic_connectivity(g)
    if cfg.vertex_count < moore_bound(t + 1):
        # no cubic graph this small reaches girth t+1
        return SearchOutcome("failure", g, 0, gir, lam, 0)
    checks = 0
    checked: set[tuple[Edge, ...]] = set()
    for it in range(1, cfg.max_iters + 1):
        if gir > t and lam >= cfg.lambda_thresh and g.edges not in checked:
            checks += 1
            checked.add(g.edges)
            if not cut_checker(g, t):
                return SearchOutcome("found", g, it, gir, lam, checks)
        cand = double_edge_swap(g, rng)
        if cand is g:
            continue
        cand_gir = girth(cand)
        if gir <= t:
            if cand_gir >= gir:
                g, gir = cand, cand_gir
                lam = algebraic_connectivity(g)
        elif cand_gir > t:
            cand_lam = algebraic_connectivity(cand)
            if cand_lam > lam:
                g, gir, lam = cand, cand_gir, cand_lam
    return SearchOutcome("failure", g, cfg.max_iters, gir, lam, checks)


# ---------------------------------------------------------------------------
# named graphs and optimal families

OPTIMAL_RATIO = {1: Fraction(0), 2: Fraction(1, 3), 3: Fraction(2, 3), 4: Fraction(5, 6), 5: Fraction(1)}


def complete_k4() -> MarkedGraph:
    return MarkedGraph.from_pairs(4, itertools.combinations(range(4), 2))


def prism(m: int) -> MarkedGraph:
    """Circular ladder C_m x K2 (m >= 3)."""
    pairs = [(i, (i + 1) % m) for i in range(m)]
    pairs += [(m + i, m + (i + 1) % m) for i in range(m)]
    pairs += [(i, m + i) for i in range(m)]
    return MarkedGraph.from_pairs(2 * m, pairs)


def moebius_ladder(k: int) -> MarkedGraph:
    """Cycle on 2k vertices plus the k long diagonals.

    k=1 degenerates to the theta multigraph (three parallel edges) and k=2
    gives K4.
    """
    n = 2 * k
    pairs = [(i, (i + 1) % n) for i in range(n)] + [(i, i + k) for i in range(k)]
    return MarkedGraph.from_pairs(n, pairs)


def generalized_petersen(n: int, k: int) -> MarkedGraph:
    pairs = [(i, (i + 1) % n) for i in range(n)]
    pairs += [(i, n + i) for i in range(n)]
    pairs += [(n + i, n + (i + k) % n) for i in range(n)]
    return MarkedGraph.from_pairs(2 * n, pairs)


def petersen() -> MarkedGraph:
    return generalized_petersen(5, 2)


def heawood() -> MarkedGraph:
    """Incidence graph of the Fano plane (the unique (3,6)-cage)."""
    lines = [(0, 1, 3), (1, 2, 4), (2, 3, 5), (3, 4, 6), (4, 5, 0), (5, 6, 1), (6, 0, 2)]
    pairs = [(p, 7 + i) for i, line in enumerate(lines) for p in line]
    return MarkedGraph.from_pairs(14, pairs)


def hex_torus(k: int) -> tuple[MarkedGraph, list[str]]:
    """k x k torus of two-vertex tiles (honeycomb lattice).

    Tile (i, j) holds vertices x = 2(ik+j) and y = x+1 joined by a full
    edge; x also reaches the y of tile (i+1, j) and of tile (i, j+1). The
    returned labels name each canonical edge ``full``/``right``/``up``.
    """
    def x(i: int, j: int) -> int:
        return 2 * ((i % k) * k + (j % k))

    raw = []
    for i in range(k):
        for j in range(k):
            raw.append((x(i, j), x(i, j) + 1, "full"))
            raw.append((x(i, j), x(i + 1, j) + 1, "right"))
            raw.append((x(i, j), x(i, j + 1) + 1, "up"))
    g = MarkedGraph.from_pairs(2 * k * k, [(u, v) for u, v, _ in raw])
    order = sorted(range(len(raw)), key=lambda r: (min(raw[r][:2]), max(raw[r][:2]), r))
    return g, [raw[r][2] for r in order]


def optimal_family(t: int, k: int) -> MarkedGraph:
    """Member k of a marked-graph family attaining the optimal vertex ratio.

    t=2: Moebius ladder on 2k vertices with two marks per edge.
    t=3: prism C_{k+3} x K2 with one mark per edge.
    t=4: generalized Petersen graph GP(5k, 2) with 12 marks per 10 vertices
    (Petersen for k=1, dodecahedron for k=2), marks from the marking solver.
    t=5: k x k honeycomb torus with 2 marks per tile, marks from the solver.

    Each member is certified with :func:`spidercat.robustness.is_t_robust`
    before it is returned.
    """
    from .marking import solve_marking
    from .robustness import is_t_robust

    if t not in (2, 3, 4, 5):
        raise ValueError("optimal families exist here for t in {2, 3, 4, 5}")
    if k < 1:
        raise ValueError("k must be positive")
    if t == 2:
        base = moebius_ladder(k)
        g = base.with_marks([2] * base.edge_count)
    elif t == 3:
        base = prism(k + 3)
        g = base.with_marks([1] * base.edge_count)
    elif t == 4:
        base = generalized_petersen(5 * k, 2)
        g = solve_marking(base, 4, target=12 * k).graph
    else:
        base, _ = hex_torus(k)
        g = solve_marking(base, 5, target=2 * k * k).graph
    if g.vertex_ratio != OPTIMAL_RATIO[t]:
        raise RuntimeError(f"family member (t={t}, k={k}) misses the optimal ratio")
    report = is_t_robust(g, t)
    if not report.robust:
        raise RuntimeError(f"family member (t={t}, k={k}) is not {t}-robust: {report.counterexample}")
    return g


# ---------------------------------------------------------------------------
# exhaustive enumeration of small cubic graphs


def _spectral_key(pairs: Sequence[tuple[int, int]], n: int) -> tuple:
    adj = np.zeros((n, n))
    for u, v in pairs:
        adj[u, v] = adj[v, u] = 1
    eig = np.linalg.eigvalsh(adj)
    a2 = adj @ adj
    a3 = a2 @ adj
    a4 = a3 @ adj
    local = sorted(zip(np.diag(a3).astype(int).tolist(), np.diag(a4).astype(int).tolist()))
    return tuple(np.round(eig, 6).tolist()), tuple(local)


def _labelled_cubic(n: int) -> Iterator[list[tuple[int, int]]]:
    """Labelled simple cubic graphs with a fresh-vertex symmetry break.

    A vertex of degree zero may only be linked to when it is the smallest
    untouched vertex, which removes most relabelled duplicates.
    """
    deg = [0] * n
    adj = [set() for _ in range(n)]
    edges: list[tuple[int, int]] = []

    def rec() -> Iterator[list[tuple[int, int]]]:
        i = next((v for v in range(n) if deg[v] < 3), None)
        if i is None:
            yield list(edges)
            return
        fresh = next((v for v in range(n) if deg[v] == 0 and v != i), None)
        lo = max(adj[i]) if adj[i] else -1
        for j in range(max(i, lo) + 1, n):
            if deg[j] >= 3 or j in adj[i]:
                continue
            if deg[j] == 0 and j != fresh:
                continue
            deg[i] += 1
            deg[j] += 1
            adj[i].add(j)
            adj[j].add(i)
            edges.append((i, j))
            if deg[i] == 3 or _can_finish(i):
                yield from rec()
            edges.pop()
            adj[i].discard(j)
            adj[j].discard(i)
            deg[i] -= 1
            deg[j] -= 1

    def _can_finish(i: int) -> bool:
        need = 3 - deg[i]
        avail = sum(1 for v in range(n) if v != i and deg[v] < 3 and v not in adj[i] and v > i)
        return avail >= need

    yield from rec()


def all_cubic_graphs(vertex_count: int) -> list[MarkedGraph]:
    """Every connected simple cubic graph on ``vertex_count`` vertices, up to isomorphism.

    Practical up to 12 vertices (85 classes); duplicates are removed with a
    spectral bucket followed by an exact isomorphism test.
    """
    import networkx as nx

    if vertex_count < 4 or vertex_count % 2:
        raise ValueError("vertex_count must be even and at least 4")
    buckets: dict[tuple, list[nx.Graph]] = {}
    found: list[MarkedGraph] = []
    for pairs in _labelled_cubic(vertex_count):
        if not _is_connected(vertex_count, pairs):
            continue
        key = _spectral_key(pairs, vertex_count)
        graph = nx.Graph(pairs)
        reps = buckets.setdefault(key, [])
        if any(nx.is_isomorphic(graph, r) for r in reps):
            continue
        reps.append(graph)
        found.append(MarkedGraph.from_pairs(vertex_count, pairs))
    return found
