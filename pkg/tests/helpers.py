"""Independent oracles shared by the test modules.

These are deliberately naive re-implementations of the definitions, written
without reusing the package's optimised code paths.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import networkx as nx

from spidercat.extract import circuit_from_graph, extract_circuit
from spidercat.graph_core import MarkedGraph, optimal_family
from spidercat.pipeline import PipelineConfig, synthesize
from spidercat.treeplan import build_spider_tree, ring_zgraph, to_zgraph


def zcut_violations(g: MarkedGraph, t: int, literal: bool = False) -> list[tuple[int, tuple[int, ...]]]:
    """All bad z-edge cuts of weight <= t as (weight, sorted z-edge ids).

    A set F of z-edges is a cut for every 2-colouring of the components of
    Z - F that puts the two ends of each F-edge on different sides; it is
    bad when both sides carry more than |F| marks (more than t with
    ``literal``).
    """
    z = to_zgraph(g)
    edges = list(z.z_edges)
    out = []
    for k in range(1, t + 1):
        for F in itertools.combinations(range(len(edges)), k):
            rest = nx.MultiGraph()
            rest.add_nodes_from(range(z.spider_count))
            rest.add_edges_from(e for i, e in enumerate(edges) if i not in F)
            comps = list(nx.connected_components(rest))
            where = {v: i for i, c in enumerate(comps) for v in c}
            if any(where[edges[i][0]] == where[edges[i][1]] for i in F):
                continue
            marks = [sum(1 for v in c if z.is_boundary(v)) for c in comps]
            for colour in itertools.product((0, 1), repeat=len(comps)):
                if any(colour[where[edges[i][0]]] == colour[where[edges[i][1]]] for i in F):
                    continue
                a = sum(m for m, c in zip(marks, colour) if c == 0)
                b = sum(m for m, c in zip(marks, colour) if c == 1)
                if min(a, b) > (t if literal else k):
                    out.append((k, F))
                    break
    return out


def oracle_robust(g: MarkedGraph, t: int) -> bool:
    return not zcut_violations(g, t)


def oracle_nonlocal_cut(g: MarkedGraph, t: int) -> bool:
    """Some edge set of size <= t splits g into two parts that each contain a cycle."""
    G = nx.MultiGraph()
    G.add_nodes_from(range(g.vertex_count))
    G.add_edges_from((u, v) for u, v, _ in g.edges)
    edges = list(G.edges(keys=True))
    for k in range(1, t + 1):
        for F in itertools.combinations(edges, k):
            H = G.copy()
            H.remove_edges_from(F)
            comps = list(nx.connected_components(H))
            if len(comps) != 2:
                continue
            side = {v: i for i, c in enumerate(comps) for v in c}
            if any(side[u] == side[v] for u, v, _ in F):
                continue
            if all(H.subgraph(c).number_of_edges() >= len(c) for c in comps):
                return True
    return False


@lru_cache(maxsize=None)
def corpus() -> tuple[dict, ...]:
    """Marked graphs and their extracted circuits used across the suite (n <= 20)."""
    items = []
    for t, ks in ((2, (1, 2, 3)), (3, (1, 2, 3)), (4, (1,)), (5, (2,))):
        for k in ks:
            g = optimal_family(t, k)
            items.append({"name": f"family-t{t}-k{k}", "graph": g, "t": t, "circuit": circuit_from_graph(g)})
    for n, t in ((6, 2), (12, 2), (8, 3), (12, 3), (16, 3), (12, 4), (14, 4), (14, 5), (20, 3)):
        res = synthesize(PipelineConfig(n, t, verify_level="none"))
        items.append({"name": f"pipeline-n{n}-t{t}", "graph": res.graph, "t": t, "circuit": res.circuit})
    for n in (3, 5, 8):
        z = ring_zgraph(n)
        items.append({"name": f"ring-n{n}", "graph": None, "t": 1,
                      "circuit": extract_circuit(z, build_spider_tree(z))})
    return tuple(items)
