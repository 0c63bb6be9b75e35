import math
from fractions import Fraction

import networkx as nx
import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import oracle_nonlocal_cut, oracle_robust
from spidercat.graph_core import (
    OPTIMAL_RATIO,
    GraphFormatError,
    GraphSearchConfig,
    MarkedGraph,
    algebraic_connectivity,
    all_cubic_graphs,
    complete_k4,
    double_edge_swap,
    girth,
    heawood,
    hill_climb,
    make_rng,
    moebius_ladder,
    moore_bound,
    optimal_family,
    petersen,
    prism,
    random_cubic,
    read_graph,
    write_graph,
)
from spidercat.robustness import is_t_robust


def to_nx(g: MarkedGraph) -> nx.Graph:
    return nx.Graph([(u, v) for u, v, _ in g.edges])


def test_edges_are_canonicalised():
    g = MarkedGraph(4, ((3, 2, 1), (1, 0, 0), (0, 2, 0), (0, 3, 0), (1, 2, 0), (1, 3, 0)))
    assert g.edges[0] == (0, 1, 0)
    assert all(u <= v for u, v, _ in g.edges)
    assert g == complete_k4().with_marks([m for *_, m in g.edges])


@pytest.mark.parametrize("edges, message", [
    (((0, 1, 0),), "degree 3"),
    (((0, 1, 3), (0, 1, 0), (0, 1, 0)), "at most 2"),
    (((0, 5, 0), (0, 1, 0), (0, 1, 0)), "missing vertex"),
])
def test_invalid_graphs_rejected(edges, message):
    with pytest.raises(ValueError, match=message):
        MarkedGraph(2, edges)


def test_text_round_trip(tmp_path):
    g = petersen().with_marks([1, 0, 2] * 5)
    path = tmp_path / "g.txt"
    write_graph(g, path)
    assert read_graph(path) == g
    assert MarkedGraph.from_text("# comment\n\ncubic 2\ne 0 1 1\ne 0 1 0\ne 0 1 2\n").mark_count == 3


@pytest.mark.parametrize("text", ["e 0 1 0\n", "cubic x\n", "cubic 2\ne 0 1\n", "cubic 4\ne 0 1 0\n"])
def test_malformed_text(text):
    with pytest.raises(GraphFormatError):
        MarkedGraph.from_text(text)


def test_vertex_ratio_and_simplicity():
    g = moebius_ladder(1).with_marks([2, 2, 2])
    assert g.vertex_ratio == Fraction(1, 3)
    assert not g.is_simple
    assert petersen().is_simple


@pytest.mark.parametrize("graph, expected", [(complete_k4(), 3), (petersen(), 5), (heawood(), 6), (prism(4), 4)])
def test_girth_named_graphs(graph, expected):
    assert girth(graph) == expected
    assert nx.girth(to_nx(graph)) == expected


@settings(max_examples=40, deadline=None)
@given(n=st.sampled_from([4, 6, 8, 10, 12, 14, 16]), seed=st.integers(0, 10_000))
def test_girth_matches_networkx(n, seed):
    g = random_cubic(n, seed)
    assert girth(g) == nx.girth(to_nx(g))


def test_girth_of_multigraph():
    assert girth(moebius_ladder(1)) == 2


@pytest.mark.parametrize("graph, expected", [(complete_k4(), 4.0), (prism(6), 1.0), (petersen(), 2.0)])
def test_algebraic_connectivity_examples(graph, expected):
    assert algebraic_connectivity(graph) == pytest.approx(expected, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(n=st.sampled_from([4, 8, 12, 20, 30]), seed=st.integers(0, 10_000))
def test_algebraic_connectivity_matches_dense_oracle(n, seed):
    g = random_cubic(n, seed)
    lap = nx.laplacian_matrix(to_nx(g), nodelist=range(n)).toarray().astype(float)
    expected = scipy.linalg.eigh(lap, eigvals_only=True)[1]
    assert algebraic_connectivity(g) == pytest.approx(expected, abs=1e-7)


def test_algebraic_connectivity_disconnected_is_zero():
    g = MarkedGraph.from_pairs(8, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3),
                                   (4, 5), (4, 6), (4, 7), (5, 6), (5, 7), (6, 7)])
    assert algebraic_connectivity(g) == 0.0


def test_random_cubic_reproducible_and_simple():
    a, b = random_cubic(20, 7), random_cubic(20, 7)
    assert a.edges == b.edges
    assert a.is_simple and a.is_connected()
    assert random_cubic(20, 8).edges != a.edges


@pytest.mark.parametrize("n", [3, 5, 2])
def test_random_cubic_rejects_bad_sizes(n):
    with pytest.raises(ValueError):
        random_cubic(n)


def test_double_edge_swap_preserves_cubic_structure():
    rng = make_rng(123)
    g = random_cubic(16, 1)
    for _ in range(10_000):
        h = double_edge_swap(g, rng)
        assert h.vertex_count == g.vertex_count and h.edge_count == g.edge_count
        assert all(d == 3 for d in np.bincount([x for u, v, _ in h.edges for x in (u, v)]))
        assert h.is_simple and h.is_connected()
        g = h


def test_double_edge_swap_budget_exhausted_returns_same_object():
    g = complete_k4()  # every swap of K4 creates a parallel edge
    assert double_edge_swap(g, make_rng(0), max_tries=20) is g


def test_moore_bound_values():
    # cage orders: K4, K33, Petersen, Heawood, McGee lower bound
    assert [moore_bound(g) for g in (3, 4, 5, 6, 7)] == [4, 6, 10, 14, 22]


def test_hill_climb_t3_v14():
    out = hill_climb(GraphSearchConfig(3, 14, seed=42))
    assert out.found
    assert girth(out.graph) >= 4
    assert not oracle_nonlocal_cut(out.graph, 3)


def test_hill_climb_t5_v14_is_heawood():
    out = hill_climb(GraphSearchConfig(5, 14, seed=0))
    assert out.found and girth(out.graph) == 6
    assert nx.is_isomorphic(to_nx(out.graph), to_nx(heawood()))


def test_hill_climb_t5_v12_fails():
    out = hill_climb(GraphSearchConfig(5, 12, seed=0))
    assert out.status == "failure" and not out.found


@settings(max_examples=8, deadline=None)
@given(t=st.integers(2, 4), seed=st.integers(0, 1000))
def test_hill_climb_postcondition(t, seed):
    n = max(moore_bound(t + 1), 10) + 2
    out = hill_climb(GraphSearchConfig(t, n, seed=seed, max_iters=3000))
    if out.found:
        assert girth(out.graph) >= t + 1
        assert not oracle_nonlocal_cut(out.graph, t)


def test_search_config_validation():
    with pytest.raises(ValueError):
        GraphSearchConfig(0, 10)
    with pytest.raises(ValueError):
        GraphSearchConfig(3, 9)
    assert GraphSearchConfig(3, 12).lambda_thresh == pytest.approx(10 / 3 * 3 / 12)


def test_optimal_family_examples():
    g = optimal_family(4, 1)
    assert (g.vertex_count, g.edge_count, g.mark_count) == (10, 15, 12)
    assert nx.is_isomorphic(to_nx(g), to_nx(petersen()))
    assert optimal_family(2, 2).vertex_ratio == Fraction(1, 3)
    h = optimal_family(5, 3)
    assert (h.vertex_count, h.mark_count) == (18, 18)
    assert is_t_robust(h, 5).robust


def test_dodecahedron_member():
    g = optimal_family(4, 2)
    assert nx.is_isomorphic(to_nx(g), nx.dodecahedral_graph())


@pytest.mark.parametrize("t, k", [(2, 1), (2, 2), (3, 1), (3, 2)])
def test_small_family_members_pass_independent_oracle(t, k):
    g = optimal_family(t, k)
    assert g.vertex_ratio == OPTIMAL_RATIO[t]
    assert oracle_robust(g, t)


def test_optimal_family_rejects_unknown_t():
    with pytest.raises(ValueError):
        optimal_family(6, 1)
    with pytest.raises(ValueError):
        optimal_family(3, 0)


def test_all_cubic_graph_counts():
    # connected cubic graphs on 4..10 vertices: 1, 2, 5, 19 (OEIS A002851)
    assert [len(all_cubic_graphs(v)) for v in (4, 6, 8, 10)] == [1, 2, 5, 19]


def test_all_cubic_graphs_pairwise_nonisomorphic():
    gs = [to_nx(g) for g in all_cubic_graphs(8)]
    for i in range(len(gs)):
        for j in range(i + 1, len(gs)):
            assert not nx.is_isomorphic(gs[i], gs[j])
    assert math.comb(len(gs), 2) == 10
