import itertools

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spidercat.graph_core import complete_k4, moebius_ladder, petersen, prism, random_cubic
from spidercat.treeplan import (BOUNDARY, INTERNAL, SpiderTree, TreeError, ZGraph, build_spider_tree,
                                ring_zgraph, star_zgraph, to_zgraph, tree_problems, zedge_offsets)


def test_zgraph_subdivides_marked_edges():
    g = complete_k4().with_marks([0, 1, 2, 0, 0, 1])
    z = to_zgraph(g)
    assert z.internal_count == 4 and z.boundary_count == 4
    assert len(z.z_edges) == g.edge_count + g.mark_count
    assert zedge_offsets(g) == [0, 1, 3, 6, 7, 8, 10]
    # canonical edge 2 is (0, 3); its two marks become 0 - b5 - b6 - 3
    assert z.z_edges[3:6] == ((0, 5), (5, 6), (6, 3))
    assert z.kind(0) == INTERNAL and z.kind(4) == BOUNDARY
    assert z.outputs == (4, 5, 6, 7)


def test_spider_degrees():
    z = to_zgraph(petersen().with_marks([1] * 15))
    deg = [len(a) for a in z.adjacency()]
    assert deg[:10] == [3] * 10 and deg[10:] == [2] * 15
    assert z.is_connected()


def test_ring_and_star():
    ring = ring_zgraph(5)
    assert ring.internal_count == 0 and len(ring.z_edges) == 5
    with pytest.raises(ValueError):
        ring_zgraph(1)
    star = star_zgraph()
    assert star.internal_count == 1 and star.boundary_count == 3


def valid_tree_exists(z: ZGraph) -> bool:
    """Some spanning tree has no internal leaf other than one internal root."""
    G = nx.Graph()
    G.add_nodes_from(range(z.spider_count))
    G.add_edges_from(z.z_edges)
    for T in nx.SpanningTreeIterator(G):
        internal_leaves = [v for v in T if T.degree(v) == 1 and not z.is_boundary(v)]
        if len(internal_leaves) <= 1:
            return True
    return False


def check_tree(z: ZGraph, tree: SpiderTree) -> None:
    assert tree_problems(z, tree) == []
    assert not z.is_boundary(tree.root)
    kids = tree.children()
    leaves = [v for v in range(z.spider_count) if v != tree.root and not kids[v]]
    assert all(z.is_boundary(v) for v in leaves)
    assert len(tree.tree_edges()) == z.spider_count - 1


def check_iff(z: ZGraph) -> None:
    try:
        tree = build_spider_tree(z)
    except TreeError:
        assert not valid_tree_exists(z)
    else:
        check_tree(z, tree)


def test_tree_built_iff_one_exists_on_k4():
    for marks in itertools.product((0, 1), repeat=6):
        check_iff(to_zgraph(complete_k4().with_marks(marks)))


@settings(max_examples=40, deadline=None)
@given(g=st.sampled_from([prism(3), moebius_ladder(3)]),
       marks=st.lists(st.integers(0, 1), min_size=9, max_size=9))
def test_tree_built_iff_one_exists_on_six_vertices(g, marks):
    check_iff(to_zgraph(g.with_marks(marks)))


@settings(max_examples=60, deadline=None)
@given(n=st.sampled_from([4, 6, 8, 10, 14]), seed=st.integers(0, 5000),
       marks=st.lists(st.integers(1, 2), min_size=21, max_size=21))
def test_trees_on_fully_marked_graphs(n, seed, marks):
    g = random_cubic(n, seed)
    z = to_zgraph(g.with_marks(marks[:g.edge_count]))
    check_tree(z, build_spider_tree(z))


def test_build_is_deterministic():
    z = to_zgraph(petersen().with_marks([1, 0, 1] * 5))
    assert build_spider_tree(z) == build_spider_tree(z)


def test_tree_problems_reports_defects():
    z = star_zgraph()
    good = SpiderTree(0, (-1, 0, 0, 0))
    assert tree_problems(z, good) == []
    assert "not a z-edge" in tree_problems(z, SpiderTree(0, (-1, 0, 0, 1)))[0]
    assert "boundary" in tree_problems(z, SpiderTree(1, (1, -1, 0, 0)))[0]
    assert "entries" in tree_problems(z, SpiderTree(0, (-1, 0)))[0]
    # an internal leaf
    z2 = ZGraph(2, 2, ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3)))
    assert any("leaves" in p for p in tree_problems(z2, SpiderTree(0, (-1, 0, 0, 0))))


def test_disconnected_zgraph_rejected():
    with pytest.raises(TreeError):
        build_spider_tree(ZGraph(0, 4, ((0, 1), (2, 3))))


def test_ring_tree_uses_boundary_root():
    z = ring_zgraph(6)
    tree = build_spider_tree(z)
    assert tree_problems(z, tree) == []
    assert tree.depth() == 3
