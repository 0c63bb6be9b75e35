import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import corpus
from spidercat.extract import (CNOT, Circuit, CircuitFormatError, cnot_layers, extract_circuit, ladder_cat,
                               lower_bounds, read_circuit, recursive_cat, recursive_cnot_count, recursive_formula,
                               resource_counts, shallow_cat, write_circuit)
from spidercat.graph_core import complete_k4, moebius_ladder, optimal_family, petersen, prism
from spidercat.treeplan import build_spider_tree, to_zgraph
from spidercat.verify import is_cat, simulate


def test_text_round_trip(tmp_path):
    c = ladder_cat(4)
    assert Circuit.from_text(c.to_text()) == c
    write_circuit(c, tmp_path / "c.txt")
    assert read_circuit(tmp_path / "c.txt") == c
    commented = "# header\nqubits 2\noutputs 0 1\nprep_x 0  # hub\nprep_z 1\ncnot 0 1\n"
    assert Circuit.from_text(commented).cnot_count == 1


@pytest.mark.parametrize("text", [
    "outputs 0\nprep_z 0\n",                          # no qubit count
    "qubits 2\noutputs 0 1\nprep_z 0\ncnot 0 1\n",    # qubit 1 never prepared
    "qubits 2\noutputs 0\nprep_z 0\nprep_z 0\n",      # double preparation
    "qubits 1\noutputs 0\nprep_z 0\nmz 0\n",          # measured output
    "qubits 1\noutputs 0\nprep_z 0\nswap 0\n",
    "qubits 2\noutputs 0 0\nprep_z 0\n",
    "qubits 1\noutputs 0\nprep_z x\n",
    "qubits 1\noutputs 3\nprep_z 0\n",
])
def test_invalid_circuits_rejected(text):
    with pytest.raises(CircuitFormatError):
        Circuit.from_text(text)


def test_extracted_circuits_use_one_cnot_per_spider_plus_one():
    for item in corpus():
        if item["graph"] is None:
            continue
        z = to_zgraph(item["graph"])
        assert item["circuit"].cnot_count == z.spider_count + 1, item["name"]
        assert item["circuit"].n == item["graph"].mark_count


def test_ring_circuit_counts():
    rings = {it["name"]: it["circuit"] for it in corpus() if it["graph"] is None}
    for n in (3, 5, 8):
        assert rings[f"ring-n{n}"].cnot_count == n + 1


def test_extraction_is_deterministic():
    g = optimal_family(3, 2)
    z = to_zgraph(g)
    assert extract_circuit(z, build_spider_tree(z)).to_text() == extract_circuit(z, build_spider_tree(z)).to_text()


def test_ladder():
    c = ladder_cat(5)
    assert c.cnot_count == 4 and resource_counts(c).cnot_depth == 4
    assert resource_counts(c).flags == 0 and resource_counts(c).ancillas == 0
    assert is_cat(simulate(c).state, 5)
    with pytest.raises(ValueError):
        ladder_cat(0)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 40), t=st.integers(0, 7))
def test_recursive_counts_follow_the_recursion(n, t):
    if n < t + 1:
        with pytest.raises(ValueError):
            recursive_cat(n, t)
        return
    c = recursive_cat(n, t)
    assert c.cnot_count == recursive_cnot_count(n, t)
    assert resource_counts(c).ancillas <= n // 2
    assert c.qubit_count - n <= n // 2
    assert recursive_cat(n, t, compressed=True).cnot_count == c.cnot_count


@pytest.mark.parametrize("k, t", [(k, t) for k in range(5) for t in (1, 3, 7)])
def test_recursive_closed_form_for_powers_of_two(k, t):
    # each of the log2(n / (t+1)) upper levels joins with t+1 gadgets, the
    # lower levels inside a (t+1)-block with |half| gadgets
    n = 2 ** k * (t + 1)
    w = t + 1
    assert recursive_cnot_count(n, t) == n * round(math.log2(w)) + 2 * (n - w)


def test_published_recursive_formula_is_off_by_n():
    for k in range(5):
        for t in (1, 3, 7):
            n = 2 ** k * (t + 1)
            assert recursive_cnot_count(n, t) - recursive_formula(n, t) == n


def test_recursive_small_cases_simulate_to_cat():
    for n, t in ((2, 1), (5, 1), (8, 3), (12, 2)):
        c = recursive_cat(n, t)
        assert is_cat(simulate(c).state, n)


def test_shallow_on_corpus():
    for item in corpus():
        g = item["graph"]
        if g is None:
            continue
        c = shallow_cat(g)
        rc = resource_counts(c)
        assert rc.cnot_depth == 3, item["name"]
        r = Fraction(g.vertex_count, g.mark_count)
        assert rc.cnots <= (29 * r + 26) / 10 * g.mark_count, item["name"]
        assert is_cat(simulate(c).state, g.mark_count)


def test_shallow_petersen():
    c = shallow_cat(petersen().with_marks([1] * 15))
    assert resource_counts(c).cnot_depth == 3
    assert c.n == 15


def test_lower_bounds():
    lb = lower_bounds(12, 4)
    assert (lb.cnot_lb, lb.flag_lb) == (23, 6)
    assert lb.vertex_ratio == Fraction(5, 6) and lb.exact
    assert [lower_bounds(n, t).cnot_lb for n, t in ((9, 2), (12, 3), (14, 5))] == [13, 21, 29]
    assert not lower_bounds(20, 6).exact
    with pytest.raises(ValueError):
        lower_bounds(0, 2)


def test_resource_counts_by_hand():
    # two ancillas whose CNOT spans overlap in layer 2
    text = ("qubits 4\noutputs 0 1\nprep_x 0\nprep_z 1\nprep_z 2\nprep_z 3\n"
            "cnot 0 1\ncnot 0 2\ncnot 1 3\ncnot 1 2\nmz 2\ncnot 0 3\nmz 3\n")
    c = Circuit.from_text(text)
    assert cnot_layers(c) == [1, 2, 2, 3, 3]
    rc = resource_counts(c)
    assert (rc.cnots, rc.cnot_depth, rc.ancillas, rc.flags) == (5, 3, 2, 2)
    assert rc.to_json() == {"cnots": 5, "cnot_depth": 3, "ancillas": 2, "flags": 2}
    assert sum(1 for op in c.ops if op[0] == CNOT) == 5


@settings(max_examples=150, deadline=None)
@given(g=st.sampled_from([complete_k4(), prism(3), moebius_ladder(3)]),
       marks=st.lists(st.integers(0, 2), min_size=9, max_size=9))
def test_any_valid_tree_extracts_to_cat(g, marks):
    g = g.with_marks(marks[:g.edge_count])
    if g.mark_count < 2:
        return
    z = to_zgraph(g)
    c = extract_circuit(z, build_spider_tree(z))
    res = simulate(c)
    assert res.random_measurements == 0
    assert is_cat(res.state, g.mark_count)
    assert c.cnot_count == z.spider_count + 1
