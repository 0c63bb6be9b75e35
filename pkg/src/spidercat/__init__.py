"""Fault-tolerant CAT-state preparation circuits from marked cubic graphs."""

from .extract import Circuit, extract_circuit, ladder_cat, lower_bounds, recursive_cat, resource_counts, shallow_cat
from .graph_core import MarkedGraph, hill_climb, optimal_family
from .marking import solve_marking
from .robustness import is_t_robust
from .treeplan import build_spider_tree, to_zgraph
from .verify import check_ft, is_cat, monte_carlo, simulate

__version__ = "0.1.0"

__all__ = [
    "Circuit",
    "MarkedGraph",
    "build_spider_tree",
    "check_ft",
    "extract_circuit",
    "hill_climb",
    "is_cat",
    "is_t_robust",
    "ladder_cat",
    "lower_bounds",
    "monte_carlo",
    "optimal_family",
    "recursive_cat",
    "resource_counts",
    "shallow_cat",
    "simulate",
    "solve_marking",
    "to_zgraph",
]
