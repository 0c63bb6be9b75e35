"""Maximum markings of cubic graphs.

Marks are chosen by a linear search on a cardinality bound over a CNF with
local rules, then certified by :func:`spidercat.robustness.is_t_robust`.
A marking that fails certification is excluded with a clause forbidding the
exact set of marks that made the cut bad, and the search resumes.

Two encodings are available. ``local`` uses cheap neighbourhood rules per
fault budget. ``exact`` writes one disjunction per small vertex cut and is
complete: it is satisfiable iff a robust marking with the requested number
of marks exists, which makes an UNSAT answer a certificate.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

from .graph_core import MarkedGraph
from .robustness import is_t_robust, small_vertex_cuts
from .sat import CNF, UNKNOWN, UNSAT, at_least_k, at_most_k, solve
from .treeplan import to_zgraph

logger = logging.getLogger(__name__)

LOCAL = "local"
EXACT = "exact"


@dataclass
class WcnfFormula:
    hard: CNF
    soft: list[tuple[list[int], int]]
    mark_vars: list[list[int]] = field(default_factory=list)

    @property
    def top_weight(self) -> int:
        return sum(w for _, w in self.soft) + 1

    def to_wdimacs(self) -> str:
        return self.hard.to_wdimacs([(w, c) for c, w in self.soft])


def edge_neighbours(g: MarkedGraph) -> list[list[int]]:
    """Edges sharing an endpoint with each edge (line-graph adjacency)."""
    inc = g.incidence()
    out = []
    for i, (u, v, _) in enumerate(g.edges):
        out.append(sorted({f for f in inc[u] + inc[v] if f != i}))
    return out


def enumerate_subtrees(g: MarkedGraph, max_size: int) -> list[frozenset[int]]:
    """Connected vertex sets with at most ``max_size`` vertices, by size then sorted tuple."""
    if max_size < 1:
        raise ValueError("max_size must be at least 1")
    nbr = g.neighbors()
    level = {frozenset([v]) for v in range(g.vertex_count)}
    result: list[frozenset[int]] = []
    for size in range(1, max_size + 1):
        result += sorted(level, key=lambda s: sorted(s))
        if size == max_size:
            break
        nxt = set()
        for s in level:
            for v in s:
                for w in nbr[v]:
                    if w not in s:
                        nxt.add(s | {w})
        level = nxt
    return result


def _touching(g: MarkedGraph, vertices: frozenset[int]) -> list[int]:
    return [i for i, (u, v, _) in enumerate(g.edges) if u in vertices or v in vertices]


def _inside_count(g: MarkedGraph, vertices: frozenset[int]) -> int:
    return sum(1 for u, v, _ in g.edges if u in vertices and v in vertices)


def marking_constraints(g: MarkedGraph, t: int) -> WcnfFormula:
    """Local necessary-style rules for a t-robust marking, as weighted CNF.

    Variable ``i+1`` marks canonical edge ``i``. For t=2 a second block of
    variables adds a second mark to an edge and implies the first.
    """
    if t < 2:
        raise ValueError("marking rules are defined for t >= 2")
    m = g.edge_count
    cnf = CNF()
    first = [cnf.new_var(f"mark{i}") for i in range(m)]
    mark_vars = [[x] for x in first]
    if t == 2:
        for i, x in enumerate(first):
            y = cnf.new_var(f"mark{i}b")
            cnf.add([-y, x])
            mark_vars[i].append(y)
    elif t == 3:
        for x in first:
            cnf.add([x])
    elif t == 4:
        for i, nb in enumerate(edge_neighbours(g)):
            cnf.add([-first[i]] + [-first[f] for f in nb])
    elif t == 5:
        for v, inc in enumerate(g.incidence()):
            cnf.add([-first[i] for i in sorted(set(inc))])
    elif t == 7:
        for nb in edge_neighbours(g):
            cnf.add([-first[f] for f in nb])
    else:
        for s in enumerate_subtrees(g, t - 2):
            at_most_k(cnf, [first[i] for i in _touching(g, s)], t)
    soft = [([x], 1) for xs in mark_vars for x in xs]
    return WcnfFormula(cnf, soft, mark_vars)


def exact_constraints(g: MarkedGraph, t: int, marks: int) -> WcnfFormula:
    """Complete encoding of "some t-robust marking carries exactly ``marks`` marks".

    Every edge may carry up to two marks, so an UNSAT answer rules out
    doubly marked edges too. For every vertex set S crossing d <= t edges,
    at least one side must see at most d marks on the edges it touches;
    sets with 2d+1 >= marks cannot be violated and are skipped.
    """
    m = g.edge_count
    cnf = CNF()
    mark_vars = [[cnf.new_var(f"mark{i}")] for i in range(m)]
    for i in range(m):
        y = cnf.new_var(f"mark{i}b")
        cnf.add([-y, mark_vars[i][0]])
        mark_vars[i].append(y)
    every = [x for xs in mark_vars for x in xs]
    at_most_k(cnf, every, marks)
    at_least_k(cnf, every, marks)
    all_vertices = frozenset(range(g.vertex_count))
    for s, d in small_vertex_cuts(g, t):
        if 2 * d + 1 >= marks:
            continue
        rest = all_vertices - s
        side = [x for i in _touching(g, s) for x in mark_vars[i]]
        other = [x for i in _touching(g, rest) for x in mark_vars[i]]
        if len(side) <= d or len(other) <= d:
            continue
        # a side can only see few marks if most marks sit strictly inside the other side
        side_possible = marks - 2 * _inside_count(g, rest) <= d
        other_possible = marks - 2 * _inside_count(g, s) <= d
        if not side_possible and not other_possible:
            cnf.add([])
        elif not other_possible:
            at_most_k(cnf, side, d)
        elif not side_possible:
            at_most_k(cnf, other, d)
        else:
            choose = cnf.new_var()
            at_most_k(cnf, side, d, guard=choose)
            at_most_k(cnf, other, d, guard=-choose)
    soft = [([x], 1) for x in every]
    return WcnfFormula(cnf, soft, mark_vars)


def upper_bound(g: MarkedGraph, t: int) -> int:
    """Cheap bound on the mark count allowed by the local rules."""
    m = g.edge_count
    if t == 2:
        return 2 * m
    if t == 4:
        return 4 * m // 5
    if t == 5:
        return m - math.ceil(g.vertex_count / 2)
    if t == 7:
        return m - math.ceil(m / 4)
    return m


@dataclass(frozen=True)
class MarkingResult:
    """Outcome of :func:`solve_marking`.

    ``status`` is ``optimal`` (no robust marking has more marks under the
    chosen encoding), ``target`` (stopped at the first marking reaching the
    target), ``infeasible`` (no marking reaches the target) or ``timeout``.
    ``graph`` is the best certified marking found, if any.
    """

    status: str
    graph: MarkedGraph | None
    best_count: int
    solver_calls: int
    refinements: int

    @property
    def ok(self) -> bool:
        return self.status in ("optimal", "target")


def _decode(g: MarkedGraph, enc: WcnfFormula, model) -> MarkedGraph:
    return g.with_marks([sum(1 for x in xs if model[x]) for xs in enc.mark_vars])


def _blocking_clause(g: MarkedGraph, enc: WcnfFormula, report) -> list[int]:
    """Forbid the marks that make the counterexample bad.

    Keeps ``need`` marks from each side; any marking containing them all
    violates the same bipartition, so the clause is sound.
    """
    cut = report.counterexample
    z = to_zgraph(g)
    owner = []  # boundary spider -> (edge, mark index)
    for i, (_, _, m) in enumerate(g.edges):
        owner += [(i, k) for k in range(m)]
    need = cut.weight + 1 if report.condition == "per_weight" else report.t + 1
    lits = []
    for side in (cut.side_a_vertices, cut.side_b_vertices):
        spiders = sorted(s for s in side if z.is_boundary(s))[:need]
        for s in spiders:
            i, k = owner[s - z.internal_count]
            lits.append(-enc.mark_vars[i][k])
    return lits


def solve_marking(g: MarkedGraph, t: int, backend: str | None = None, target: int | None = None,
                  encoding: str = LOCAL, timeout: float | None = None,
                  report_best: bool = True) -> MarkingResult:
    """Find a certified t-robust marking with as many marks as the encoding allows.

    Searches mark counts from a cheap upper bound downward. With ``target``
    set, the search starts at the target instead and accepts any marking
    with at least that many marks; if none exists and ``report_best`` is
    true it keeps descending to report the best count below the target.
    """
    g = g.unmarked()
    if encoding not in (LOCAL, EXACT):
        raise ValueError(f"unknown encoding {encoding!r}")
    if t < 2:
        raise ValueError("marking rules are defined for t >= 2")
    calls = 0
    rounds = 0
    top = upper_bound(g, t) if encoding == LOCAL else 2 * g.edge_count
    base = marking_constraints(g, t) if encoding == LOCAL else None
    k = top if target is None else min(top, target)
    while k >= 0:
        if encoding == LOCAL:
            enc = WcnfFormula(CNF(base.hard.num_vars, [list(c) for c in base.hard.clauses]),
                              base.soft, base.mark_vars)
            at_least_k(enc.hard, [x for xs in enc.mark_vars for x in xs], k)
        else:
            enc = exact_constraints(g, t, k)
        while True:
            calls += 1
            res = solve(enc.hard, backend, timeout)
            if res.status == UNKNOWN:
                return MarkingResult("timeout", None, -1, calls, rounds)
            if res.status == UNSAT:
                break
            cand = _decode(g, enc, res.model)
            report = is_t_robust(cand, t)
            if report.robust:
                if target is None:
                    status = "optimal"
                else:
                    status = "target" if cand.mark_count >= target else "infeasible"
                return MarkingResult(status, cand, cand.mark_count, calls, rounds)
            rounds += 1
            logger.debug("marking with %d marks fails at cut %s", cand.mark_count, report.counterexample)
            enc.hard.add(_blocking_clause(cand, enc, report))
            if encoding == LOCAL:
                base.hard.add(enc.hard.clauses[-1])
        if target is not None and k <= target and not report_best:
            return MarkingResult("infeasible", None, -1, calls, rounds)
        k -= 1
    raise AssertionError("the empty marking is always robust")
