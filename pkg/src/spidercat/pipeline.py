"""End-to-end synthesis: graph search, marking, tree, extraction, verification."""

from __future__ import annotations

import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .extract import (Circuit, circuit_from_graph, extract_circuit, lower_bounds, recursive_cat,
                      resource_counts, shallow_cat, write_circuit)
from .graph_core import (OPTIMAL_RATIO, GraphSearchConfig, MarkedGraph, all_cubic_graphs, hill_climb,
                         write_graph)
from .marking import EXACT, exact_constraints, solve_marking
from .robustness import is_t_robust
from .sat import SAT, UNSAT, solve
from .treeplan import build_spider_tree, ring_zgraph
from .verify import check_ft, circuit_hash, is_cat, simulate

logger = logging.getLogger(__name__)

SCHEMA = 1
MODES = ("optimal", "recursive", "shallow")
VERIFY_LEVELS = ("none", "graph", "full")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INFEASIBLE = 2

# largest vertex count for which every cubic graph is tried before giving up
CERTIFY_MAX_VERTICES = 12


@dataclass(frozen=True)
class PipelineConfig:
    n: int
    t: int
    mode: str = "optimal"
    seed: int = 0
    solver_backend: str | None = None
    out_dir: str | None = None
    verify_level: str = "full"
    restarts: int = 8
    max_iters: int = 20_000
    jobs: int = 1

    def __post_init__(self) -> None:
        if self.n < 3:
            raise ValueError("n must be at least 3")
        if self.t < 1:
            raise ValueError("t must be at least 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.verify_level not in VERIFY_LEVELS:
            raise ValueError(f"verify_level must be one of {VERIFY_LEVELS}")
        if self.mode == "recursive" and self.n < self.t + 1:
            raise ValueError("recursive mode needs n >= t + 1")
        if self.mode == "shallow" and self.t < 2:
            raise ValueError("shallow mode needs t >= 2")
        if self.restarts < 1 or self.jobs < 1:
            raise ValueError("restarts and jobs must be positive")


@dataclass
class PipelineResult:
    status: str  # ok, infeasible, failed
    circuit: Circuit | None = None
    graph: MarkedGraph | None = None
    report: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return {"ok": EXIT_OK, "infeasible": EXIT_INFEASIBLE}.get(self.status, EXIT_FAILED)


def target_vertices(n: int, t: int) -> int:
    """Internal spider count that meets the CNOT lower bound for (n, t)."""
    return math.ceil(OPTIMAL_RATIO[min(t, 5)] * n)


def restart_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def trim_marks(g: MarkedGraph, n: int, t: int) -> MarkedGraph:
    """Drop marks until exactly ``n`` remain.

    Removing a mark never turns a good cut bad, so robustness survives; the
    result is re-certified anyway. Doubly marked edges lose a mark first,
    then the highest-numbered marked edges.
    """
    marks = list(g.marks)
    excess = sum(marks) - n
    if excess < 0:
        raise ValueError("graph carries fewer marks than requested")
    order = sorted(range(len(marks)), key=lambda i: (-marks[i], -i))
    while excess > 0:
        for i in order:
            if excess and marks[i] == max(marks):
                marks[i] -= 1
                excess -= 1
        order = sorted(range(len(marks)), key=lambda i: (-marks[i], -i))
    out = g.with_marks(marks)
    report = is_t_robust(out, t)
    if not report.robust:
        raise RuntimeError(f"trimmed marking lost robustness at {report.counterexample}")
    return out


def _marking_attempt(args) -> dict:
    """One restart: search a graph, then mark it with at least n marks."""
    n, t, vertices, seed, max_iters, backend = args
    outcome = hill_climb(GraphSearchConfig(t, vertices, max_iters=max_iters, seed=seed),
                         cut_checker=_cut_checker(backend))
    info = {"seed": seed, "search": outcome.status, "iterations": outcome.iterations,
            "girth": outcome.girth, "best_marks": -1, "graph": None}
    if not outcome.found:
        return info
    res = solve_marking(outcome.graph, t, backend=backend, target=n)
    if not res.ok and vertices <= 16:
        res = solve_marking(outcome.graph, t, backend=backend, target=n, encoding=EXACT)
    info["best_marks"] = res.best_count
    if res.graph is not None and res.graph.mark_count >= n:
        info["graph"] = res.graph.to_text()
    return info


def _cut_checker(backend):
    from .robustness import has_nonlocal_cut_sat

    def check(g, t):
        return has_nonlocal_cut_sat(g, t, backend)

    return check


def find_marked_graph(n: int, t: int, vertices: int, seed: int, restarts: int, max_iters: int,
                      backend: str | None, jobs: int = 1) -> tuple[MarkedGraph | None, list[dict]]:
    """Restarts of graph search + marking; the lowest successful restart index wins."""
    tasks = [(n, t, vertices, restart_seed(seed, i), max_iters, backend) for i in range(restarts)]
    attempts: list[dict] = []
    for start in range(0, restarts, jobs):
        batch = tasks[start:start + jobs]
        if jobs > 1:
            with ProcessPoolExecutor(jobs) as pool:
                results = list(pool.map(_marking_attempt, batch))
        else:
            results = [_marking_attempt(task) for task in batch]
        for info in results:
            attempts.append(info)
            if info["graph"] is not None:
                return MarkedGraph.from_text(info["graph"]), attempts
    return None, attempts


def certify_infeasible(n: int, t: int, vertices: int, backend: str | None) -> dict | None:
    """Try every simple cubic graph on ``vertices`` vertices with the complete encoding.

    Returns a certificate when none admits a t-robust marking with n marks,
    or None when the enumeration is out of reach or a marking exists.
    """
    if vertices % 2:
        return {"kind": "parity", "vertices": vertices,
                "reason": "cubic graphs have an even number of vertices"}
    if vertices > CERTIFY_MAX_VERTICES:
        return None
    if vertices < 4:
        return {"kind": "size", "vertices": vertices, "reason": "no cubic graph has fewer than 4 vertices"}
    graphs = all_cubic_graphs(vertices)
    best = 0
    for g in graphs:
        res = solve(exact_constraints(g, t, n).hard, backend)
        if res.status != UNSAT:
            return None
        # feasibility is monotone in the mark count, so the best only ever climbs
        while best + 1 < n and solve(exact_constraints(g, t, best + 1).hard, backend).status == SAT:
            best += 1
    return {"kind": "exhaustive", "vertices": vertices, "graphs_checked": len(graphs), "best_marks": best,
            "scope": "connected simple cubic graphs, up to two marks per edge"}


def _verify(c: Circuit, g: MarkedGraph | None, n: int, t: int, level: str, jobs: int) -> dict:
    out: dict = {"level": level}
    if level == "none":
        return out
    if g is not None:
        out["graph_robust"] = is_t_robust(g, t).robust
    if level == "full":
        sim = simulate(c)
        out["is_cat"] = is_cat(sim.state, n)
        ft = check_ft(c, t, jobs=jobs)
        out["ft"] = ft.to_json()
    return out


def _passes(v: dict) -> bool:
    return v.get("graph_robust", True) and v.get("is_cat", True) and v.get("ft", {}).get("verdict", "ft") == "ft"


def synthesize(cfg: PipelineConfig) -> PipelineResult:
    """Run the pipeline for ``cfg`` and write artifacts when ``cfg.out_dir`` is set."""
    n, t = cfg.n, cfg.t
    bounds = lower_bounds(n, t)
    report: dict = {"schema": SCHEMA, "n": n, "t": t, "mode": cfg.mode, "seed": cfg.seed,
                    "lower_bounds": bounds.to_json()}
    g: MarkedGraph | None = None
    c: Circuit | None = None
    status = "ok"
    if cfg.mode == "recursive":
        c = recursive_cat(n, t)
    elif cfg.mode == "optimal" and t == 1:
        z = ring_zgraph(n)
        c = extract_circuit(z, build_spider_tree(z))
    else:
        g = _graph_for(cfg, report)
        status = report.pop("status_hint", "ok")
        if g is None:
            pass
        elif cfg.mode == "shallow":
            c = shallow_cat(g)
        else:
            c = circuit_from_graph(g)
    if c is not None:
        report["resources"] = resource_counts(c).to_json()
        report["circuit_hash"] = circuit_hash(c)
        report["meets_lower_bound"] = c.cnot_count == bounds.cnot_lb
        report["verification"] = _verify(c, g, n, t, cfg.verify_level, cfg.jobs)
        if not _passes(report["verification"]):
            status = "failed"
    if g is not None:
        report["graph"] = {"vertices": g.vertex_count, "marks": g.mark_count,
                           "vertex_ratio": str(g.vertex_ratio)}
    report["status"] = status
    result = PipelineResult(status, c, g, report)
    if cfg.out_dir:
        write_artifacts(result, cfg.out_dir)
    return result


def _graph_for(cfg: PipelineConfig, report: dict) -> MarkedGraph | None:
    """Find a t-robust marked graph carrying exactly n marks, or explain why not."""
    n, t = cfg.n, cfg.t
    vertices = target_vertices(n, t)
    exact_ratio = t in OPTIMAL_RATIO
    report["target_vertices"] = vertices
    attempts: list[dict] = []
    g = None
    if vertices % 2 == 0 and vertices >= 4:
        g, attempts = find_marked_graph(n, t, vertices, cfg.seed, cfg.restarts, cfg.max_iters,
                                        cfg.solver_backend, cfg.jobs)
    report["search"] = [{k: v for k, v in a.items() if k != "graph"} for a in attempts]
    if g is not None:
        return trim_marks(g, n, t)
    best = max((a["best_marks"] for a in attempts), default=-1)
    report["best_marks_at_target"] = best
    cert = certify_infeasible(n, t, vertices, cfg.solver_backend) if exact_ratio else None
    # the target is out of reach; fall back to the next even vertex counts
    fallback = None
    for extra in range(1, 7):
        v2 = vertices + extra
        if v2 % 2 or v2 < 4:
            continue
        fallback, _ = find_marked_graph(n, t, v2, cfg.seed, cfg.restarts, cfg.max_iters,
                                           cfg.solver_backend, cfg.jobs)
        if fallback is not None:
            report["fallback_vertices"] = v2
            break
    if cert is not None:
        report["certificate"] = cert
        report["best_marks_at_target"] = max(best, cert.get("best_marks", -1))
        report["status_hint"] = "infeasible"
    elif fallback is None:
        report["status_hint"] = "failed"
    if fallback is not None:
        return trim_marks(fallback, n, t)
    return None


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_artifacts(result: PipelineResult, out_dir: str | os.PathLike) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if result.graph is not None:
        write_graph(result.graph, out / "graph.txt")
    if result.circuit is not None:
        write_circuit(result.circuit, out / "circuit.txt")
    (out / "report.json").write_text(_dump(result.report))
