"""Acceptance criteria, one test each.

Every test records a single PASS/FAIL line (collected into the terminal
summary) before asserting. Criteria that cannot be met are left failing;
the reason is printed with the line.
"""

import itertools
import json
import math
import time
from fractions import Fraction

import pytest
from scipy.stats import spearmanr

from helpers import corpus, oracle_nonlocal_cut
from spidercat.cli import main
from spidercat.extract import (circuit_from_graph, ladder_cat, lower_bounds, recursive_cat, recursive_cnot_count,
                               recursive_formula, resource_counts, shallow_cat)
from spidercat.graph_core import OPTIMAL_RATIO, optimal_family, random_cubic
from spidercat.pipeline import EXIT_INFEASIBLE, PipelineConfig, synthesize
from spidercat.robustness import has_nonlocal_cut_bruteforce, has_nonlocal_cut_sat, is_t_robust
from spidercat.verify import check_ft, fault_sites, is_cat, monte_carlo, simulate

pytestmark = pytest.mark.slow


def test_criterion_01_optimal_counts(criterion):
    rows, ok = [], True
    for n, t in ((9, 2), (12, 3), (12, 4), (14, 5)):
        start = time.perf_counter()
        res = synthesize(PipelineConfig(n, t))
        secs = time.perf_counter() - start
        lb = lower_bounds(n, t).cnot_lb
        got = res.circuit.cnot_count if res.circuit else None
        hit = got == lb and res.exit_code == 0 and secs < 300
        note = f" ({res.report['certificate']['kind']} certificate)" if "certificate" in res.report else ""
        rows.append(f"({n},{t}) {got}/{lb} in {secs:.1f}s{note}")
        ok &= hit
    criterion(1, "optimal counts", ok, "; ".join(rows))
    assert ok


def test_criterion_02_infeasibility_witness(criterion):
    start = time.perf_counter()
    res = synthesize(PipelineConfig(12, 5))
    secs = time.perf_counter() - start
    cert = res.report.get("certificate", {})
    ok = res.exit_code == EXIT_INFEASIBLE and cert.get("kind") == "exhaustive" and secs < 600
    criterion(2, "infeasibility witness", ok,
              f"exit {res.exit_code}, {cert.get('graphs_checked')} graphs on {cert.get('vertices')} vertices, "
              f"best {res.report.get('best_marks_at_target')} marks, {secs:.1f}s")
    assert ok


def _all_circuits():
    for item in corpus():
        yield item["name"], item["circuit"]
        if item["graph"] is not None:
            yield item["name"] + "-shallow", shallow_cat(item["graph"])
    for n, t in ((8, 1), (16, 1), (16, 3), (12, 2), (20, 3)):
        yield f"recursive-n{n}-t{t}", recursive_cat(n, t)


def test_criterion_03_correctness(criterion):
    bad = [name for name, c in _all_circuits() if not is_cat(simulate(c).state, c.n)]
    total = sum(1 for _ in _all_circuits())
    ok = not bad
    criterion(3, "correctness", ok, f"{total - len(bad)}/{total} circuits prepare CAT_n exactly")
    assert ok


def test_criterion_04_fault_tolerance(criterion):
    checked, problems = 0, []
    for item in corpus():
        c, g, t = item["circuit"], item["graph"], item["t"]
        if t >= 4 and c.n > 14:
            continue
        L = len(fault_sites(c))
        if sum(math.comb(L, f) for f in range(1, t + 1)) > 1e8:
            continue
        rep = check_ft(c, t)
        checked += 1
        if not (rep.ft and rep.exhaustive):
            problems.append(f"{item['name']} {rep.verdict}")
        if g is not None:
            # agreement at the target and one above it, where violations show up
            for tt in (t, t + 1) if t <= 3 else (t,):
                if is_t_robust(g, tt).robust != check_ft(c, tt).ft:
                    problems.append(f"{item['name']} disagrees at t={tt}")
    ok = not problems and checked == len(corpus())
    criterion(4, "exhaustive fault tolerance", ok,
              f"{checked} circuits exhaustive, graph/circuit verdicts agree" if ok else "; ".join(problems))
    assert ok


def test_criterion_05_recursive(criterion):
    mismatches, ft_fail, anc_fail = [], [], []
    for t in (1, 3, 7):
        for k in range(5):
            n = 2 ** k * (t + 1)
            c = recursive_cat(n, t)
            assert c.cnot_count == recursive_cnot_count(n, t)
            if c.cnot_count != recursive_formula(n, t):
                mismatches.append((n, t, c.cnot_count, recursive_formula(n, t)))
            if resource_counts(c).ancillas > n // 2:
                anc_fail.append(f"({n},{t})")
            if (t == 1 and n <= 32) or (t == 3 and n <= 16):
                rep = check_ft(c, t)
                if not (rep.ft and rep.exhaustive):
                    ft_fail.append(f"({n},{t})")
    ok = not (mismatches or ft_fail or anc_fail)
    detail = (f"ancillas <= n/2 everywhere: {not anc_fail}; exhaustive FT: {not ft_fail}; "
              f"closed-form count matches on {15 - len(mismatches)}/15")
    if mismatches:
        off_by_n = all(got - formula == n for n, _, got, formula in mismatches)
        example = next((m for m in mismatches if m[:2] == (16, 1)), mismatches[0])
        detail += (f"; the construction uses {'exactly n' if off_by_n else 'a different number of'} "
                   f"CNOTs more than the closed form, e.g. (n,t)=({example[0]},{example[1]}) "
                   f"{example[2]} vs {example[3]}; see the decision ledger")
    criterion(5, "recursive construction", ok, detail)
    assert ok


def test_criterion_06_shallow(criterion):
    problems, count = [], 0
    for item in corpus():
        g, t = item["graph"], item["t"]
        if g is None or not is_t_robust(g, t).robust:
            continue
        count += 1
        rc = resource_counts(shallow_cat(g))
        r = Fraction(g.vertex_count, g.mark_count)
        if rc.cnot_depth != 3 or rc.cnots > (29 * r + 26) / 10 * g.mark_count:
            problems.append(f"{item['name']} depth {rc.cnot_depth} cnots {rc.cnots}")
    ok = not problems
    criterion(6, "shallow construction", ok, f"{count} graphs, depth 3 and within the CNOT bound"
              if ok else "; ".join(problems))
    assert ok


def test_criterion_07_family(criterion):
    problems = []
    for t in (2, 3, 4, 5):
        for k in range(1, 6):
            g = optimal_family(t, k)
            if g.vertex_ratio != OPTIMAL_RATIO[t] or not is_t_robust(g, t).robust:
                problems.append(f"t={t} k={k}")
    ok = not problems
    criterion(7, "family optimality", ok, "t=2..5, k=1..5 at the optimal ratio and robust"
              if ok else "; ".join(problems))
    assert ok


def test_criterion_08_sat_vs_brute_force(criterion):
    disagreements, cases = 0, 0
    sizes = itertools.cycle((4, 6, 8, 10, 12, 14, 16))
    for i in range(50):
        n = next(sizes)
        g = random_cubic(n, 1000 + i)
        t = 1 + i % 5
        brute = has_nonlocal_cut_bruteforce(g, t) is not None
        sat = has_nonlocal_cut_sat(g, t)
        if n <= 10:
            # a third, independent route on the small graphs
            disagreements += brute != oracle_nonlocal_cut(g, t)
        disagreements += brute != sat
        cases += 1
    ok = disagreements == 0
    criterion(8, "SAT vs brute force", ok, f"{cases} graphs, {disagreements} disagreements")
    assert ok


def test_criterion_09_monte_carlo_trends(criterion):
    p, shots = 0.05, 1_000_000
    rhos, overlaps, runs = {}, [], 0
    for t, ks in ((2, range(1, 6)), (3, range(1, 6)), (4, range(1, 4))):
        flags, acc = [], []
        for k in ks:
            c = circuit_from_graph(optimal_family(t, k))
            mc = monte_carlo(c, t, p, shots, seed=k)
            base = monte_carlo(ladder_cat(c.n), t, p, shots, seed=k)
            runs += 2
            flags.append(resource_counts(c).flags)
            acc.append(mc.acceptance_rate)
            if not mc.ci95[1] < base.ci95[0]:
                overlaps.append(f"t={t} n={c.n}")
        rhos[t] = spearmanr(flags, acc).statistic
    ok = all(r < -0.9 for r in rhos.values()) and not overlaps
    detail = ", ".join(f"rho(t={t})={r:.3f}" for t, r in rhos.items())
    detail += f"; FT p_over_t below ladder with disjoint 95% CIs in {runs // 2 - len(overlaps)}/{runs // 2}"
    criterion(9, "Monte Carlo trends", ok, detail)
    assert ok


def _synthesize_files(tmp, n, t, jobs, capsys):
    main(["synthesize", "--n", str(n), "--t", str(t), "--seed", "7", "--jobs", str(jobs), "--out", str(tmp)])
    capsys.readouterr()
    return {f: (tmp / f).read_bytes() for f in ("graph.txt", "circuit.txt", "report.json")}


def test_criterion_10_determinism(tmp_path, capsys, criterion):
    same = True
    for n, t in ((12, 4), (14, 5), (16, 3)):
        a = _synthesize_files(tmp_path / f"{n}-{t}-a", n, t, 1, capsys)
        b = _synthesize_files(tmp_path / f"{n}-{t}-b", n, t, 1, capsys)
        c = _synthesize_files(tmp_path / f"{n}-{t}-c", n, t, 4, capsys)
        same &= a == b == c
    circ = tmp_path / "12-4-a" / "circuit.txt"
    outs = []
    for jobs in (1, 1, 4):
        main(["bench", str(circ), "--t", "4", "--shots", "200000", "--seed", "3", "--jobs", str(jobs)])
        outs.append(capsys.readouterr().out)
    same &= len(set(outs)) == 1 and json.loads(outs[0])["results"][0]["shots"] == 200000
    criterion(10, "determinism", same, "synthesize artifacts and bench JSON byte-identical across runs and jobs 1/4")
    assert same
