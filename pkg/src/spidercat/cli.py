"""Command-line front end.

Exit codes: ``synthesize`` returns 0 on success, 2 when the optimal count is
certified infeasible and 1 on internal failure. ``verify`` returns 0 when
every check passes, 1 when one fails and 3 when the circuit cannot be
parsed. Flags override the ``SPIDERCAT_SOLVER`` and ``SPIDERCAT_SEED``
environment variables, which override the built-in defaults.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from pathlib import Path

from .extract import CircuitFormatError, read_circuit, resource_counts
from .graph_core import GraphFormatError, read_graph
from .marking import marking_constraints
from .pipeline import EXIT_FAILED, SCHEMA, PipelineConfig, synthesize
from .robustness import is_t_robust, nonlocal_cut_cnf
from .verify import check_ft, circuit_hash, is_cat, monte_carlo, simulate, PostselectionError

EXIT_PARSE = 3


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _emit(obj, path: str | None) -> None:
    text = _dump(obj)
    if path:
        Path(path).write_text(text)
    sys.stdout.write(text)


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    return int(os.environ.get("SPIDERCAT_SEED", "0"))


def _solver(args) -> str | None:
    return args.solver or os.environ.get("SPIDERCAT_SOLVER") or None


def cmd_synthesize(args) -> int:
    try:
        cfg = PipelineConfig(n=args.n, t=args.t, mode=args.mode, seed=_seed(args),
                             solver_backend=_solver(args), out_dir=args.out,
                             verify_level=args.verify, restarts=args.restarts, jobs=args.jobs)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED
    result = synthesize(cfg)
    sys.stdout.write(_dump(result.report))
    return result.exit_code


def cmd_verify(args) -> int:
    start = time.perf_counter()
    try:
        c = read_circuit(args.circuit)
        g = read_graph(args.graph) if args.graph else None
    except (OSError, CircuitFormatError, GraphFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    report = {"schema": SCHEMA, "circuit_hash": circuit_hash(c), "n": c.n, "t": args.t}
    ok = True
    if args.n is not None and args.n != c.n:
        report["error"] = f"circuit has {c.n} outputs, expected {args.n}"
        ok = False
    try:
        state = simulate(c).state
        report["is_cat"] = is_cat(state, c.n)
    except PostselectionError as exc:
        report["is_cat"] = False
        report["error"] = str(exc)
    ok = ok and report["is_cat"]
    if g is not None:
        robust = is_t_robust(g, args.t)
        report["graph_robust"] = robust.robust
        ok = ok and robust.robust
    if args.level == "full" and report["is_cat"]:
        ft = check_ft(c, args.t, jobs=args.jobs)
        report.update(verdict=ft.verdict, combos_checked=ft.combos_checked, locations=ft.locations,
                      exhaustive=ft.exhaustive)
        if ft.counterexample is not None:
            report["counterexample"] = ft.counterexample
        ok = ok and ft.ft
    report.setdefault("verdict", "pass" if ok else "fail")
    report["passed"] = bool(ok)
    report["runtime_ms"] = round((time.perf_counter() - start) * 1000)
    _emit(report, args.report)
    return 0 if ok else 1


def cmd_bench(args) -> int:
    rows = []
    for path in args.circuits:
        try:
            c = read_circuit(path)
        except (OSError, CircuitFormatError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_PARSE
        mc = monte_carlo(c, args.t, args.p, args.shots, seed=_seed(args), jobs=args.jobs)
        row = {"label": Path(path).stem if len(args.circuits) > 1 else Path(path).name,
               "circuit": str(path), "circuit_hash": circuit_hash(c), "n": c.n, "t": args.t,
               "p_phys": args.p, "seed": _seed(args)}
        row.update(mc.to_json())
        row.update(resource_counts(c).to_json())
        rows.append(row)
    out = {"schema": SCHEMA, "results": rows}
    if args.out:
        from .plots import failure_vs_flags, flags_vs_acceptance

        d = Path(args.out)
        d.mkdir(parents=True, exist_ok=True)
        (d / "bench.json").write_text(_dump(out))
        with open(d / "bench.csv", "w", newline="") as fh:
            cols = ["label", "n", "t", "p_phys", "shots", "accepted", "failures", "acceptance_rate",
                    "p_over_t", "cnots", "cnot_depth", "ancillas", "flags"]
            writer = csv.DictWriter(fh, fieldnames=cols, extrasaction="ignore")
            writer.writeheader()
            writer.writerows(rows)
        flags_vs_acceptance(rows, d / "flags_vs_acceptance.png")
        failure_vs_flags(rows, d / "failure_vs_flags.png")
    sys.stdout.write(_dump(out))
    return 0


def cmd_export_cnf(args) -> int:
    try:
        g = read_graph(args.graph)
    except (OSError, GraphFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    text = nonlocal_cut_cnf(g, args.t).to_dimacs()
    _write_text(text, args.out)
    return 0


def cmd_export_wcnf(args) -> int:
    try:
        g = read_graph(args.graph)
    except (OSError, GraphFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        text = marking_constraints(g.unmarked(), args.t).to_wdimacs()
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED
    _write_text(text, args.out)
    return 0


def _write_text(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spidercat", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synthesize", help="build a CAT-state circuit for (n, t)")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--t", type=int, required=True)
    s.add_argument("--mode", choices=["optimal", "recursive", "shallow"], default="optimal")
    s.add_argument("--seed", type=int)
    s.add_argument("--solver", help="SAT backend: internal, glucose or a path to a DIMACS solver binary")
    s.add_argument("--out", help="directory for graph.txt, circuit.txt and report.json")
    s.add_argument("--verify", choices=["none", "graph", "full"], default="full")
    s.add_argument("--restarts", type=int, default=8)
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_synthesize)

    v = sub.add_parser("verify", help="check a circuit prepares CAT_n fault-tolerantly")
    v.add_argument("circuit")
    v.add_argument("--n", type=int)
    v.add_argument("--t", type=int, required=True)
    v.add_argument("--level", choices=["graph", "full"], default="full")
    v.add_argument("--graph", help="marked graph to certify alongside the circuit")
    v.add_argument("--report", help="also write the JSON report here")
    v.add_argument("--jobs", type=int, default=1)
    v.set_defaults(func=cmd_verify)

    b = sub.add_parser("bench", help="Monte Carlo acceptance and failure rates")
    b.add_argument("circuits", nargs="+")
    b.add_argument("--t", type=int, required=True)
    b.add_argument("--p", type=float, default=0.05)
    b.add_argument("--shots", type=int, default=1_000_000)
    b.add_argument("--seed", type=int)
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--out", help="directory for bench.json, bench.csv and figures")
    b.set_defaults(func=cmd_bench)

    e = sub.add_parser("export-cnf", help="DIMACS CNF for the nonlocal-cut question")
    e.add_argument("graph")
    e.add_argument("--t", type=int, required=True)
    e.add_argument("--out")
    e.set_defaults(func=cmd_export_cnf)

    w = sub.add_parser("export-wcnf", help="weighted CNF for the marking problem")
    w.add_argument("graph")
    w.add_argument("--t", type=int, required=True)
    w.add_argument("--out")
    w.set_defaults(func=cmd_export_wcnf)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
