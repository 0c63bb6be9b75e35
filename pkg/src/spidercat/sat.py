"""Small CNF toolkit: formula container, cardinality encodings, CDCL solver.

The bundled solver is a conflict-driven clause-learning search with two
watched literals, first-UIP learning, activity-based branching, phase saving
and Luby restarts. It is tuned for the formulas produced in this package
(a few thousand variables) rather than for competition instances. Any solver
speaking the DIMACS output convention can be plugged in instead.
"""

from __future__ import annotations

import heapq
import logging
import os
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence

logger = logging.getLogger(__name__)

SAT = "SAT"
UNSAT = "UNSAT"
UNKNOWN = "UNKNOWN"


class BackendError(RuntimeError):
    """The external solver is missing, crashed or produced unreadable output."""


@dataclass
class CNF:
    num_vars: int = 0
    clauses: list[list[int]] = field(default_factory=list)
    names: dict[int, str] = field(default_factory=dict)

    def new_var(self, name: str | None = None) -> int:
        self.num_vars += 1
        if name is not None:
            self.names[self.num_vars] = name
        return self.num_vars

    def new_vars(self, count: int) -> list[int]:
        return [self.new_var() for _ in range(count)]

    def add(self, clause: Iterable[int]) -> None:
        c = [int(l) for l in clause]
        for l in c:
            if l == 0 or abs(l) > self.num_vars:
                raise ValueError(f"literal {l} outside 1..{self.num_vars}")
        self.clauses.append(c)

    def extend(self, clauses: Iterable[Iterable[int]]) -> None:
        for c in clauses:
            self.add(c)

    def to_dimacs(self) -> str:
        out = [f"c {v} {name}" for v, name in sorted(self.names.items())]
        out.append(f"p cnf {self.num_vars} {len(self.clauses)}")
        out += [" ".join(map(str, c)) + " 0" for c in self.clauses]
        return "\n".join(out) + "\n"

    def to_wdimacs(self, soft: Sequence[tuple[int, list[int]]]) -> str:
        """Weighted DIMACS with the current clauses hard and ``soft`` as (weight, clause)."""
        top = sum(w for w, _ in soft) + 1
        out = [f"p wcnf {self.num_vars} {len(self.clauses) + len(soft)} {top}"]
        out += [f"{top} " + " ".join(map(str, c)) + " 0" for c in self.clauses]
        out += [f"{w} " + " ".join(map(str, c)) + " 0" for w, c in soft]
        return "\n".join(out) + "\n"


def parse_dimacs(text: str) -> CNF:
    cnf = CNF()
    declared = None
    pending: list[int] = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            parts = line.split()
            declared = int(parts[2])
            cnf.num_vars = declared
            continue
        for tok in line.split():
            lit = int(tok)
            if lit == 0:
                cnf.add(pending)
                pending = []
            else:
                pending.append(lit)
    if declared is None:
        raise ValueError("missing problem line")
    return cnf


# ---------------------------------------------------------------------------
# cardinality constraints


def at_most_k(cnf: CNF, lits: Sequence[int], k: int, guard: int | None = None) -> None:
    """Sequential-counter encoding of ``sum(lits) <= k``.

    With ``guard`` set, every clause gets ``-guard`` appended so the bound
    only applies when the guard literal is true.
    """
    extra = [] if guard is None else [-guard]
    n = len(lits)
    if k < 0:
        cnf.add(extra)
        return
    if k >= n:
        return
    if k == 0:
        for x in lits:
            cnf.add([-x] + extra)
        return
    s = [cnf.new_vars(k) for _ in range(n - 1)]
    cnf.add([-lits[0], s[0][0]] + extra)
    for j in range(1, k):
        cnf.add([-s[0][j]] + extra)
    for i in range(1, n - 1):
        x = lits[i]
        cnf.add([-x, s[i][0]] + extra)
        cnf.add([-s[i - 1][0], s[i][0]] + extra)
        for j in range(1, k):
            cnf.add([-x, -s[i - 1][j - 1], s[i][j]] + extra)
            cnf.add([-s[i - 1][j], s[i][j]] + extra)
        cnf.add([-x, -s[i - 1][k - 1]] + extra)
    cnf.add([-lits[n - 1], -s[n - 2][k - 1]] + extra)


def at_least_k(cnf: CNF, lits: Sequence[int], k: int, guard: int | None = None) -> None:
    at_most_k(cnf, [-l for l in lits], len(lits) - k, guard)


# ---------------------------------------------------------------------------
# solving


@dataclass(frozen=True)
class SatResult:
    status: str
    model: tuple[bool, ...] | None = None  # index 0 unused
    conflicts: int = 0
    seconds: float = 0.0

    def value(self, var: int) -> bool:
        if self.model is None:
            raise ValueError("no model available")
        return self.model[var]


def default_backend() -> str:
    """``glucose`` when the python-sat bindings are importable, else ``internal``."""
    try:
        import pysat.solvers  # noqa: F401
    except ImportError:
        return "internal"
    return "glucose"


def solve(cnf: CNF, backend: str | None = None, timeout: float | None = None) -> SatResult:
    """Solve with Glucose (via python-sat), the bundled CDCL search or a DIMACS binary.

    ``backend`` is ``None`` (see :func:`default_backend`), ``"glucose"``,
    ``"internal"`` or a path to a solver executable.
    """
    if backend in (None, ""):
        backend = default_backend()
    if backend == "internal":
        return cdcl(cnf, timeout)
    if backend == "glucose":
        return _glucose(cnf, timeout)
    return _external(cnf, backend, timeout)


def _glucose(cnf: CNF, timeout: float | None) -> SatResult:
    import threading

    from pysat.solvers import Solver

    start = time.monotonic()
    if any(not c for c in cnf.clauses):
        return SatResult(UNSAT, seconds=0.0)
    with Solver(name="glucose4", bootstrap_with=cnf.clauses) as s:
        timer = None
        if timeout is not None:
            timer = threading.Timer(timeout, s.interrupt)
            timer.start()
        try:
            ok = s.solve_limited(expect_interrupt=True) if timer else s.solve()
        finally:
            if timer:
                timer.cancel()
        elapsed = time.monotonic() - start
        if ok is None:
            return SatResult(UNKNOWN, seconds=elapsed)
        if not ok:
            return SatResult(UNSAT, seconds=elapsed)
        model = [False] * (cnf.num_vars + 1)
        for lit in s.get_model() or []:
            if 0 < lit <= cnf.num_vars:
                model[lit] = True
    res = SatResult(SAT, tuple(model), seconds=elapsed)
    if not check_model(cnf, res.model):
        raise BackendError("solver returned a model that violates the formula")
    return res


def _external(cnf: CNF, path: str, timeout: float | None) -> SatResult:
    start = time.monotonic()
    with tempfile.NamedTemporaryFile("w", suffix=".cnf", delete=False) as fh:
        fh.write(cnf.to_dimacs())
        name = fh.name
    try:
        proc = subprocess.run([path, name], capture_output=True, text=True, timeout=timeout)
    except FileNotFoundError as exc:
        raise BackendError(f"solver binary not found: {path}") from exc
    except subprocess.TimeoutExpired:
        return SatResult(UNKNOWN, seconds=time.monotonic() - start)
    finally:
        os.unlink(name)
    if proc.returncode not in (0, 10, 20):
        raise BackendError(f"solver exited with code {proc.returncode}: {proc.stderr.strip()[:200]}")
    status = None
    values: list[int] = []
    for line in proc.stdout.splitlines():
        if line.startswith("s "):
            word = line[2:].strip()
            status = {"SATISFIABLE": SAT, "UNSATISFIABLE": UNSAT}.get(word, UNKNOWN)
        elif line.startswith("v "):
            values += [int(x) for x in line[2:].split()]
    if status is None:
        raise BackendError("solver output has no status line")
    elapsed = time.monotonic() - start
    if status != SAT:
        return SatResult(status, seconds=elapsed)
    model = [False] * (cnf.num_vars + 1)
    for lit in values:
        if lit > 0 and lit <= cnf.num_vars:
            model[lit] = True
    res = SatResult(SAT, tuple(model), seconds=elapsed)
    if not check_model(cnf, res.model):
        raise BackendError("solver returned a model that violates the formula")
    return res


def check_model(cnf: CNF, model: Sequence[bool]) -> bool:
    return all(any(model[l] if l > 0 else not model[-l] for l in c) for c in cnf.clauses)


def _luby(i: int) -> int:
    k = 1
    while (1 << k) - 1 < i:
        k += 1
    while True:
        if i == (1 << k) - 1:
            return 1 << (k - 1)
        i -= (1 << (k - 1)) - 1
        k = 1
        while (1 << k) - 1 < i:
            k += 1


def cdcl(cnf: CNF, timeout: float | None = None) -> SatResult:
    start = time.monotonic()
    deadline = None if timeout is None else start + timeout
    n = cnf.num_vars
    assign = [0] * (n + 1)
    level = [0] * (n + 1)
    reason = [-1] * (n + 1)
    phase = [-1] * (n + 1)
    activity = [0.0] * (n + 1)
    seen = [False] * (n + 1)
    watches: list[list[int]] = [[] for _ in range(2 * n + 2)]
    db: list[list[int]] = []
    trail: list[int] = []
    trail_lim: list[int] = []
    heap = [(0.0, v) for v in range(1, n + 1)]
    heapq.heapify(heap)
    inc = 1.0
    conflicts = 0

    def widx(l: int) -> int:
        return 2 * l if l > 0 else -2 * l + 1

    def enqueue(l: int, why: int) -> None:
        v = abs(l)
        assign[v] = 1 if l > 0 else -1
        level[v] = len(trail_lim)
        reason[v] = why
        trail.append(l)

    def done(status: str) -> SatResult:
        model = None
        if status == SAT:
            model = tuple([False] + [assign[v] > 0 for v in range(1, n + 1)])
        return SatResult(status, model, conflicts, time.monotonic() - start)

    units: list[int] = []
    for raw in cnf.clauses:
        c = list(dict.fromkeys(raw))
        if any(-l in c for l in c):
            continue
        if not c:
            return done(UNSAT)
        if len(c) == 1:
            units.append(c[0])
            continue
        watches[widx(c[0])].append(len(db))
        watches[widx(c[1])].append(len(db))
        db.append(c)
    for l in units:
        val = assign[abs(l)] * (1 if l > 0 else -1)
        if val == -1:
            return done(UNSAT)
        if val == 0:
            enqueue(l, -1)

    qhead = 0

    def propagate() -> int:
        nonlocal qhead
        while qhead < len(trail):
            p = trail[qhead]
            qhead += 1
            false_lit = -p
            ws = watches[widx(false_lit)]
            i = j = 0
            end = len(ws)
            while i < end:
                ci = ws[i]
                i += 1
                c = db[ci]
                if c[0] == false_lit:
                    c[0], c[1] = c[1], c[0]
                first = c[0]
                fv = assign[first] if first > 0 else -assign[-first]
                if fv == 1:
                    ws[j] = ci
                    j += 1
                    continue
                moved = False
                for k in range(2, len(c)):
                    lk = c[k]
                    if (assign[lk] if lk > 0 else -assign[-lk]) != -1:
                        c[1], c[k] = lk, false_lit
                        watches[widx(lk)].append(ci)
                        moved = True
                        break
                if moved:
                    continue
                ws[j] = ci
                j += 1
                if fv == -1:
                    while i < end:
                        ws[j] = ws[i]
                        j += 1
                        i += 1
                    del ws[j:]
                    return ci
                enqueue(first, ci)
            del ws[j:]
        return -1

    def bump(v: int) -> None:
        nonlocal inc
        activity[v] += inc
        if activity[v] > 1e100:
            for u in range(1, n + 1):
                activity[u] *= 1e-100
            inc *= 1e-100
            heap[:] = [(-activity[u], u) for u in range(1, n + 1) if assign[u] == 0]
            heapq.heapify(heap)
        elif assign[v] == 0:
            heapq.heappush(heap, (-activity[v], v))

    def backtrack(lvl: int) -> None:
        nonlocal qhead
        if len(trail_lim) <= lvl:
            return
        cut = trail_lim[lvl]
        for l in trail[cut:]:
            v = abs(l)
            phase[v] = assign[v]
            assign[v] = 0
            reason[v] = -1
            heapq.heappush(heap, (-activity[v], v))
        del trail[cut:]
        del trail_lim[lvl:]
        qhead = min(qhead, cut)

    def analyze(confl: int) -> tuple[list[int], int]:
        learnt = [0]
        counter = 0
        p = 0
        idx = len(trail) - 1
        cur = len(trail_lim)
        c = db[confl]
        while True:
            for q in (c if p == 0 else c[1:]):
                v = abs(q)
                if not seen[v] and level[v] > 0:
                    seen[v] = True
                    bump(v)
                    if level[v] >= cur:
                        counter += 1
                    else:
                        learnt.append(q)
            while not seen[abs(trail[idx])]:
                idx -= 1
            p = trail[idx]
            idx -= 1
            seen[abs(p)] = False
            counter -= 1
            if counter == 0:
                break
            c = db[reason[abs(p)]]
        learnt[0] = -p
        for q in learnt[1:]:
            seen[abs(q)] = False
        if len(learnt) == 1:
            return learnt, 0
        best = max(range(1, len(learnt)), key=lambda i: level[abs(learnt[i])])
        learnt[1], learnt[best] = learnt[best], learnt[1]
        return learnt, level[abs(learnt[1])]

    restart_idx = 1
    budget = 100 * _luby(restart_idx)
    while True:
        confl = propagate()
        if confl >= 0:
            conflicts += 1
            if not trail_lim:
                return done(UNSAT)
            learnt, back = analyze(confl)
            backtrack(back)
            if len(learnt) == 1:
                enqueue(learnt[0], -1)
            else:
                watches[widx(learnt[0])].append(len(db))
                watches[widx(learnt[1])].append(len(db))
                db.append(learnt)
                enqueue(learnt[0], len(db) - 1)
            inc *= 1.05
            budget -= 1
            if deadline is not None and conflicts % 64 == 0 and time.monotonic() > deadline:
                return done(UNKNOWN)
            continue
        if budget <= 0:
            restart_idx += 1
            budget = 100 * _luby(restart_idx)
            backtrack(0)
            continue
        var = 0
        while heap:
            act, v = heapq.heappop(heap)
            if assign[v] == 0 and -act == activity[v]:
                var = v
                break
        if var == 0:
            var = next((v for v in range(1, n + 1) if assign[v] == 0), 0)
            if var == 0:
                return done(SAT)
        trail_lim.append(len(trail))
        enqueue(var if phase[var] > 0 else -var, -1)
