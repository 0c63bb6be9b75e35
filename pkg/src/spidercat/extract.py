"""CNOT circuits for CAT states: extraction from Z-graphs and direct constructions.

Every circuit here uses only |0>/|+> preparations, CNOTs and measurements
whose outcomes are postselected on 0 (or + for X measurements).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .graph_core import OPTIMAL_RATIO, MarkedGraph
from .treeplan import SpiderTree, TreeError, ZGraph, to_zgraph, tree_problems

PREP_Z = "prep_z"
PREP_X = "prep_x"
CNOT = "cnot"
MEAS_Z = "mz"
MEAS_X = "mx"
PREPS = (PREP_Z, PREP_X)
MEASUREMENTS = (MEAS_Z, MEAS_X)

Op = tuple  # (name, qubit) or (CNOT, control, target)


class CircuitFormatError(ValueError):
    """Raised for malformed circuit text or structurally invalid circuits."""


@dataclass(frozen=True)
class Circuit:
    """Prepare-CNOT-measure circuit.

    Invariants checked on construction: qubits are prepared before use,
    measured qubits are only touched again after a fresh preparation, and
    output qubits are never measured.
    """

    qubit_count: int
    ops: tuple[Op, ...]
    output_qubits: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "ops", tuple(tuple(op) for op in self.ops))
        object.__setattr__(self, "output_qubits", tuple(self.output_qubits))
        live = [False] * self.qubit_count
        for op in self.ops:
            name, qs = op[0], op[1:]
            if any(not 0 <= q < self.qubit_count for q in qs):
                raise CircuitFormatError(f"{op} references a qubit outside 0..{self.qubit_count - 1}")
            if name in PREPS:
                if live[qs[0]]:
                    raise CircuitFormatError(f"qubit {qs[0]} prepared while still in use")
                live[qs[0]] = True
            elif name == CNOT:
                if qs[0] == qs[1]:
                    raise CircuitFormatError(f"{op} acts twice on one qubit")
                if not (live[qs[0]] and live[qs[1]]):
                    raise CircuitFormatError(f"{op} uses an unprepared qubit")
            elif name in MEASUREMENTS:
                if not live[qs[0]]:
                    raise CircuitFormatError(f"{op} measures an unprepared qubit")
                live[qs[0]] = False
            else:
                raise CircuitFormatError(f"unknown operation {name!r}")
        outs = set(self.output_qubits)
        if len(outs) != len(self.output_qubits):
            raise CircuitFormatError("duplicate output qubit")
        for q in self.output_qubits:
            if not 0 <= q < self.qubit_count or not live[q]:
                raise CircuitFormatError(f"output qubit {q} is not live at the end")

    @property
    def n(self) -> int:
        return len(self.output_qubits)

    @property
    def cnot_count(self) -> int:
        return sum(1 for op in self.ops if op[0] == CNOT)

    def to_text(self) -> str:
        lines = [f"qubits {self.qubit_count}", "outputs " + " ".join(map(str, self.output_qubits))]
        lines += [" ".join(map(str, op)) for op in self.ops]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> Circuit:
        qubits = None
        outputs = None
        ops = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            try:
                if parts[0] == "qubits" and len(parts) == 2:
                    qubits = int(parts[1])
                elif parts[0] == "outputs":
                    outputs = [int(x) for x in parts[1:]]
                elif parts[0] == CNOT and len(parts) == 3:
                    ops.append((CNOT, int(parts[1]), int(parts[2])))
                elif parts[0] in PREPS + MEASUREMENTS and len(parts) == 2:
                    ops.append((parts[0], int(parts[1])))
                else:
                    raise CircuitFormatError(f"line {lineno}: cannot parse {raw!r}")
            except ValueError as exc:
                if isinstance(exc, CircuitFormatError):
                    raise
                raise CircuitFormatError(f"line {lineno}: {exc}") from exc
        if qubits is None or outputs is None:
            raise CircuitFormatError("missing 'qubits' or 'outputs' header")
        return cls(qubits, tuple(ops), tuple(outputs))


def read_circuit(path: str | Path) -> Circuit:
    return Circuit.from_text(Path(path).read_text())


def write_circuit(c: Circuit, path: str | Path) -> None:
    Path(path).write_text(c.to_text())


# ---------------------------------------------------------------------------
# extraction from a Z-graph


def _tree_edge_ids(z: ZGraph, tree: SpiderTree) -> dict[int, int]:
    """Z-edge id realising each child's link to its parent."""
    free: dict[frozenset[int], list[int]] = {}
    for i, (a, b) in enumerate(z.z_edges):
        free.setdefault(frozenset((a, b)), []).append(i)
    link = {}
    for v, p in enumerate(tree.parent):
        if p >= 0:
            link[v] = free[frozenset((v, p))].pop(0)
    return link


def extract_circuit(z: ZGraph, tree: SpiderTree) -> Circuit:
    """Turn a Z-graph and spider-ordering tree into a circuit.

    Each tree path from a line start down through internal spiders to the
    first boundary spider becomes one qubit line, ending in that boundary
    spider's output. Every spider acts once as a CNOT control on its line;
    the root is split in two and acts twice, so a Z-graph whose boundary
    spiders all have two z-edges costs (spiders + 1) CNOTs. A leg leading to
    a child on another line targets that line's freshly prepared |0> qubit.
    A leg on a z-edge outside the tree targets an ancilla shared by both
    endpoints, which is prepared in |0> before its first CNOT and measured
    in Z after the second.
    """
    problems = tree_problems(z, tree)
    if problems:
        raise TreeError("; ".join(problems))
    if any(a == b for a, b in z.z_edges):
        raise TreeError("self-loop z-edges cannot be realised")
    kids = [sorted(k) for k in tree.children()]
    link = _tree_edge_ids(z, tree)
    adj = z.adjacency()

    def line_child(x: int) -> int | None:
        if z.is_boundary(x) or not kids[x]:
            return None
        leaves = [c for c in kids[x] if z.is_boundary(c) and not kids[c]]
        return leaves[0] if leaves else kids[x][0]

    nb = z.boundary_count
    qubit = [-1] * z.spider_count
    order = []
    queue = deque([tree.root])
    while queue:
        x = queue.popleft()
        order.append(x)
        queue.extend(kids[x])
    for x in order:
        if qubit[x] >= 0:
            continue
        # x starts a line: walk its line children down to the boundary end
        path = [x]
        while (c := line_child(path[-1])) is not None:
            path.append(c)
        if not z.is_boundary(path[-1]):
            raise TreeError(f"line from spider {x} does not end at a boundary spider")
        q = path[-1] - z.internal_count
        for s in path:
            qubit[s] = q
    ops: list[Op] = [(PREP_X, qubit[tree.root])]
    ancilla: dict[int, int] = {}
    next_anc = nb

    def control_leg(x: int, edge: int, other: int) -> None:
        nonlocal next_anc
        q = qubit[x]
        if link.get(other) == edge:
            ops.append((PREP_Z, qubit[other]))
            ops.append((CNOT, q, qubit[other]))
        elif edge in ancilla:
            a = ancilla.pop(edge)
            ops.append((CNOT, q, a))
            ops.append((MEAS_Z, a))
        else:
            ancilla[edge] = next_anc
            ops.append((PREP_Z, next_anc))
            ops.append((CNOT, q, next_anc))
            next_anc += 1

    for x in order:
        skip = set()
        if x != tree.root:
            skip.add(link[x])
        lc = line_child(x)
        if lc is not None:
            skip.add(link[lc])
        for other, edge in adj[x]:
            if edge not in skip:
                control_leg(x, edge, other)
    if ancilla:
        raise TreeError("dangling ancilla: z-edge realised from one side only")
    return Circuit(next_anc, tuple(ops), tuple(range(nb)))


def circuit_from_graph(g: MarkedGraph, tree: SpiderTree | None = None) -> Circuit:
    from .treeplan import build_spider_tree

    z = to_zgraph(g)
    return extract_circuit(z, tree or build_spider_tree(z))


# ---------------------------------------------------------------------------
# direct constructions


def ladder_cat(n: int) -> Circuit:
    """Unprotected CAT preparation: a CNOT chain q0 -> q1 -> ... -> q_{n-1}."""
    if n < 1:
        raise ValueError("n must be positive")
    ops: list[Op] = [(PREP_X, 0)] + [(PREP_Z, q) for q in range(1, n)]
    ops += [(CNOT, q, q + 1) for q in range(n - 1)]
    return Circuit(n, tuple(ops), tuple(range(n)))


def recursive_cat(n: int, t: int, compressed: bool = False) -> Circuit:
    """Flagged CAT preparation by recursive halving.

    All n data qubits start in |+>. A block is split into two halves, each
    half is made a CAT state recursively, and the halves are joined by
    min(|L|, |R|, t+1) transversal ZZ measurements on their least used
    qubits. Each ZZ measurement uses an ancilla and two CNOTs.

    By default ancillas are drawn from a pool and reused once measured, so
    at most n/2 are live. With ``compressed`` every measurement gets its own
    ancilla, which lets later layers start before earlier ones finish.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    if n < t + 1 or n < 1:
        raise ValueError("need n >= t + 1")
    w = t + 1
    uses = [0] * n
    levels: dict[int, list[tuple[int, int]]] = {}

    def build(block: list[int], depth: int) -> None:
        if len(block) < 2:
            return
        half = len(block) // 2
        left, right = block[:half], block[half:]
        build(left, depth + 1)
        build(right, depth + 1)
        m = min(len(left), len(right), w)
        pick_l = sorted(left, key=lambda q: (uses[q], q))[:m]
        pick_r = sorted(right, key=lambda q: (uses[q], q))[:m]
        for a, b in zip(pick_l, pick_r):
            uses[a] += 1
            uses[b] += 1
            levels.setdefault(depth, []).append((a, b))

    build(list(range(n)), 0)
    ops: list[Op] = [(PREP_X, q) for q in range(n)]
    next_anc = n
    pool: list[int] = []
    for depth in sorted(levels, reverse=True):
        gadgets = levels[depth]
        if not compressed:
            pool = list(range(n, next_anc))
        for a, b in gadgets:
            if pool:
                anc = pool.pop(0)
            else:
                anc = next_anc
                next_anc += 1
            ops += [(PREP_Z, anc), (CNOT, a, anc), (CNOT, b, anc), (MEAS_Z, anc)]
    return Circuit(next_anc, tuple(ops), tuple(range(n)))


def recursive_cnot_count(n: int, t: int) -> int:
    """CNOTs used by :func:`recursive_cat`, by the same recursion."""
    w = t + 1

    def count(size: int) -> int:
        if size < 2:
            return 0
        half = size // 2
        return count(half) + count(size - half) + 2 * min(half, size - half, w)

    return count(n)


def shallow_cat(g: MarkedGraph) -> Circuit:
    """Depth-3 CAT preparation from a marked graph.

    Every spider of the Z-graph becomes a small CAT state with one qubit per
    leg (a 3-qubit CAT, or a 4-qubit CAT for two spiders joined by an edge
    of a greedy maximal matching). The remaining z-edges are glued with
    postselected Bell measurements: CNOT between the two leg qubits, then Z
    on the target and X on the control.
    """
    z = to_zgraph(g)
    adj = z.adjacency()
    matched: dict[int, int] = {}
    pair_edge = set()
    for i, (a, b) in enumerate(z.z_edges):
        if a != b and a not in matched and b not in matched:
            matched[a] = b
            matched[b] = a
            pair_edge.add(i)
    leg_qubit: dict[tuple[int, int], int] = {}  # (spider, z-edge) -> qubit
    nb = z.boundary_count
    next_q = nb
    layer1: list[Op] = []
    layer2: list[Op] = []
    preps: list[Op] = []

    def fresh() -> int:
        nonlocal next_q
        next_q += 1
        return next_q - 1

    def legs(x: int) -> list[int]:
        out = []
        for _, e in adj[x]:
            if e in pair_edge:
                continue
            q = fresh()
            leg_qubit[(x, e)] = q
            out.append(q)
        if z.is_boundary(x):
            out.append(x - z.internal_count)
        return out

    done = set()
    for x in range(z.spider_count):
        if x in done:
            continue
        if x in matched:
            y = matched[x]
            done |= {x, y}
            lx, ly = legs(x), legs(y)
            hub_x, hub_y = lx[0], ly[0]
            preps += [(PREP_X, hub_x)] + [(PREP_Z, q) for q in lx[1:] + ly]
            layer1.append((CNOT, hub_x, hub_y))
            layer2 += [(CNOT, hub_x, q) for q in lx[1:]] + [(CNOT, hub_y, q) for q in ly[1:]]
        else:
            done.add(x)
            lx = legs(x)
            preps += [(PREP_X, lx[0])] + [(PREP_Z, q) for q in lx[1:]]
            if len(lx) > 1:
                layer1.append((CNOT, lx[0], lx[1]))
            layer2 += [(CNOT, lx[0], q) for q in lx[2:]]
    glue: list[Op] = []
    meas: list[Op] = []
    for i, (a, b) in enumerate(z.z_edges):
        if i in pair_edge:
            continue
        qa, qb = leg_qubit[(a, i)], leg_qubit[(b, i)]
        glue.append((CNOT, qa, qb))
        meas += [(MEAS_Z, qb), (MEAS_X, qa)]
    ops = preps + layer1 + layer2 + glue + meas
    return Circuit(next_q, tuple(ops), tuple(range(nb)))


# ---------------------------------------------------------------------------
# resources and bounds


@dataclass(frozen=True)
class ResourceCounts:
    cnots: int
    cnot_depth: int
    ancillas: int
    flags: int

    def to_json(self) -> dict:
        return {"cnots": self.cnots, "cnot_depth": self.cnot_depth, "ancillas": self.ancillas, "flags": self.flags}


def cnot_layers(c: Circuit) -> list[int]:
    """ASAP layer (1-based) of each CNOT in program order."""
    last = [0] * c.qubit_count
    layers = []
    for op in c.ops:
        if op[0] == CNOT:
            layer = max(last[op[1]], last[op[2]]) + 1
            last[op[1]] = last[op[2]] = layer
            layers.append(layer)
    return layers


def resource_counts(c: Circuit) -> ResourceCounts:
    """CNOT count, ASAP CNOT depth, peak live ancillas and measurement count.

    An ancilla lifetime (preparation to measurement) counts as live from the
    layer of its first CNOT to the layer of its last one.
    """
    layers = cnot_layers(c)
    depth = max(layers, default=0)
    outputs = set(c.output_qubits)
    spans: list[list[int]] = []
    current: dict[int, list[int]] = {}
    k = 0
    for op in c.ops:
        if op[0] in PREPS and op[1] not in outputs:
            current[op[1]] = []
        elif op[0] == CNOT:
            for q in op[1:]:
                if q in current:
                    current[q].append(layers[k])
            k += 1
        elif op[0] in MEASUREMENTS and op[1] in current:
            spans.append(current.pop(op[1]))
    spans += current.values()
    live = [0] * (depth + 2)
    for span in spans:
        if span:
            for layer in range(min(span), max(span) + 1):
                live[layer] += 1
    flags = sum(1 for op in c.ops if op[0] in MEASUREMENTS)
    return ResourceCounts(len(layers), depth, max(live), flags)


@dataclass(frozen=True)
class LowerBounds:
    cnot_lb: int
    flag_lb: int
    vertex_ratio: Fraction
    exact: bool

    def to_json(self) -> dict:
        return {"cnot_lb": self.cnot_lb, "flag_lb": self.flag_lb,
                "vertex_ratio": str(self.vertex_ratio), "exact": self.exact}


def lower_bounds(n: int, t: int) -> LowerBounds:
    """CNOT and flag lower bounds from the optimal vertex ratio for t.

    Ratios are known for t <= 5; larger t reuses the t=5 ratio, which is
    still a valid (weaker) bound, and is flagged as not exact.
    """
    if n < 1 or t < 1:
        raise ValueError("n and t must be positive")
    exact = t in OPTIMAL_RATIO
    r = OPTIMAL_RATIO[min(t, 5)]
    cnot_lb = math.ceil(n * (r + 1)) + 1
    flag_lb = math.ceil(r * n / 2) + 1
    return LowerBounds(cnot_lb, flag_lb, r, exact)


def recursive_formula(n: int, t: int) -> int:
    """Closed-form CNOT count as published for the recursive construction."""
    return round(n * (1 + math.log2(t + 1))) - 2 * (t + 1)
