"""Independent checks of CAT-state circuits.

* :func:`simulate` runs a stabilizer tableau with every measurement
  postselected on the trivial outcome and returns the output stabilizer group.
* :func:`check_ft` enumerates X faults on every circuit location up to a
  given weight and propagates them symbolically.
* :func:`monte_carlo` samples circuit-level depolarizing noise with a Pauli
  frame.
"""

from __future__ import annotations

import hashlib
import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .extract import CNOT, MEAS_X, MEAS_Z, MEASUREMENTS, PREP_X, PREP_Z, PREPS, Circuit

logger = logging.getLogger(__name__)


class PostselectionError(RuntimeError):
    """A measurement that must be postselected on 0 deterministically gives 1."""


# ---------------------------------------------------------------------------
# stabilizer tableau


class Tableau:
    """Destabilizer/stabilizer tableau on ``n`` qubits, starting in |0...0>."""

    def __init__(self, n: int):
        self.n = n
        self.x = np.zeros((2 * n, n), dtype=bool)
        self.z = np.zeros((2 * n, n), dtype=bool)
        self.r = np.zeros(2 * n, dtype=bool)
        idx = np.arange(n)
        self.x[idx, idx] = True
        self.z[n + idx, idx] = True
        # destabilizer row swapping the two branches of the last random measurement
        self.last_flip_row: int | None = None

    def h(self, q: int) -> None:
        self.r ^= self.x[:, q] & self.z[:, q]
        self.x[:, q], self.z[:, q] = self.z[:, q].copy(), self.x[:, q].copy()

    def cnot(self, c: int, t: int) -> None:
        self.r ^= self.x[:, c] & self.z[:, t] & ~(self.x[:, t] ^ self.z[:, c])
        self.x[:, t] ^= self.x[:, c]
        self.z[:, c] ^= self.z[:, t]

    def pauli(self, q: int, xbit: bool, zbit: bool) -> None:
        if xbit:
            self.r ^= self.z[:, q]
        if zbit:
            self.r ^= self.x[:, q]

    def _rowsum(self, targets: np.ndarray, src: int) -> None:
        """Multiply rows ``targets`` by row ``src`` in place, tracking signs."""
        if targets.size == 0:
            return
        x1, z1 = self.x[src].astype(np.int8), self.z[src].astype(np.int8)
        x2, z2 = self.x[targets].astype(np.int8), self.z[targets].astype(np.int8)
        # exponent of i picked up when multiplying single-qubit Paulis
        g = np.where(
            (x1 == 1) & (z1 == 1), z2 - x2,
            np.where((x1 == 1) & (z1 == 0), z2 * (2 * x2 - 1),
                     np.where((x1 == 0) & (z1 == 1), x2 * (1 - 2 * z2), 0)))
        total = 2 * self.r[targets].astype(np.int64) + 2 * int(self.r[src]) + g.sum(axis=1)
        self.r[targets] = (total % 4) == 2
        self.x[targets] ^= self.x[src]
        self.z[targets] ^= self.z[src]

    def measure_z(self, q: int, postselect: bool = True) -> tuple[int, bool]:
        """Measure Z on ``q``; returns (outcome, was_random). Random outcomes become 0."""
        n = self.n
        hits = np.flatnonzero(self.x[n:, q]) + n
        self.last_flip_row = None
        if hits.size:
            p = int(hits[0])
            others = np.flatnonzero(self.x[:, q])
            others = others[others != p]
            self._rowsum(others, p)
            self.x[p - n], self.z[p - n], self.r[p - n] = self.x[p].copy(), self.z[p].copy(), self.r[p]
            self.x[p] = False
            self.z[p] = False
            self.z[p, q] = True
            self.r[p] = False
            self.last_flip_row = p - n
            return 0, True
        # deterministic: accumulate the stabilizers selected by the destabilizers
        acc_x = np.zeros(n, dtype=bool)
        acc_z = np.zeros(n, dtype=bool)
        acc_r = 0
        for i in np.flatnonzero(self.x[:n, q]):
            row = n + int(i)
            acc_r = _mul_phase(acc_x, acc_z, acc_r, self.x[row], self.z[row], int(self.r[row]))
            acc_x ^= self.x[row]
            acc_z ^= self.z[row]
        return acc_r, False

    def reset(self, q: int) -> None:
        outcome, _ = self.measure_z(q)
        if outcome:
            self.pauli(q, True, False)


def _mul_phase(x1, z1, r1: int, x2, z2, r2: int) -> int:
    a1, b1 = x1.astype(np.int8), z1.astype(np.int8)
    a2, b2 = x2.astype(np.int8), z2.astype(np.int8)
    g = np.where((a1 == 1) & (b1 == 1), b2 - a2,
                 np.where((a1 == 1) & (b1 == 0), b2 * (2 * a2 - 1),
                          np.where((a1 == 0) & (b1 == 1), a2 * (1 - 2 * b2), 0)))
    total = 2 * r1 + 2 * r2 + int(g.sum())
    return 1 if total % 4 == 2 else 0


@dataclass(frozen=True)
class StabilizerState:
    """Stabilizer generators on the output qubits as (x | z, sign) rows."""

    x: np.ndarray
    z: np.ndarray
    signs: np.ndarray

    @property
    def qubits(self) -> int:
        return self.x.shape[1]

    def labels(self) -> list[str]:
        out = []
        for xs, zs, s in zip(self.x, self.z, self.signs):
            body = "".join("IXZY"[int(a) + 2 * int(b)] for a, b in zip(xs, zs))
            out.append(("-" if s else "+") + body)
        return out


@dataclass(frozen=True)
class SimulationResult:
    state: StabilizerState
    deterministic: bool
    random_measurements: int


def _apply(tab: Tableau, op, postselect: bool = True) -> tuple[bool, bool]:
    """Apply one op; returns (was_random, flipped) for measurements."""
    name = op[0]
    if name == PREP_Z:
        tab.reset(op[1])
    elif name == PREP_X:
        tab.reset(op[1])
        tab.h(op[1])
    elif name == CNOT:
        tab.cnot(op[1], op[2])
    elif name in MEASUREMENTS:
        q = op[1]
        if name == MEAS_X:
            tab.h(q)
        outcome, rnd = tab.measure_z(q)
        if name == MEAS_X:
            tab.h(q)
        return rnd, bool(outcome)
    return False, False


def fault_sites(c: Circuit) -> list[tuple[int, int]]:
    """Fault locations as (op index, qubit): the gap right after that op on that qubit.

    A gap is a location when the qubit is touched again before it is
    measured; the final gap of an output qubit (its output leg) is not one.
    """
    nxt: dict[int, bool] = {}
    sites = []
    for k in range(len(c.ops) - 1, -1, -1):
        op = c.ops[k]
        for q in op[1:]:
            if op[0] not in MEASUREMENTS and nxt.get(q, False):
                sites.append((k, q))
            nxt[q] = op[0] not in PREPS
    sites.reverse()
    return sorted(sites)


def simulate(c: Circuit, faults: dict[tuple[int, int], str] | None = None,
             strict: bool = True) -> SimulationResult:
    """Run the circuit, postselecting every measurement on its trivial outcome.

    ``faults`` maps fault sites to a Pauli label ``X``, ``Y`` or ``Z``
    applied at that site. With ``strict``, a measurement whose outcome is
    deterministically nontrivial raises :class:`PostselectionError`.
    """
    tab = Tableau(c.qubit_count)
    faults = faults or {}
    by_op: dict[int, list[tuple[int, str]]] = {}
    for (k, q), p in faults.items():
        by_op.setdefault(k, []).append((q, p))
    random_count = 0
    for k, op in enumerate(c.ops):
        rnd, flipped = _apply(tab, op)
        random_count += rnd
        if flipped and strict:
            raise PostselectionError(f"op {k} {op} deterministically yields 1")
        for q, p in by_op.get(k, []):
            tab.pauli(q, p in "XY", p in "ZY")
    return SimulationResult(_restrict(tab, c.output_qubits), True, random_count)


def detected_by_tableau(c: Circuit, faults: dict[tuple[int, int], str]) -> bool:
    """True when some measurement deterministically yields 1 under the faults."""
    try:
        simulate(c, faults, strict=True)
    except PostselectionError:
        return True
    return False


def _restrict(tab: Tableau, outputs) -> StabilizerState:
    """Subgroup of the stabilizer group supported on ``outputs``."""
    n = tab.n
    outs = list(outputs)
    rest = [q for q in range(n) if q not in set(outs)]
    cols = rest + outs
    x = tab.x[n:][:, cols].copy()
    z = tab.z[n:][:, cols].copy()
    r = tab.r[n:].astype(int).copy()
    rows = _row_reduce(x, z, r, len(rest))
    keep = [i for i in range(rows, n)]
    xo = x[keep][:, len(rest):]
    zo = z[keep][:, len(rest):]
    return StabilizerState(xo, zo, r[keep].astype(bool))


def _row_reduce(x: np.ndarray, z: np.ndarray, r: np.ndarray, ncols: int | None = None) -> int:
    """Gaussian elimination with sign tracking over the first ``ncols`` qubits.

    Columns are visited as x then z per qubit. Rows are rearranged in place
    and the number of pivot rows is returned.
    """
    m, n = x.shape
    if ncols is None:
        ncols = n
    pivot = 0
    for q in range(ncols):
        for part in (x, z):
            if pivot >= m:
                return pivot
            hits = np.flatnonzero(part[pivot:, q]) + pivot
            if hits.size == 0:
                continue
            p = int(hits[0])
            if p != pivot:
                for arr in (x, z, r):
                    arr[[pivot, p]] = arr[[p, pivot]]
            for i in np.flatnonzero(part[:, q]):
                if i == pivot:
                    continue
                r[i] = _mul_phase(x[i], z[i], int(r[i]), x[pivot], z[pivot], int(r[pivot]))
                x[i] ^= x[pivot]
                z[i] ^= z[pivot]
            pivot += 1
    return pivot


def canonical_form(state: StabilizerState) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    x, z, r = state.x.copy(), state.z.copy(), state.signs.astype(int).copy()
    rank = _row_reduce(x, z, r)
    return x[:rank], z[:rank], r[:rank]


def cat_state(n: int) -> StabilizerState:
    x = np.zeros((n, n), dtype=bool)
    z = np.zeros((n, n), dtype=bool)
    x[0, :] = True
    for i in range(n - 1):
        z[i + 1, i] = z[i + 1, i + 1] = True
    return StabilizerState(x, z, np.zeros(n, dtype=bool))


def is_cat(state: StabilizerState, n: int) -> bool:
    """True iff the generators span exactly the n-qubit CAT stabilizer group."""
    if state.qubits != n:
        return False
    a = canonical_form(state)
    b = canonical_form(cat_state(n))
    return all(u.shape == v.shape and np.array_equal(u, v) for u, v in zip(a, b))


def circuit_hash(c: Circuit) -> str:
    return hashlib.sha256(c.to_text().encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# exhaustive fault enumeration


@dataclass(frozen=True)
class FaultEffects:
    """Per fault site, the packed bit pattern of (measurement flips | output X | Z parity)."""

    sites: list[tuple[int, int]]
    x_effect: np.ndarray  # (sites, words) uint64
    z_effect: np.ndarray
    measurement_count: int
    n: int

    @property
    def detect_mask(self) -> np.ndarray:
        return _mask(range(self.measurement_count), self.x_effect.shape[1])

    @property
    def output_mask(self) -> np.ndarray:
        m = self.measurement_count
        return _mask(range(m, m + self.n), self.x_effect.shape[1])


def _mask(bits, words: int) -> np.ndarray:
    out = np.zeros(words, dtype=np.uint64)
    for b in bits:
        out[b // 64] |= np.uint64(1) << np.uint64(b % 64)
    return out


def _forward_effect(c: Circuit, start: int, fx: np.ndarray, fz: np.ndarray, meas_index: dict[int, int]) -> int:
    """Bit pattern of a Pauli frame inserted before op ``start``, pushed to the end."""
    fx, fz = fx.copy(), fz.copy()
    m = len(meas_index)
    v = 0
    for k in range(start, len(c.ops)):
        op = c.ops[k]
        name = op[0]
        if name == CNOT:
            fx[op[2]] ^= fx[op[1]]
            fz[op[1]] ^= fz[op[2]]
        elif name == MEAS_Z:
            v ^= int(fx[op[1]]) << meas_index[k]
        elif name == MEAS_X:
            v ^= int(fz[op[1]]) << meas_index[k]
        elif name in PREPS:
            fx[op[1]] = fz[op[1]] = False
    outs = list(c.output_qubits)
    for j, q in enumerate(outs):
        v ^= int(fx[q]) << (m + j)
    v ^= int(np.bitwise_xor.reduce(fz[outs])) << (m + len(outs))
    return v


def measurement_byproducts(c: Circuit) -> dict[int, int]:
    """For each random measurement, the effect of taking its other branch.

    A random outcome cannot be postselected; flipping it is equivalent to
    applying the Pauli that maps one post-measurement state to the other.
    Keys are measurement indices, values use the bit layout of
    :func:`fault_effects` and include the measurement's own bit.
    """
    meas_index = {}
    for k, op in enumerate(c.ops):
        if op[0] in MEASUREMENTS:
            meas_index[k] = len(meas_index)
    tab = Tableau(c.qubit_count)
    out = {}
    for k, op in enumerate(c.ops):
        rnd, _ = _apply(tab, op)
        if rnd and op[0] in MEASUREMENTS:
            row = tab.last_flip_row
            m = meas_index[k]
            out[m] = (1 << m) ^ _forward_effect(c, k + 1, tab.x[row], tab.z[row], meas_index)
    return out


def absorb_random(v: int, byproducts: dict[int, int]) -> int:
    """Replace flips of random measurements by their byproducts, earliest first."""
    for m in sorted(byproducts):
        if (v >> m) & 1:
            v ^= byproducts[m]
    return v


def fault_effects(c: Circuit) -> FaultEffects:
    """Propagate X and Z from every fault site to measurements and outputs.

    A backward sweep keeps, per qubit, the effect an error on that qubit
    would have if inserted at the current point in time. Flips of random
    measurements are then traded for their byproducts, so only the
    deterministic measurements act as detectors.
    """
    meas_index = {}
    for k, op in enumerate(c.ops):
        if op[0] in MEASUREMENTS:
            meas_index[k] = len(meas_index)
    m = len(meas_index)
    n = c.n
    nbits = m + n + 1
    zpar = m + n
    effx: dict[int, int] = {}
    effz: dict[int, int] = {}
    for j, q in enumerate(c.output_qubits):
        effx[q] = 1 << (m + j)
        effz[q] = 1 << zpar
    site_set = set(fault_sites(c))
    recorded: dict[tuple[int, int], tuple[int, int]] = {}
    for k in range(len(c.ops) - 1, -1, -1):
        op = c.ops[k]
        for q in op[1:]:
            if (k, q) in site_set:
                recorded[(k, q)] = (effx.get(q, 0), effz.get(q, 0))
        name = op[0]
        if name == CNOT:
            ctl, tgt = op[1], op[2]
            effx[ctl] = effx.get(ctl, 0) ^ effx.get(tgt, 0)
            effz[tgt] = effz.get(tgt, 0) ^ effz.get(ctl, 0)
        elif name == MEAS_Z:
            effx[op[1]] = 1 << meas_index[k]
            effz[op[1]] = 0
        elif name == MEAS_X:
            effx[op[1]] = 0
            effz[op[1]] = 1 << meas_index[k]
        elif name in PREPS:
            effx[op[1]] = 0
            effz[op[1]] = 0
    byproducts = measurement_byproducts(c)
    if byproducts:
        recorded = {s: (absorb_random(a, byproducts), absorb_random(b, byproducts)) for s, (a, b) in recorded.items()}
    sites = sorted(recorded)
    words = (nbits + 63) // 64
    xe = np.zeros((len(sites), words), dtype=np.uint64)
    ze = np.zeros((len(sites), words), dtype=np.uint64)
    for i, s in enumerate(sites):
        vx, vz = recorded[s]
        for w in range(words):
            xe[i, w] = (vx >> (64 * w)) & ((1 << 64) - 1)
            ze[i, w] = (vz >> (64 * w)) & ((1 << 64) - 1)
    return FaultEffects(sites, xe, ze, m, n)


def residual_weight(xbits: np.ndarray, n: int, zparity: np.ndarray | None = None) -> np.ndarray:
    """Output error weight up to CAT stabilizers, given X-support sizes."""
    w = np.minimum(xbits, n - xbits)
    if zparity is not None:
        w = np.where((w == 0) & zparity, 1, w)
    return w


@dataclass(frozen=True)
class FaultReport:
    verdict: str
    t: int
    locations: int
    combos_checked: int
    counterexample: dict | None = None
    exhaustive: bool = True
    mode: str = "x"

    @property
    def ft(self) -> bool:
        return self.verdict == "ft"

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "t": self.t,
            "locations": self.locations,
            "combos_checked": self.combos_checked,
            "exhaustive": self.exhaustive,
            "mode": self.mode,
            "counterexample": self.counterexample,
        }


def _popcount(a: np.ndarray) -> np.ndarray:
    return np.bitwise_count(a).sum(axis=-1)


def _scan_prefixes(args):
    """Check all weight-f combos whose first f-2 sites come from ``prefixes``."""
    prefixes, eff, pair_i, pair_j, pair_eff, pair_start, detect, outmask, n, f = args
    checked = 0
    for pre in prefixes:
        base = np.bitwise_xor.reduce(eff[list(pre)], axis=0) if pre else np.zeros(eff.shape[1], np.uint64)
        start = pair_start[pre[-1] + 1] if pre else 0
        tail = pair_eff[start:] ^ base
        checked += tail.shape[0]
        silent = ~np.any(tail & detect, axis=1)
        if not silent.any():
            continue
        w = residual_weight(_popcount(tail[silent] & outmask), n)
        bad = np.flatnonzero(w > f)
        if bad.size:
            k = start + int(np.flatnonzero(silent)[bad[0]])
            return checked, tuple(pre) + (int(pair_i[k]), int(pair_j[k]))
    return checked, None


def check_ft(c: Circuit, t: int, budget: float = 1e8, jobs: int = 1, seed: int = 0,
             samples: int = 1_000_000) -> FaultReport:
    """Exhaustive X-fault enumeration up to weight ``t``.

    A combination of faults is undetected when it flips no measurement; it
    violates fault tolerance when its residual output weight exceeds its
    own weight. The counterexample is the lexicographically first violating
    site tuple of least weight. When the number of combinations exceeds
    ``budget``, uniformly random combinations are checked instead and the
    report is marked non-exhaustive.
    """
    eff = fault_effects(c)
    L = len(eff.sites)
    X = eff.x_effect
    detect = eff.detect_mask
    outmask = eff.output_mask
    n = c.n
    total = sum(math.comb(L, f) for f in range(1, t + 1))
    if total > budget:
        return _sampled_ft(c, t, eff, seed, samples)
    checked = 0
    if L >= 2:
        pair_i, pair_j = np.triu_indices(L, k=1)
        pair_eff = X[pair_i] ^ X[pair_j]
        pair_start = np.searchsorted(pair_i, np.arange(L + 1))
    for f in range(1, min(t, L) + 1):
        if f == 1:
            silent = ~np.any(X & detect, axis=1)
            w = residual_weight(_popcount(X & outmask), n)
            checked += L
            bad = np.flatnonzero(silent & (w > 1))
            hit = (int(bad[0]),) if bad.size else None
        else:
            prefixes = list(itertools.combinations(range(L), f - 2))
            prefixes = [p for p in prefixes if not p or p[-1] < L - 2]
            if jobs > 1 and len(prefixes) > 64:
                size = math.ceil(len(prefixes) / (4 * jobs))
                chunks = [prefixes[i:i + size] for i in range(0, len(prefixes), size)]
                with ProcessPoolExecutor(jobs) as pool:
                    results = list(pool.map(_scan_prefixes, [
                        (ch, X, pair_i, pair_j, pair_eff, pair_start, detect, outmask, n, f) for ch in chunks]))
                hit = next((r[1] for r in results if r[1] is not None), None)
                checked += sum(r[0] for r in results) if hit is None else 0
                if hit is not None:
                    checked += sum(r[0] for r in results[:[r[1] for r in results].index(hit) + 1])
            else:
                got, hit = _scan_prefixes((prefixes, X, pair_i, pair_j, pair_eff, pair_start,
                                           detect, outmask, n, f))
                checked += got
        if hit is not None:
            return FaultReport("violated", t, L, checked, _describe(c, eff, hit), True)
    return FaultReport("ft", t, L, checked)


def _describe(c: Circuit, eff: FaultEffects, combo: tuple[int, ...], paulis: tuple[str, ...] | None = None) -> dict:
    paulis = paulis or ("X",) * len(combo)
    v = np.zeros(eff.x_effect.shape[1], dtype=np.uint64)
    for i, p in zip(combo, paulis):
        if p in "XY":
            v ^= eff.x_effect[i]
        if p in "ZY":
            v ^= eff.z_effect[i]
    xw = int(_popcount(v & eff.output_mask))
    zpar = _mask([eff.measurement_count + eff.n], v.shape[0])
    zp = bool(np.any(v & zpar))
    weight = int(residual_weight(np.array([xw]), eff.n, np.array([zp]))[0])
    return {
        "sites": [list(eff.sites[i]) for i in combo],
        "ops": [list(c.ops[eff.sites[i][0]]) for i in combo],
        "paulis": list(paulis),
        "residual_output_weight": weight,
    }


def _sampled_ft(c: Circuit, t: int, eff: FaultEffects, seed: int, samples: int) -> FaultReport:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    L = len(eff.sites)
    X = eff.x_effect
    detect, outmask = eff.detect_mask, eff.output_mask
    checked = 0
    for f in range(1, t + 1):
        per = samples // t
        combos = np.sort(np.argsort(rng.random((per, L)), axis=1)[:, :f], axis=1)
        v = np.bitwise_xor.reduce(X[combos], axis=1)
        silent = ~np.any(v & detect, axis=1)
        w = residual_weight(_popcount(v & outmask), c.n)
        checked += per
        bad = np.flatnonzero(silent & (w > f))
        if bad.size:
            combo = tuple(int(i) for i in combos[bad[0]])
            return FaultReport("violated", t, L, checked, _describe(c, eff, combo), False)
    return FaultReport("ft", t, L, checked, None, False)


def check_ft_full(c: Circuit, t: int) -> FaultReport:
    """Audit mode: every site may carry X, Y or Z. Plain loops; small circuits only."""
    eff = fault_effects(c)
    L = len(eff.sites)
    detect, outmask = eff.detect_mask, eff.output_mask
    zpar = _mask([eff.measurement_count + eff.n], eff.x_effect.shape[1])
    choices = {"X": eff.x_effect, "Z": eff.z_effect, "Y": eff.x_effect ^ eff.z_effect}
    checked = 0
    for f in range(1, t + 1):
        for combo in itertools.combinations(range(L), f):
            for paulis in itertools.product("XYZ", repeat=f):
                checked += 1
                v = np.zeros(eff.x_effect.shape[1], dtype=np.uint64)
                for i, p in zip(combo, paulis):
                    v ^= choices[p][i]
                if np.any(v & detect):
                    continue
                xw = int(_popcount(v & outmask))
                zp = bool(np.any(v & zpar))
                if residual_weight(np.array([xw]), c.n, np.array([zp]))[0] > f:
                    return FaultReport("violated", t, L, checked, _describe(c, eff, combo, paulis), True, "full")
    return FaultReport("ft", t, L, checked, None, True, "full")


# ---------------------------------------------------------------------------
# Monte Carlo


@dataclass(frozen=True)
class MonteCarloResult:
    shots: int
    accepted: int
    failures: int
    acceptance_rate: float
    p_over_t: float
    ci95: tuple[float, float]
    acceptance_ci95: tuple[float, float]

    def to_json(self) -> dict:
        return {
            "shots": self.shots,
            "accepted": self.accepted,
            "failures": self.failures,
            "acceptance_rate": self.acceptance_rate,
            "p_over_t": self.p_over_t,
            "ci95": list(self.ci95),
            "acceptance_ci95": list(self.acceptance_ci95),
        }


def wilson(successes: int, trials: int, z: float = 1.959963984540054) -> tuple[float, float]:
    if trials == 0:
        return (0.0, 1.0)
    p = successes / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == trials else min(1.0, centre + half)
    return (lo, hi)


_PAULI_X = np.array([0, 1, 1, 0], dtype=bool)  # I X Y Z
_PAULI_Z = np.array([0, 0, 1, 1], dtype=bool)


def _frame_chunk(args) -> tuple[int, int]:
    c, t, p, shots, seed_seq, byproducts = args
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    nq = c.qubit_count
    fx = np.zeros((nq, shots), dtype=bool)
    fz = np.zeros((nq, shots), dtype=bool)
    flips = []
    spam = 2 * p / 3
    for op in c.ops:
        name = op[0]
        if name == PREP_Z:
            fx[op[1]] = rng.random(shots) < spam
            fz[op[1]] = False
        elif name == PREP_X:
            fz[op[1]] = rng.random(shots) < spam
            fx[op[1]] = False
        elif name == CNOT:
            a, b = op[1], op[2]
            fx[b] ^= fx[a]
            fz[a] ^= fz[b]
            hit = np.flatnonzero(rng.random(shots) < p)
            if hit.size:
                k = rng.integers(1, 16, size=hit.size)
                pa, pb = k // 4, k % 4
                fx[a, hit] ^= _PAULI_X[pa]
                fz[a, hit] ^= _PAULI_Z[pa]
                fx[b, hit] ^= _PAULI_X[pb]
                fz[b, hit] ^= _PAULI_Z[pb]
        elif name == MEAS_Z:
            flips.append(fx[op[1]] ^ (rng.random(shots) < spam))
        elif name == MEAS_X:
            flips.append(fz[op[1]] ^ (rng.random(shots) < spam))
    outs = list(c.output_qubits)
    ox = fx[outs]
    zp = np.bitwise_xor.reduce(fz[outs], axis=0) if outs else np.zeros(shots, bool)
    m, n = len(flips), len(outs)
    for j in sorted(byproducts):
        rows = flips[j].copy()
        b = byproducts[j]
        for i in range(j, m):
            if (b >> i) & 1:
                flips[i] ^= rows
        for i in range(n):
            if (b >> (m + i)) & 1:
                ox[i] ^= rows
        if (b >> (m + n)) & 1:
            zp ^= rows
    detected = np.any(flips, axis=0) if flips else np.zeros(shots, bool)
    ok = ~detected
    xw = ox[:, ok].sum(axis=0)
    zp = zp[ok]
    w = residual_weight(xw, c.n, zp)
    return int(ok.sum()), int((w > t).sum())


def monte_carlo(c: Circuit, t: int, p_phys: float, shots: int, seed: int = 0, jobs: int = 1,
                chunk: int = 50_000) -> MonteCarloResult:
    """Estimate acceptance and logical failure under circuit-level depolarizing noise.

    Each CNOT is followed by one of the 15 non-identity two-qubit Paulis,
    each with probability p/15; preparations and measurements are flipped
    with probability 2p/3. A shot is accepted when no measurement flips;
    an accepted shot fails when its output error has weight above t up to
    CAT stabilizers. Random measurements are not checks: their flips are
    traded for byproducts as in :func:`fault_effects`. Shots are split into
    fixed-size chunks with independent child seeds, so results do not
    depend on ``jobs``.
    """
    if shots <= 0:
        raise ValueError("shots must be positive")
    if not 0 <= p_phys < 1:
        raise ValueError("p_phys must lie in [0, 1)")
    sizes = [chunk] * (shots // chunk) + ([shots % chunk] if shots % chunk else [])
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    byproducts = measurement_byproducts(c)
    tasks = [(c, t, p_phys, s, sq, byproducts) for s, sq in zip(sizes, seeds)]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            results = list(pool.map(_frame_chunk, tasks))
    else:
        results = [_frame_chunk(task) for task in tasks]
    accepted = sum(r[0] for r in results)
    failures = sum(r[1] for r in results)
    rate = accepted / shots
    p_over = failures / accepted if accepted else 0.0
    return MonteCarloResult(shots, accepted, failures, rate, p_over,
                            wilson(failures, accepted), wilson(accepted, shots))
