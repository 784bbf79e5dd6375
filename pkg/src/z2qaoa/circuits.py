"""QAOA state preparation: exact-exponential path and gate-compiled circuits.

Two interchangeable execution paths produce the alternating-evolution ansatz

    |psi_P> = U(gamma_P, beta_P) ... U(gamma_1, beta_1) |psi_0>,

where each step evolves under the plaquette (magnetic) term and the
single-link (electric) term.  For an electric start the step is
exp(-i beta H_E) exp(-i gamma H_B); for a magnetic start the factors are
swapped so the first factor does not reduce to a global phase on |psi_0>.

The exact path applies the exponentials as fused diagonal phases plus
single-qubit x-rotations.  The compiled path emits H/RX/RZ/CNOT circuits with
nearest-neighbour CNOTs only: each vertical-link qubit talks to at most four
neighbours, each horizontal-link qubit to two.  One compiled step has depth 13
on lattices with an even number of columns and depth 18 on the 3x3 torus.

Circuit unitaries match the exact path only up to a global phase (the
constant in the electric term is dropped); all equivalence checks therefore
compare |<a|b>|^2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .lattice import TorusLattice, LoopSpec
from .statevector import (
    MAX_QUBITS,
    StateVector,
    _exp_ix_all,
    apply_cnot,
    apply_hadamard,
    apply_pauli_string,
    apply_rx,
    apply_rz,
)


class CompilationError(ValueError):
    """Raised when a lattice size has no implemented gate schedule."""


@dataclass(frozen=True)
class Gate:
    kind: str  # "H" | "RX" | "RZ" | "CNOT"
    qubits: tuple[int, ...]
    angle: float | None = None

    def __post_init__(self):
        if self.kind in ("H",) and (len(self.qubits) != 1 or self.angle is not None):
            raise ValueError(f"malformed gate {self}")
        if self.kind in ("RX", "RZ") and (len(self.qubits) != 1 or self.angle is None):
            raise ValueError(f"malformed gate {self}")
        if self.kind == "CNOT":
            if len(self.qubits) != 2 or self.qubits[0] == self.qubits[1]:
                raise ValueError(f"malformed gate {self}")
        if self.kind not in ("H", "RX", "RZ", "CNOT"):
            raise ValueError(f"unknown gate kind {self.kind!r}")


class Circuit:
    """Ordered gate list with greedy time-step layering.

    Layers partition the gate list into contiguous runs in which no qubit
    appears twice; a new layer starts exactly when the next gate touches a
    qubit already used in the current run.  ``depth`` is the number of layers.
    """

    def __init__(self, n_qubits: int, gates: list[Gate] | None = None):
        self.n_qubits = n_qubits
        self.gates: list[Gate] = list(gates) if gates else []
        for g in self.gates:
            self._check_range(g)

    def _check_range(self, gate: Gate) -> None:
        for q in gate.qubits:
            if not (0 <= q < self.n_qubits):
                raise ValueError(f"gate {gate} out of range for {self.n_qubits} qubits")

    def add(self, kind: str, *qubits: int, angle: float | None = None) -> None:
        gate = Gate(kind, tuple(qubits), angle)
        self._check_range(gate)
        self.gates.append(gate)

    def layers(self) -> list[list[Gate]]:
        layers: list[list[Gate]] = []
        busy: set[int] = set()
        current: list[Gate] = []
        for g in self.gates:
            qs = set(g.qubits)
            if qs & busy:
                layers.append(current)
                current, busy = [], set()
            current.append(g)
            busy |= qs
        if current:
            layers.append(current)
        return layers

    @property
    def depth(self) -> int:
        return len(self.layers())

    def count(self, kind: str) -> int:
        return sum(1 for g in self.gates if g.kind == kind)

    def to_text(self) -> str:
        """Bit-exact interchange format: one gate per line, BARRIER between layers."""
        lines: list[str] = []
        for i, layer in enumerate(self.layers()):
            if i:
                lines.append("BARRIER")
            for g in layer:
                if g.kind == "H":
                    lines.append(f"H {g.qubits[0]}")
                elif g.kind in ("RX", "RZ"):
                    lines.append(f"{g.kind} {g.angle:.17g} {g.qubits[0]}")
                else:
                    lines.append(f"CNOT {g.qubits[0]} {g.qubits[1]}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, n_qubits: int | None = None) -> "Circuit":
        gates: list[Gate] = []
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line == "BARRIER" or line.startswith("#"):
                continue
            parts = line.split()
            if parts[0] == "H":
                gates.append(Gate("H", (int(parts[1]),)))
            elif parts[0] in ("RX", "RZ"):
                gates.append(Gate(parts[0], (int(parts[2]),), float(parts[1])))
            elif parts[0] == "CNOT":
                gates.append(Gate("CNOT", (int(parts[1]), int(parts[2]))))
            else:
                raise ValueError(f"cannot parse circuit line {raw!r}")
        if n_qubits is None:
            n_qubits = 1 + max(q for g in gates for q in g.qubits)
        return cls(n_qubits, gates)


def run_circuit(psi: StateVector, circuit: Circuit) -> StateVector:
    """Apply a circuit's gates in order (in place)."""
    if psi.n_qubits != circuit.n_qubits:
        raise ValueError(
            f"state has {psi.n_qubits} qubits, circuit {circuit.n_qubits}"
        )
    for g in circuit.gates:
        if g.kind == "H":
            apply_hadamard(psi, g.qubits[0])
        elif g.kind == "RX":
            apply_rx(psi, g.qubits[0], g.angle)
        elif g.kind == "RZ":
            apply_rz(psi, g.qubits[0], g.angle)
        else:
            apply_cnot(psi, g.qubits[0], g.qubits[1])
    return psi


@dataclass(frozen=True)
class Schedule:
    """QAOA variational parameters: P layers of (gamma, beta) plus the start kind."""

    gammas: tuple[float, ...]
    betas: tuple[float, ...]
    start: str  # "electric" | "magnetic"

    def __post_init__(self):
        if len(self.gammas) != len(self.betas):
            raise ValueError("gammas and betas must have equal length")
        if len(self.gammas) < 1:
            raise ValueError("need at least one layer")
        if self.start not in ("electric", "magnetic"):
            raise ValueError(f"start must be 'electric' or 'magnetic', got {self.start!r}")

    @property
    def P(self) -> int:
        return len(self.gammas)

    def as_vector(self) -> np.ndarray:
        """Flatten to [gamma_1..gamma_P, beta_1..beta_P]."""
        return np.concatenate([self.gammas, self.betas])

    @classmethod
    def from_vector(cls, x: np.ndarray, start: str) -> "Schedule":
        x = np.asarray(x, dtype=float)
        if x.size % 2:
            raise ValueError("parameter vector must have even length 2P")
        p = x.size // 2
        return cls(tuple(x[:p]), tuple(x[p:]), start)


# ---------------------------------------------------------------------------
# Fused diagonal tables for the exact-exponential path
# ---------------------------------------------------------------------------

@lru_cache(maxsize=4)
def _plaquette_parity_table(L: int) -> np.ndarray:
    """uint8 table over all 2^(2L^2) basis states: sum_p s_p shifted by +L^2.

    s_p = +-1 is the Z-parity of plaquette p's four links, so the stored value
    is in [0, 2L^2] and exp(-i gamma H_B) is a 2L^2+1-entry phase lookup.
    """
    from .lattice import build_lattice

    n = 2 * L * L
    if n > MAX_QUBITS:
        raise ValueError(f"direct lattice with L={L} needs {n} qubits > cap {MAX_QUBITS}")
    lat = build_lattice(L)
    idx = np.arange(1 << n, dtype=np.uint32)
    total = np.zeros(1 << n, dtype=np.int16)
    for links in lat.plaquettes:
        par = np.zeros(1 << n, dtype=np.uint32)
        for q in links:
            par ^= (idx >> np.uint32(q)) & np.uint32(1)
        total += 1 - 2 * par.astype(np.int16)
    table = (total + L * L).astype(np.uint8)
    table.setflags(write=False)
    return table


def apply_magnetic_exact(psi: StateVector, lat: TorusLattice, gamma: float) -> StateVector:
    """exp(-i gamma H_B) = prod_p exp(i gamma B_p), one diagonal pass."""
    npl = lat.num_plaquettes
    lut = np.exp(1j * gamma * np.arange(-npl, npl + 1))
    psi.amps *= lut[_plaquette_parity_table(lat.L)]
    return psi


def apply_electric_exact(psi: StateVector, beta: float) -> StateVector:
    """exp(-i beta H_E) up to global phase: exp(i beta X) on every qubit."""
    _exp_ix_all(psi.amps, psi.n_qubits, beta)
    return psi


def qaoa_evolve_exact(
    psi0: StateVector, sched: Schedule, lat: TorusLattice, *, copy: bool = True
) -> StateVector:
    """Evolve |psi_0> through P alternating exact-exponential layers."""
    if psi0.n_qubits != lat.num_links:
        raise ValueError("state size does not match lattice")
    psi = psi0.copy() if copy else psi0
    for gamma, beta in zip(sched.gammas, sched.betas):
        if sched.start == "electric":
            apply_magnetic_exact(psi, lat, gamma)
            apply_electric_exact(psi, beta)
        else:
            apply_electric_exact(psi, beta)
            apply_magnetic_exact(psi, lat, gamma)
    return psi


# ---------------------------------------------------------------------------
# Initial states
# ---------------------------------------------------------------------------

def prepare_electric_gs(lat: TorusLattice) -> StateVector:
    """All links in |+>: the zero-field ground state, +1 under every star
    and both winding 't Hooft loops."""
    return StateVector.plus_state(lat.num_links)


def toric_code_circuit(lat: TorusLattice) -> Circuit:
    """H+CNOT circuit preparing the toric-code ground state from |00...0>.

    Plaquette columns are processed right to left; within a column every
    plaquette applies Hadamards to its still-fresh qubits and three CNOTs
    onto a fresh target, which imprints the even-Z-parity constraint of that
    plaquette.  Columns L-1..1 use the plaquette's left vertical link as the
    target and run row-parallel; column 0 has no fresh vertical links left,
    so its plaquettes chain upward through their top horizontal links, which
    forces the O(L) sequential tail.  L^2 - 1 plaquettes are imprinted; the
    last one comes free because the product of all plaquette operators is
    the identity on the torus.
    """
    L = lat.L
    circ = Circuit(lat.num_links)
    for x in range(L - 1, 0, -1):
        for y in range(L):
            circ.add("H", lat.h_link(x, y))
        if x == L - 1:
            for y in range(L):
                circ.add("H", lat.v_link(0, y))
        for y in range(L):
            circ.add("CNOT", lat.h_link(x, y), lat.v_link(x, y))
        for y in range(L):
            circ.add("CNOT", lat.h_link(x, y + 1), lat.v_link(x, y))
        for y in range(L):
            circ.add("CNOT", lat.v_link(x + 1, y), lat.v_link(x, y))
    circ.add("H", lat.h_link(0, 0))
    for y in range(L - 1):
        target = lat.h_link(0, y + 1)
        circ.add("CNOT", lat.h_link(0, y), target)
        circ.add("CNOT", lat.v_link(0, y), target)
        circ.add("CNOT", lat.v_link(1, y), target)
    return circ


def prepare_toric_code_gs(lat: TorusLattice) -> tuple[StateVector, Circuit]:
    """Toric-code ground state (all plaquettes, stars and winding 't Hooft
    loops at +1) together with the preparing circuit."""
    circ = toric_code_circuit(lat)
    psi = StateVector.zero_state(lat.num_links)
    run_circuit(psi, circ)
    return psi, circ


def apply_string(psi: StateVector, loop: LoopSpec, pauli: str) -> StateVector:
    """Apply a product of identical Paulis along a loop (involutive)."""
    if pauli not in ("Z", "X"):
        raise ValueError(f"pauli must be 'Z' or 'X', got {pauli!r}")
    return apply_pauli_string(psi, {q: pauli for q in loop.links})


# ---------------------------------------------------------------------------
# Compiled QAOA step
# ---------------------------------------------------------------------------

def _pair_scheme_steps(lat: TorusLattice, gamma: float) -> list[list[Gate]]:
    """12-step magnetic block for even L: plaquette columns paired (2k, 2k+1).

    Within a pair the left plaquette computes its Z-parity into the shared
    vertical link, phases it, and uncomputes before the right plaquette reads
    that link as a control; the right plaquette's horizontal CNOTs are delayed
    to steps 6-7 so the next pair's reads of its target link (steps 3 and 5)
    still see the unmodified value.
    """
    L = lat.L
    phase = -2.0 * gamma  # RZ(-2 gamma) == exp(i gamma sigma^z) on the parity bit
    steps: list[list[Gate]] = [[] for _ in range(12)]
    for k in range(L // 2):
        xl, xr = 2 * k, 2 * k + 1
        for y in range(L):
            t_l = lat.v_link(xl + 1, y)   # left plaquette target: shared link
            t_r = lat.v_link(xr + 1, y)   # right plaquette target: next pair's edge
            steps[0].append(Gate("CNOT", (lat.h_link(xl, y), t_l)))
            steps[1].append(Gate("CNOT", (lat.h_link(xl, y + 1), t_l)))
            steps[2].append(Gate("CNOT", (lat.v_link(xl, y), t_l)))
            steps[3].append(Gate("RZ", (t_l,), phase))
            steps[4].append(Gate("CNOT", (lat.v_link(xl, y), t_l)))
            steps[5].append(Gate("CNOT", (lat.h_link(xl, y + 1), t_l)))
            steps[5].append(Gate("CNOT", (lat.h_link(xr, y), t_r)))
            steps[6].append(Gate("CNOT", (lat.h_link(xl, y), t_l)))
            steps[6].append(Gate("CNOT", (lat.h_link(xr, y + 1), t_r)))
            steps[7].append(Gate("CNOT", (t_l, t_r)))
            steps[8].append(Gate("RZ", (t_r,), phase))
            steps[9].append(Gate("CNOT", (t_l, t_r)))
            steps[10].append(Gate("CNOT", (lat.h_link(xr, y + 1), t_r)))
            steps[11].append(Gate("CNOT", (lat.h_link(xr, y), t_r)))
    return steps


def _stripe_scheme_steps(lat: TorusLattice, gamma: float) -> list[list[Gate]]:
    """17-step magnetic block for the 3x3 torus: one three-plaquette stripe
    per row, the three plaquettes chained cyclically through the vertical
    links."""
    L = lat.L
    phase = -2.0 * gamma
    steps: list[list[Gate]] = [[] for _ in range(17)]
    for y in range(L):
        t0, t1, t2 = lat.v_link(1, y), lat.v_link(2, y), lat.v_link(0, y)
        # plaquette 0: controls h(0,y), h(0,y+1), v(0,y); target v(1,y)
        steps[0].append(Gate("CNOT", (lat.h_link(0, y), t0)))
        steps[1].append(Gate("CNOT", (lat.h_link(0, y + 1), t0)))
        steps[2].append(Gate("CNOT", (lat.v_link(0, y), t0)))
        steps[3].append(Gate("RZ", (t0,), phase))
        steps[4].append(Gate("CNOT", (lat.v_link(0, y), t0)))
        steps[5].append(Gate("CNOT", (lat.h_link(0, y + 1), t0)))
        steps[6].append(Gate("CNOT", (lat.h_link(0, y), t0)))
        # plaquette 1: horizontal controls start immediately, the vertical
        # control waits for plaquette 0 to restore v(1,y)
        steps[0].append(Gate("CNOT", (lat.h_link(1, y), t1)))
        steps[1].append(Gate("CNOT", (lat.h_link(1, y + 1), t1)))
        steps[7].append(Gate("CNOT", (t0, t1)))
        steps[8].append(Gate("RZ", (t1,), phase))
        steps[9].append(Gate("CNOT", (t0, t1)))
        steps[10].append(Gate("CNOT", (lat.h_link(1, y + 1), t1)))
        steps[11].append(Gate("CNOT", (lat.h_link(1, y), t1)))
        # plaquette 2 targets v(0,y), which plaquette 0 reads at steps 3 and
        # 5, so its first write is delayed to step 6
        steps[5].append(Gate("CNOT", (lat.h_link(2, y), t2)))
        steps[6].append(Gate("CNOT", (lat.h_link(2, y + 1), t2)))
        steps[12].append(Gate("CNOT", (t1, t2)))
        steps[13].append(Gate("RZ", (t2,), phase))
        steps[14].append(Gate("CNOT", (t1, t2)))
        steps[15].append(Gate("CNOT", (lat.h_link(2, y + 1), t2)))
        steps[16].append(Gate("CNOT", (lat.h_link(2, y), t2)))
    return steps


def compile_qaoa_step(
    lat: TorusLattice,
    gamma: float,
    beta: float,
    *,
    start: str = "electric",
    electric_mode: str = "rx",
) -> Circuit:
    """Compile one QAOA step into H/RX/RZ/CNOT gates.

    The magnetic block realizes exp(-i gamma H_B) exactly; the electric block
    is one layer of RX(-2 beta), equal to exp(-i beta H_E) up to a global
    phase (``electric_mode="hzh"`` emits the Hadamard-conjugated RZ form
    instead, same unitary in the hardware z-basis).  Block order follows
    ``start``: magnetic first for an electric start, electric first for a
    magnetic start.

    Supported sizes: any even L (depth 13 with the pair scheme) and L == 3
    (depth 18 with the stripe scheme).  Odd L >= 5 would need a mixed
    pair/stripe tiling and is rejected explicitly.
    """
    if start not in ("electric", "magnetic"):
        raise ValueError(f"start must be 'electric' or 'magnetic', got {start!r}")
    if electric_mode not in ("rx", "hzh"):
        raise ValueError(f"electric_mode must be 'rx' or 'hzh', got {electric_mode!r}")
    if lat.L % 2 == 0:
        steps = _pair_scheme_steps(lat, gamma)
    elif lat.L == 3:
        steps = _stripe_scheme_steps(lat, gamma)
    else:
        raise CompilationError(
            f"no gate schedule implemented for odd L={lat.L} >= 5; "
            "use an even lattice, L=3, or the exact-exponential path"
        )

    magnetic = [g for step in steps for g in step]
    electric: list[Gate] = []
    if electric_mode == "rx":
        for q in range(lat.num_links):
            electric.append(Gate("RX", (q,), -2.0 * beta))
    else:
        for q in range(lat.num_links):
            electric.append(Gate("H", (q,)))
        for q in range(lat.num_links):
            electric.append(Gate("RZ", (q,), -2.0 * beta))
        for q in range(lat.num_links):
            electric.append(Gate("H", (q,)))

    gates = magnetic + electric if start == "electric" else electric + magnetic
    return Circuit(lat.num_links, gates)


def qaoa_evolve_compiled(
    psi0: StateVector, sched: Schedule, lat: TorusLattice, *, copy: bool = True
) -> StateVector:
    """Evolve through P compiled steps (audit path; same state as the exact
    path up to a global phase)."""
    psi = psi0.copy() if copy else psi0
    for gamma, beta in zip(sched.gammas, sched.betas):
        run_circuit(psi, compile_qaoa_step(lat, gamma, beta, start=sched.start))
    return psi
