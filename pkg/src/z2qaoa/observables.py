"""Physics extraction: Wilson rectangles, Creutz ratios, topological entropy,
winding-sector labels and energies.

Wilson expectations are averaged over all L^2 translations of each rectangle
(the target states are translation invariant, so this is variance reduction,
not a bias).  Entropies are reported in nats to match the -ln 2 topological
constant; CSV output also carries bits for convenience.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuits import Schedule, apply_string, prepare_electric_gs, prepare_toric_code_gs, qaoa_evolve_exact
from .dualmodel import DualTFIM, dual_wilson_expectation
from .hamiltonian import LGTHamiltonian, energy as direct_energy, sector_labels
from .lattice import TorusLattice, noncontractible_loop, wilson_rectangle
from .statevector import (
    StateVector,
    expect_pauli_string,
    inner,
    reduced_density_matrix,
    von_neumann_entropy,
)

LN2 = math.log(2.0)
CREUTZ_FLOOR = 1e-6  # |<W>| at or below this makes the log ratio meaningless


def _link_endpoints(lat: TorusLattice, link: int) -> tuple[tuple[int, int], tuple[int, int]]:
    cell, orient = divmod(link, 2)
    y, x = divmod(cell, lat.L)
    if orient == 0:
        return (x, y), ((x + 1) % lat.L, y)
    return (x, y), (x, (y + 1) % lat.L)


@dataclass(frozen=True)
class Tripartition:
    """Disjoint two-qubit regions A, B, C forming a connected cluster.

    ``n_cut`` counts the star operators sharing links with both the cluster
    and its complement; it is derived from the geometry, never supplied by
    hand.  Build instances through ``make_tripartition`` so the invariants
    are actually checked.
    """

    a: tuple[int, ...]
    b: tuple[int, ...]
    c: tuple[int, ...]
    n_cut: int

    @property
    def abc(self) -> tuple[int, ...]:
        return self.a + self.b + self.c

    def regions(self) -> dict[str, tuple[int, ...]]:
        a, b, c = self.a, self.b, self.c
        return {
            "A": a, "B": b, "C": c,
            "AB": a + b, "BC": b + c, "AC": a + c,
            "ABC": a + b + c,
        }


def make_tripartition(
    lat: TorusLattice,
    a: tuple[int, ...],
    b: tuple[int, ...],
    c: tuple[int, ...],
) -> Tripartition:
    """Validate regions (disjoint, union connected on the lattice) and count
    the boundary-cut stars."""
    regions = (tuple(a), tuple(b), tuple(c))
    abc = [q for r in regions for q in r]
    if len(set(abc)) != len(abc):
        raise ValueError("regions A, B, C must be disjoint")
    for q in abc:
        if not (0 <= q < lat.num_links):
            raise ValueError(f"link id {q} out of range")
    # connectivity of the union under shared-vertex adjacency
    vertex_of: dict[tuple[int, int], list[int]] = {}
    for q in abc:
        for v in _link_endpoints(lat, q):
            vertex_of.setdefault(v, []).append(q)
    seen = {abc[0]}
    stack = [abc[0]]
    while stack:
        u = stack.pop()
        for v in _link_endpoints(lat, u):
            for w in vertex_of.get(v, ()):
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
    if len(seen) != len(abc):
        raise ValueError("the union A+B+C must be connected on the lattice")
    cluster = set(abc)
    n_cut = sum(1 for st in lat.stars if 0 < len(set(st) & cluster) < 4)
    return Tripartition(a=regions[0], b=regions[1], c=regions[2], n_cut=n_cut)


def default_tripartition(lat: TorusLattice) -> Tripartition:
    """The pinned six-link L-shaped cluster used for entropy scans.

    A sits on the two bottom horizontal links, B climbs the left edge, C
    holds the two vertical links above and below the bottom-right corner
    (the lower one wraps).  Exactly five stars are cut for every L >= 3:
    the star at (1, 0) lies fully inside the cluster.
    """
    if lat.L < 3:
        raise ValueError("the default tripartition needs L >= 3")
    part = make_tripartition(
        lat,
        a=(lat.h_link(0, 0), lat.h_link(1, 0)),
        b=(lat.v_link(0, 0), lat.h_link(0, 1)),
        c=(lat.v_link(1, 0), lat.v_link(1, lat.L - 1)),
    )
    if part.n_cut != 5:
        raise AssertionError(f"pinned tripartition geometry yields n_cut={part.n_cut}")
    return part


@dataclass
class TopologicalEntropyResult:
    s_topo: float
    s_abc: float
    entropies: dict[str, float]  # nats, keys A, B, C, AB, BC, AC, ABC


def topological_entropy(psi: StateVector, part: Tripartition) -> TopologicalEntropyResult:
    """Seven-term entropy combination S_A+S_B+S_C-S_AB-S_BC-S_AC+S_ABC.

    Returns the combination, the full-cluster entropy and all seven
    subsystem entropies (nats)."""
    ent = {
        name: von_neumann_entropy(reduced_density_matrix(psi, qubits))
        for name, qubits in part.regions().items()
    }
    s_topo = (
        ent["A"] + ent["B"] + ent["C"] - ent["AB"] - ent["BC"] - ent["AC"] + ent["ABC"]
    )
    return TopologicalEntropyResult(s_topo=s_topo, s_abc=ent["ABC"], entropies=ent)


# ---------------------------------------------------------------------------
# Wilson rectangles and Creutz ratios
# ---------------------------------------------------------------------------

def wilson_rectangle_expectation(
    lat: TorusLattice, psi: StateVector, lx: int, ly: int, *, average_anchors: bool = True
) -> float:
    """<W_{lx,ly}> on a direct-model state, averaged over all anchors."""
    anchors = (
        [(x, y) for y in range(lat.L) for x in range(lat.L)] if average_anchors else [(0, 0)]
    )
    vals = []
    for x0, y0 in anchors:
        loop = wilson_rectangle(lat, x0, y0, lx, ly)
        vals.append(expect_pauli_string(psi, {q: "Z" for q in loop.links}))
    return float(np.mean(vals))


def dual_wilson_rectangle_expectation(
    model: DualTFIM, psi: StateVector, lx: int, ly: int, *, average_anchors: bool = True
) -> float:
    """Same observable evaluated in the dual frame (X-product over the
    rectangle's interior plaquettes)."""
    from .lattice import build_lattice

    lat = build_lattice(model.L)
    anchors = (
        [(x, y) for y in range(lat.L) for x in range(lat.L)] if average_anchors else [(0, 0)]
    )
    vals = [
        dual_wilson_expectation(model, psi, wilson_rectangle(lat, x0, y0, lx, ly))
        for x0, y0 in anchors
    ]
    return float(np.mean(vals))


def wilson_scan(
    state: StateVector,
    geometry: TorusLattice | DualTFIM,
    sizes: list[tuple[int, int]],
    *,
    average_anchors: bool = True,
) -> dict[tuple[int, int], float]:
    """Table of rectangle expectations keyed by (lx, ly); dispatches on the
    geometry type (direct lattice vs dual model)."""
    table: dict[tuple[int, int], float] = {}
    for lx, ly in sizes:
        if isinstance(geometry, DualTFIM):
            table[(lx, ly)] = dual_wilson_rectangle_expectation(
                geometry, state, lx, ly, average_anchors=average_anchors
            )
        else:
            table[(lx, ly)] = wilson_rectangle_expectation(
                geometry, state, lx, ly, average_anchors=average_anchors
            )
    return table


@dataclass
class CreutzResult:
    l: int
    value: float | None
    indeterminate: bool = False
    reason: str | None = None


def creutz_ratio(wtable: dict[tuple[int, int], float], l: int, *, floor: float = CREUTZ_FLOOR) -> CreutzResult:
    """chi(l,l) = -log[ W(l,l) W(l-1,l-1) / (W(l,l-1) W(l-1,l)) ].

    The combination cancels perimeter-law decay and extracts the area-law
    coefficient.  Any |<W>| at or below ``floor`` (or a non-positive ratio)
    is reported as confined-indeterminate instead of a number: near zero
    coupling the expectations vanish and the logs diverge.
    """
    if l < 2:
        raise ValueError("Creutz ratio needs l >= 2")
    keys = [(l, l), (l - 1, l - 1), (l, l - 1), (l - 1, l)]
    try:
        w = [wtable[k] for k in keys]
    except KeyError as exc:
        raise KeyError(f"wilson table is missing rectangle {exc}") from exc
    if any(abs(v) <= floor for v in w):
        return CreutzResult(l=l, value=None, indeterminate=True, reason="expectation at floor")
    ratio = (w[0] * w[1]) / (w[2] * w[3])
    if ratio <= 0:
        return CreutzResult(l=l, value=None, indeterminate=True, reason="non-positive ratio")
    return CreutzResult(l=l, value=float(-np.log(ratio)))


# ---------------------------------------------------------------------------
# Winding-sector energies
# ---------------------------------------------------------------------------

@dataclass
class SectorState:
    label: str
    energy: float
    tau_h: float
    tau_v: float
    state: StateVector


def dressed_sector_states(
    lat: TorusLattice,
    psi_pp: StateVector,
    *,
    offset: int = 0,
) -> list[tuple[str, StateVector]]:
    """The four winding-sector candidates obtained by decorating the (+,+)
    state with non-contractible Z-strings along one row/column."""
    wh = noncontractible_loop(lat, "wilson", "h", offset)
    wv = noncontractible_loop(lat, "wilson", "v", offset)
    out = [("++", psi_pp.copy())]
    out.append(("+-", apply_string(psi_pp.copy(), wh, "Z")))
    out.append(("-+", apply_string(psi_pp.copy(), wv, "Z")))
    out.append(("--", apply_string(apply_string(psi_pp.copy(), wh, "Z"), wv, "Z")))
    return out


def sector_energies(
    lat: TorusLattice,
    h: float,
    sched: Schedule,
    *,
    offset: int = 0,
    string_first: bool = False,
) -> list[SectorState]:
    """Energies and labels of the four sector states built from one schedule.

    By default the strings dress the evolved (+,+) state; with
    ``string_first`` they decorate the initial state before the evolution
    (the schedule is reused unchanged in every sector).
    """
    H = LGTHamiltonian(lat, h)
    if sched.start == "electric":
        psi0 = prepare_electric_gs(lat)
    else:
        psi0 = prepare_toric_code_gs(lat)[0]
    results: list[SectorState] = []
    if string_first:
        for label, dressed0 in dressed_sector_states(lat, psi0, offset=offset):
            psi = qaoa_evolve_exact(dressed0, sched, lat, copy=False)
            th, tv = sector_labels(psi, lat, offset)
            results.append(SectorState(label, direct_energy(H, psi), th, tv, psi))
    else:
        psi_pp = qaoa_evolve_exact(psi0, sched, lat)
        for label, psi in dressed_sector_states(lat, psi_pp, offset=offset):
            th, tv = sector_labels(psi, lat, offset)
            results.append(SectorState(label, direct_energy(H, psi), th, tv, psi))
    return results


def pairwise_overlaps(states: list[StateVector]) -> np.ndarray:
    """Absolute overlap matrix |<i|j>| (orthogonality diagnostics)."""
    m = len(states)
    out = np.zeros((m, m))
    for i in range(m):
        for j in range(m):
            out[i, j] = abs(inner(states[i], states[j]))
    return out
