"""Dual transverse-field Ising model on the L^2 plaquette sites.

Mapping: X_p equals the plaquette operator B_p, and Z_p Z_p' equals sigma^x
on the link shared by neighbouring plaquettes p, p'.  The gauge-theory
Hamiltonian then becomes

    H = sum_<p,p'> (1 - Z_p Z_p') - h sum_p X_p

on a periodic L x L site lattice with 2L^2 bonds, with the physical sector
fixed by the global-flip constraint prod_p X_p = +1 (the product of all
plaquette operators is the identity on the torus).

The gauge-invariant (+,+)-sector direct model and the even-sector dual model
are unitarily equivalent, so QAOA energies and ground-state fidelities agree
between the two representations; this halves the qubit count and makes
L = 4, 5 reachable.  Dual images of the initial states: the all-plus product
state for the toric-code start, and the even GHZ state for the electric
start (sigma^x_l = +1 on every link forces Z_p Z_p' = +1 on every bond, and
the global-flip constraint selects the symmetric combination; this choice is
cross-validated against the direct model at L = 2, 3 rather than trusted).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._eig import eigen_residuals, lowest_eigenpairs_matfree, resolve_degeneracies
from .circuits import Schedule
from .hamiltonian import SpectrumResult
from .lattice import LoopSpec, TorusLattice, build_lattice
from .statevector import MAX_QUBITS, StateVector, _exp_ix_all, expect_x

try:  # fused kernels make the L=4,5 landscapes affordable on one core
    from numba import njit as _njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a normal install here
    _HAVE_NUMBA = False


if _HAVE_NUMBA:

    @_njit(cache=True)
    def _nb_rotate_sweep(amps, c, s, n):  # pragma: no cover - jitted
        """In-place prod_q exp(i gamma_b X_q) on (B, 2^n) amps, angle per row.

        Qubits are consumed two per memory pass (radix-4 butterfly); the
        sweep is memory-bound, so halving the passes nearly halves the time.
        """
        b_count, dim = amps.shape
        for q in range(0, n - 1, 2):
            lo_sz = 1 << q
            step = lo_sz << 2
            for b in range(b_count):
                c2 = c[b] * c[b]
                s2 = s[b] * s[b]
                ics = 1j * c[b] * s[b]
                row = amps[b]
                for base in range(0, dim, step):
                    for i00 in range(base, base + lo_sz):
                        i01 = i00 + lo_sz
                        i10 = i00 + 2 * lo_sz
                        i11 = i10 + lo_sz
                        a00 = row[i00]
                        a01 = row[i01]
                        a10 = row[i10]
                        a11 = row[i11]
                        mix = ics * (a01 + a10)
                        row[i00] = c2 * a00 + mix - s2 * a11
                        row[i11] = c2 * a11 + mix - s2 * a00
                        mix2 = ics * (a00 + a11)
                        row[i01] = c2 * a01 + mix2 - s2 * a10
                        row[i10] = c2 * a10 + mix2 - s2 * a01
        if n % 2:
            q = n - 1
            lo_sz = 1 << q
            step = lo_sz << 1
            for b in range(b_count):
                cb = c[b]
                sb = 1j * s[b]
                row = amps[b]
                for base in range(0, dim, step):
                    for i0 in range(base, base + lo_sz):
                        i1 = i0 + lo_sz
                        a0 = row[i0]
                        a1 = row[i1]
                        row[i0] = cb * a0 + sb * a1
                        row[i1] = cb * a1 + sb * a0

    @_njit(cache=True)
    def _nb_phase_gather(amps, lut, table):  # pragma: no cover - jitted
        """In-place amps[b, z] *= lut[b, table[z]] diagonal phase."""
        b_count, dim = amps.shape
        for b in range(b_count):
            row = amps[b]
            lrow = lut[b]
            for z in range(dim):
                row[z] *= lrow[table[z]]


class DualTFIM:
    """Transverse-field Ising model dual to the L x L gauge theory."""

    def __init__(self, L: int, h: float):
        if L < 2:
            raise ValueError(f"lattice size must be >= 2, got {L}")
        if h < 0:
            raise ValueError(f"coupling h must be >= 0, got {h}")
        if L * L > MAX_QUBITS:
            raise ValueError(f"dual model with L={L} needs {L * L} qubits > cap {MAX_QUBITS}")
        self.L = L
        self.h = float(h)
        self.n_sites = L * L
        self.dim = 1 << self.n_sites
        self.bonds = _dual_bonds(L)
        # diagonal of sum_bonds (1 - Z_p Z_p')
        nb = len(self.bonds)
        self._diag = float(nb) - _bond_parity_sum(L).astype(np.float64)

    def site(self, x: int, y: int) -> int:
        return (y % self.L) * self.L + (x % self.L)

    def apply(self, amps: np.ndarray) -> np.ndarray:
        """(H psi) on a raw amplitude array."""
        n = self.n_sites
        out = self._diag * amps
        src = amps.reshape([2] * n)
        dst = out.reshape([2] * n)
        sel: list = [slice(None)] * n
        for q in range(n):
            sel[n - 1 - q] = slice(None, None, -1)
            dst -= self.h * src[tuple(sel)]
            sel[n - 1 - q] = slice(None)
        return out

    def __call__(self, amps: np.ndarray) -> np.ndarray:
        return self.apply(amps)


def _dual_bonds(L: int) -> tuple[tuple[int, int, int], ...]:
    """Nearest-neighbour plaquette pairs (p, p', shared direct-lattice link id)."""
    lat = build_lattice(L)
    bonds = []
    for y in range(L):
        for x in range(L):
            p = lat.plaquette_id(x, y)
            bonds.append((p, lat.plaquette_id(x + 1, y), lat.v_link(x + 1, y)))
            bonds.append((p, lat.plaquette_id(x, y + 1), lat.h_link(x, y + 1)))
    return tuple(bonds)


@lru_cache(maxsize=4)
def _bond_parity_sum(L: int) -> np.ndarray:
    """int16 table over 2^(L^2) basis states: sum over bonds of z_p z_p'."""
    n = L * L
    idx = np.arange(1 << n, dtype=np.uint32)
    total = np.zeros(1 << n, dtype=np.int16)
    for p, q, _link in _dual_bonds(L):
        par = ((idx >> np.uint32(p)) ^ (idx >> np.uint32(q))) & np.uint32(1)
        total += 1 - 2 * par.astype(np.int16)
    total.setflags(write=False)
    return total


def dual_electric_gs(model: DualTFIM) -> StateVector:
    """Even GHZ state, the dual image of the all-plus electric ground state."""
    psi = StateVector(model.n_sites)
    psi.amps[0] = 1.0 / np.sqrt(2.0)
    psi.amps[-1] = 1.0 / np.sqrt(2.0)
    return psi


def dual_magnetic_gs(model: DualTFIM) -> StateVector:
    """All-plus product state, the dual image of the toric-code ground state
    in the (+,+) winding sector."""
    return StateVector.plus_state(model.n_sites)


def dual_energy(model: DualTFIM, psi: StateVector) -> float:
    """sum_bonds (1 - <Z_p Z_p'>) - h sum_p <X_p>."""
    if psi.dim() != model.dim:
        raise ValueError("state dimension does not match model")
    prob = np.abs(psi.amps) ** 2
    diag = float(prob @ model._diag)
    xsum = sum(expect_x(psi, p) for p in range(model.n_sites))
    return diag - model.h * float(xsum)


def _layer_tables(model: DualTFIM) -> tuple[np.ndarray, np.ndarray]:
    nb = len(model.bonds)
    table = _bond_parity_sum(model.L).astype(np.int64) + nb
    base = np.arange(-nb, nb + 1)
    return table, base


def _rotate_rows(amps2d: np.ndarray, n: int, gammas_rows: np.ndarray) -> None:
    """prod_q exp(i gamma X_q) per row, through the fused kernel if present."""
    if _HAVE_NUMBA:
        _nb_rotate_sweep(amps2d, np.cos(gammas_rows), np.sin(gammas_rows), n)
    else:
        _exp_ix_all(amps2d, n, gammas_rows)


def _phase_rows(
    amps2d: np.ndarray, betas_rows: np.ndarray, table: np.ndarray, base: np.ndarray
) -> None:
    """Bond phase exp(i beta sum Z_p Z_p') per row (diagonal lookup)."""
    lut = np.exp(1j * np.outer(betas_rows, base))
    if _HAVE_NUMBA:
        _nb_phase_gather(amps2d, lut, table)
    else:
        amps2d *= lut[:, table]


def _evolve_rows(model: DualTFIM, amps2d: np.ndarray, params: np.ndarray, start: str) -> None:
    p = params.shape[1] // 2
    table, base = _layer_tables(model)
    for m in range(p):
        gam, bet = params[:, m], params[:, p + m]
        if start == "electric":
            _rotate_rows(amps2d, model.n_sites, gam)
            _phase_rows(amps2d, bet, table, base)
        else:
            _phase_rows(amps2d, bet, table, base)
            _rotate_rows(amps2d, model.n_sites, gam)


def dual_qaoa_evolve(
    psi0: StateVector, sched: Schedule, model: DualTFIM, *, copy: bool = True
) -> StateVector:
    """Alternating evolution in the dual frame with the same (gamma, beta)
    semantics as the direct model, so schedules transfer verbatim.

    gamma drives exp(i gamma sum_p X_p) (single-site x-rotations); beta drives
    the bond phase exp(i beta sum Z_p Z_p') (diagonal, up to a global phase).
    """
    if psi0.dim() != model.dim:
        raise ValueError("state dimension does not match model")
    psi = psi0.copy() if copy else psi0
    params = np.concatenate([sched.gammas, sched.betas])[None, :]
    _evolve_rows(model, psi.amps.reshape(1, model.dim), params, sched.start)
    return psi


# ---------------------------------------------------------------------------
# Batched evolution (drives vectorized finite-difference gradients)
# ---------------------------------------------------------------------------

def evolve_batch(model: DualTFIM, psi0: StateVector, params: np.ndarray, start: str) -> np.ndarray:
    """Evolve one initial state under a batch of parameter vectors.

    ``params`` has shape (B, 2P), rows laid out [gammas, betas].  Returns the
    (B, dim) final amplitudes.  Row b reproduces dual_qaoa_evolve with row b's
    schedule (elementwise arithmetic is identical, just vectorized).
    """
    params = np.atleast_2d(np.asarray(params, dtype=float))
    if params.shape[1] % 2:
        raise ValueError("parameter rows must have even length 2P")
    amps = np.broadcast_to(psi0.amps, (params.shape[0], model.dim)).copy()
    _evolve_rows(model, amps, params, start)
    return amps


def energy_batch(model: DualTFIM, amps: np.ndarray) -> np.ndarray:
    """Row-wise dual energies of a (B, dim) amplitude batch."""
    prob = np.abs(amps) ** 2
    diag = prob @ model._diag
    n = model.n_sites
    xsum = np.zeros(amps.shape[0])
    for q in range(n):
        v = amps.reshape(amps.shape[0], 1 << (n - 1 - q), 2, 1 << q)
        xsum += 2.0 * np.real(np.einsum("bkl,bkl->b", v[:, :, 0, :].conj(), v[:, :, 1, :]))
    return diag - model.h * xsum


def global_flip_expectation(model: DualTFIM, psi: StateVector) -> float:
    """<prod_p X_p>; +1 on physical (even-sector) states."""
    flipped = psi.amps[::-1]  # complementing every bit reverses the index
    return float(np.real(np.vdot(psi.amps, flipped)))


def dual_wilson_expectation(model: DualTFIM, psi: StateVector, rect: LoopSpec) -> float:
    """Wilson rectangle in the dual frame: the X-product over the enclosed
    plaquettes (image of the boundary Z-string under the duality map)."""
    if rect.kind != "rectangle":
        raise ValueError(
            "only contractible rectangles have a dual image in the fixed winding sector"
        )
    n = model.n_sites
    sel: list = [slice(None)] * n
    for p in rect.interior:
        sel[n - 1 - p] = slice(None, None, -1)
    flipped = psi.amps.reshape([2] * n)[tuple(sel)].reshape(model.dim)
    return float(np.real(np.vdot(psi.amps, flipped)))


def dual_lowest_eigenpairs(
    model: DualTFIM,
    k: int,
    *,
    even_sector: bool = True,
    seed: int = 7,
    tol: float = 1e-10,
    maxiter: int = 2000,
    residual_bound: float = 1e-8,
) -> SpectrumResult:
    """Lowest k eigenpairs, optionally filtered to the physical even sector.

    Degenerate clusters are rotated into global-flip eigenstates first, then
    states with <prod X> < 0 are dropped.  The SpectrumResult reuses the
    direct model's container with tau_h = tau_v = flip label (the dual frame
    fixes the (+,+) winding sector, so no independent labels exist here).
    """
    n = model.n_sites

    def flip_apply(amps: np.ndarray) -> np.ndarray:
        return amps[::-1].copy()

    if model.dim <= 2048:
        k_raw = model.dim  # dense path: take the full spectrum, filter after
    else:
        k_raw = k if not even_sector else min(2 * k + 6, model.dim - 2)
    vals, vecs = lowest_eigenpairs_matfree(
        model.apply, model.dim, k_raw, seed=seed, tol=tol, maxiter=maxiter
    )
    vals, vecs, labels = resolve_degeneracies(vals, vecs, [flip_apply])
    if even_sector:
        keep = np.where(labels[:, 0] > 0.0)[0]
        if len(keep) < k and model.dim > 2048:
            raise RuntimeError(
                f"only {len(keep)} even-sector levels among the lowest {k_raw}; "
                "increase the request window"
            )
        keep = keep[:k]
        vals, vecs, labels = vals[keep], vecs[:, keep], labels[keep]
    else:
        vals, vecs, labels = vals[:k], vecs[:, :k], labels[:k]
    res = eigen_residuals(model.apply, vals, vecs)
    if res.max() > residual_bound:
        raise RuntimeError(
            f"eigenpair residual {res.max():.3e} exceeds bound {residual_bound:.1e}"
        )
    return SpectrumResult(
        eigenvalues=[float(v) for v in vals],
        eigenvectors=[StateVector(n, vecs[:, j].copy()) for j in range(vecs.shape[1])],
        tau_h=[float(x) for x in labels[:, 0]],
        tau_v=[float(x) for x in labels[:, 0]],
        residuals=[float(r) for r in res],
    )


def dual_ground_state(model: DualTFIM, *, seed: int = 7) -> tuple[float, StateVector]:
    """Lowest even-sector pair (the global ground state is always even: the
    z-basis off-diagonal elements are non-positive, so the ground vector has
    positive amplitudes and a positive global-flip expectation)."""
    spec = dual_lowest_eigenpairs(model, 1, seed=seed)
    return spec.eigenvalues[0], spec.eigenvectors[0]
