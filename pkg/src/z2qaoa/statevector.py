"""Dense state-vector engine: gates, Pauli expectations, reduced density matrices.

Conventions, used everywhere in this package:

* Bit ordering is little-endian: qubit q maps to bit q of the amplitude
  index, i.e. basis state |z> has qubit q in state (z >> q) & 1.
* |0> is the sigma^z = +1 eigenstate ("up"), |1> is sigma^z = -1.
* Rotation gates follow the standard half-angle convention
  RX(t) = exp(-i t X / 2), RZ(t) = exp(-i t Z / 2).

Gate kernels mutate the amplitude array in place (stride iteration over
axis views, one half-size scratch buffer at most) and return the state to
allow chaining.  Unitary-equivalence checks elsewhere are phase-insensitive
(compare |<a|b>|^2, never raw amplitudes).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

MAX_QUBITS = 26  # fail fast before a 2^n allocation goes off the rails
_RDM_MAX_QUBITS = 12
_EIG_CUTOFF = 1e-14  # eigenvalues below this count as exact zeros in entropies

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / np.sqrt(2.0)


def rx_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def rz_matrix(theta: float) -> np.ndarray:
    return np.array(
        [[np.exp(-0.5j * theta), 0.0], [0.0, np.exp(0.5j * theta)]], dtype=complex
    )


class StateVector:
    """Normalized complex amplitudes over n qubits (little-endian indexing)."""

    __slots__ = ("n_qubits", "amps")

    def __init__(self, n_qubits: int, amps: np.ndarray | None = None, *, max_qubits: int = MAX_QUBITS):
        if n_qubits < 1:
            raise ValueError("need at least one qubit")
        if n_qubits > max_qubits:
            raise ValueError(
                f"{n_qubits} qubits exceeds the cap of {max_qubits} "
                f"(2**{n_qubits} amplitudes would not fit comfortably in memory)"
            )
        self.n_qubits = n_qubits
        if amps is None:
            amps = np.zeros(1 << n_qubits, dtype=np.complex128)
            amps[0] = 1.0
        else:
            amps = np.asarray(amps, dtype=np.complex128).reshape(1 << n_qubits)
        self.amps = amps

    @classmethod
    def zero_state(cls, n_qubits: int) -> "StateVector":
        """|00...0>, every qubit in the sigma^z = +1 eigenstate."""
        return cls(n_qubits)

    @classmethod
    def plus_state(cls, n_qubits: int) -> "StateVector":
        """|++...+>, every qubit in the sigma^x = +1 eigenstate."""
        dim = 1 << n_qubits
        amps = np.full(dim, 1.0 / np.sqrt(dim), dtype=np.complex128)
        return cls(n_qubits, amps)

    @classmethod
    def from_amplitudes(cls, amps: np.ndarray) -> "StateVector":
        n = int(np.log2(len(amps)))
        if 1 << n != len(amps):
            raise ValueError("amplitude array length must be a power of two")
        return cls(n, np.array(amps, dtype=np.complex128))

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.amps.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def dim(self) -> int:
        return self.amps.size


@dataclass
class DensityMatrix:
    """Dense reduced density matrix on k qubits (Hermitian, unit trace)."""

    k_qubits: int
    matrix: np.ndarray

    def __post_init__(self):
        dim = 1 << self.k_qubits
        if self.matrix.shape != (dim, dim):
            raise ValueError(f"matrix shape {self.matrix.shape} != ({dim}, {dim})")
        if not np.allclose(self.matrix, self.matrix.conj().T, rtol=0.0, atol=1e-10):
            raise ValueError("density matrix is not Hermitian within 1e-10")
        tr = complex(np.trace(self.matrix))
        if abs(tr - 1.0) > 1e-10:
            raise ValueError(f"density matrix trace {tr} differs from 1 by > 1e-10")


def _qubit_view(amps: np.ndarray, n: int, q: int) -> np.ndarray:
    """View with qubit q isolated on axis 1: shape (2^(n-1-q), 2, 2^q)."""
    return amps.reshape(1 << (n - 1 - q), 2, 1 << q)


def apply_one_qubit(psi: StateVector, q: int, u: np.ndarray) -> StateVector:
    """Apply a 2x2 unitary to qubit q in place.

    Non-unitary matrices are rejected (tolerance 1e-12) so that norm
    preservation is guaranteed by construction.
    """
    if not (0 <= q < psi.n_qubits):
        raise ValueError(f"qubit {q} out of range for {psi.n_qubits} qubits")
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2):
        raise ValueError("one-qubit gate must be a 2x2 matrix")
    if not np.allclose(u @ u.conj().T, np.eye(2), rtol=0.0, atol=1e-12):
        raise ValueError("matrix is not unitary within 1e-12")
    v = _qubit_view(psi.amps, psi.n_qubits, q)
    lo = v[:, 0, :].copy()
    v[:, 0, :] *= u[0, 0]
    v[:, 0, :] += u[0, 1] * v[:, 1, :]
    v[:, 1, :] *= u[1, 1]
    v[:, 1, :] += u[1, 0] * lo
    return psi


def apply_hadamard(psi: StateVector, q: int) -> StateVector:
    return apply_one_qubit(psi, q, HADAMARD)


def apply_rx(psi: StateVector, q: int, theta: float) -> StateVector:
    return apply_one_qubit(psi, q, rx_matrix(theta))


def _exp_ix_all(amps: np.ndarray, n: int, gamma) -> None:
    """In-place prod_q exp(i gamma X_q) on flat (dim,) or batched (B, dim) amps.

    ``gamma`` may be a scalar or a per-row array for batched input.  This is
    the unchecked fast path behind the uniform x-rotation layers; same
    arithmetic as apply_one_qubit with the exp(i gamma X) matrix.
    """
    if amps.ndim == 1:
        c, s1j = np.cos(gamma), 1j * np.sin(gamma)
        for q in range(n):
            v = amps.reshape(1 << (n - 1 - q), 2, 1 << q)
            lo = v[:, 0, :].copy()
            v[:, 0, :] *= c
            v[:, 0, :] += s1j * v[:, 1, :]
            v[:, 1, :] *= c
            v[:, 1, :] += s1j * lo
    else:
        b = amps.shape[0]
        g = np.broadcast_to(np.asarray(gamma, dtype=float), (b,))
        c = np.cos(g)[:, None, None]
        s1j = (1j * np.sin(g))[:, None, None]
        for q in range(n):
            v = amps.reshape(b, 1 << (n - 1 - q), 2, 1 << q)
            lo = v[:, :, 0, :].copy()
            v[:, :, 0, :] *= c
            v[:, :, 0, :] += s1j * v[:, :, 1, :]
            v[:, :, 1, :] *= c
            v[:, :, 1, :] += s1j * lo


def apply_rz(psi: StateVector, q: int, theta: float) -> StateVector:
    """Diagonal fast path for RZ(theta) = exp(-i theta Z / 2)."""
    if not (0 <= q < psi.n_qubits):
        raise ValueError(f"qubit {q} out of range for {psi.n_qubits} qubits")
    v = _qubit_view(psi.amps, psi.n_qubits, q)
    v[:, 0, :] *= np.exp(-0.5j * theta)
    v[:, 1, :] *= np.exp(0.5j * theta)
    return psi


def apply_cnot(psi: StateVector, control: int, target: int) -> StateVector:
    """Apply CNOT in place (an amplitude permutation, its own inverse)."""
    n = psi.n_qubits
    if control == target:
        raise ValueError("control and target must differ")
    for q in (control, target):
        if not (0 <= q < n):
            raise ValueError(f"qubit {q} out of range for {n} qubits")
    hi, lo = max(control, target), min(control, target)
    v = psi.amps.reshape(
        1 << (n - 1 - hi), 2, 1 << (hi - 1 - lo), 2, 1 << lo
    )
    c_ax = 1 if control == hi else 3
    t_ax = 1 if target == hi else 3
    sel: list = [slice(None)] * 5
    sel[c_ax] = 1
    sel0, sel1 = list(sel), list(sel)
    sel0[t_ax] = 0
    sel1[t_ax] = 1
    tmp = v[tuple(sel0)].copy()
    v[tuple(sel0)] = v[tuple(sel1)]
    v[tuple(sel1)] = tmp
    return psi


def apply_zz_phase(psi: StateVector, qubits: list[int] | tuple[int, ...], theta: float) -> StateVector:
    """Multiply each amplitude by exp(i theta s), s = +-1 the Z-parity of ``qubits``.

    For a single qubit this equals RZ(-2 theta) up to a global phase; for the
    four links of a plaquette it is the exact plaquette-operator exponential.
    """
    qubits = tuple(qubits)
    if len(qubits) == 0:
        raise ValueError("qubit list must be non-empty")
    if len(set(qubits)) != len(qubits):
        raise ValueError(f"duplicate qubits in {qubits}")
    n = psi.n_qubits
    for q in qubits:
        if not (0 <= q < n):
            raise ValueError(f"qubit {q} out of range for {n} qubits")
    mask = 0
    for q in qubits:
        mask |= 1 << q
    idx = np.arange(psi.dim(), dtype=np.uint64)
    odd = (np.bitwise_count(idx & np.uint64(mask)) & 1).astype(bool)
    psi.amps *= np.where(odd, np.exp(-1j * theta), np.exp(1j * theta))
    return psi


def apply_pauli_string(psi: StateVector, string: dict[int, str]) -> StateVector:
    """Apply a product of single-qubit Paulis {qubit: "X"|"Y"|"Z"} in place."""
    n = psi.n_qubits
    z_qubits = []
    flip_axes = []
    n_y = 0
    for q, p in string.items():
        if not (0 <= q < n):
            raise ValueError(f"qubit {q} out of range for {n} qubits")
        if p == "Z":
            z_qubits.append(q)
        elif p == "X":
            flip_axes.append(q)
        elif p == "Y":
            flip_axes.append(q)
            z_qubits.append(q)
            n_y += 1
        else:
            raise ValueError(f"unknown Pauli {p!r}")
    # Y = i X Z per qubit: apply Z-parity sign first, then flip, then i^{#Y}.
    for q in z_qubits:
        _qubit_view(psi.amps, n, q)[:, 1, :] *= -1.0
    if flip_axes:
        view = psi.amps.reshape([2] * n)
        sel: list = [slice(None)] * n
        for q in flip_axes:
            sel[n - 1 - q] = slice(None, None, -1)
        psi.amps = np.ascontiguousarray(view[tuple(sel)]).reshape(psi.dim())
    if n_y % 4:
        psi.amps *= 1j ** (n_y % 4)
    return psi


def expect_pauli_string(psi: StateVector, string: dict[int, str]) -> float:
    """<psi| P |psi> for a Pauli product P given as {qubit: "X"|"Y"|"Z"}."""
    if not string:
        return float(np.vdot(psi.amps, psi.amps).real)
    phi = psi.copy()
    apply_pauli_string(phi, string)
    val = np.vdot(psi.amps, phi.amps)
    return float(val.real)


def expect_x(psi: StateVector, q: int) -> float:
    """<sigma^x_q>, computed without copying the state."""
    v = _qubit_view(psi.amps, psi.n_qubits, q)
    return float(2.0 * np.real(np.vdot(v[:, 0, :], v[:, 1, :])))


def inner(a: StateVector, b: StateVector) -> complex:
    if a.dim() != b.dim():
        raise ValueError("dimension mismatch")
    return complex(np.vdot(a.amps, b.amps))


def fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>|^2, clamped to [0, 1] against last-ulp rounding excess."""
    return min(max(float(abs(inner(a, b)) ** 2), 0.0), 1.0)


def reduced_density_matrix(psi: StateVector, keep: list[int] | tuple[int, ...]) -> DensityMatrix:
    """Partial trace over the complement of ``keep``.

    Row/column bits of the result follow ``keep`` little-endian: keep[j] is
    bit j of the density-matrix index.  At most 12 kept qubits (dense output).
    """
    keep = list(keep)
    n = psi.n_qubits
    if len(set(keep)) != len(keep):
        raise ValueError("kept qubits must be distinct")
    if not keep or len(keep) > _RDM_MAX_QUBITS:
        raise ValueError(f"keep between 1 and {_RDM_MAX_QUBITS} qubits, got {len(keep)}")
    for q in keep:
        if not (0 <= q < n):
            raise ValueError(f"qubit {q} out of range for {n} qubits")
    k = len(keep)
    rest = [q for q in range(n) if q not in keep]
    tensor = psi.amps.reshape([2] * n)
    # axis of qubit q in the reshaped tensor is n-1-q; order kept axes so that
    # keep[k-1] is the most significant row bit.
    perm = [n - 1 - q for q in reversed(keep)] + [n - 1 - q for q in reversed(rest)]
    a = tensor.transpose(perm).reshape(1 << k, 1 << (n - k))
    rho = a @ a.conj().T
    return DensityMatrix(k_qubits=k, matrix=rho)


def von_neumann_entropy(rho: DensityMatrix) -> float:
    """Entropy in nats, -sum(lam ln lam) over eigenvalues above the cutoff.

    Eigenvalues below 1e-14 are treated as exact zeros; this absorbs the
    numerically negative eigenvalues a partial trace can produce.
    """
    lam = np.linalg.eigvalsh(rho.matrix)
    if lam.min() < -1e-10:
        raise ValueError(f"density matrix has eigenvalue {lam.min()}, below -1e-10")
    lam = lam[lam > _EIG_CUTOFF]
    s = float(-np.sum(lam * np.log(lam)))
    return max(s, 0.0)


_DUMP_MAGIC = b"Z2SV"


def save_amplitudes(psi: StateVector, path) -> None:
    """Debug dump: magic, u32 n_qubits, then little-endian f64 (re, im) pairs."""
    with open(path, "wb") as f:
        f.write(_DUMP_MAGIC)
        f.write(struct.pack("<I", psi.n_qubits))
        f.write(np.ascontiguousarray(psi.amps, dtype="<c16").tobytes())


def load_amplitudes(path) -> StateVector:
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != _DUMP_MAGIC:
            raise ValueError(f"bad magic {magic!r}")
        (n,) = struct.unpack("<I", f.read(4))
        amps = np.frombuffer(f.read(), dtype="<c16").astype(np.complex128)
    if amps.size != 1 << n:
        raise ValueError(f"expected {1 << n} amplitudes, found {amps.size}")
    return StateVector(n, amps)
