"""Independent dense linear-algebra oracles used to check the fast kernels.

Everything here is built from explicit Kronecker products and full matrices,
never from the package's stride/view kernels, so agreement between the two
is a real check.  Bit convention matches the package: qubit q is bit q of
the state index, so a one-qubit operator on qubit q enters the Kronecker
product at position n-1-q from the left.
"""

from __future__ import annotations

import numpy as np

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)

PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}


def kron_chain(mats: list[np.ndarray]) -> np.ndarray:
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def op_on(n: int, ops: dict[int, np.ndarray]) -> np.ndarray:
    """Dense operator acting with ops[q] on qubit q, identity elsewhere."""
    mats = [ops.get(q, I2) for q in reversed(range(n))]
    return kron_chain(mats)


def pauli_string_matrix(n: int, string: dict[int, str]) -> np.ndarray:
    return op_on(n, {q: PAULI[p] for q, p in string.items()})


def cnot_matrix(n: int, control: int, target: int) -> np.ndarray:
    dim = 1 << n
    m = np.zeros((dim, dim), dtype=complex)
    for z in range(dim):
        z2 = z ^ (1 << target) if (z >> control) & 1 else z
        m[z2, z] = 1.0
    return m


def rx_mat(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def rz_mat(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)]).astype(complex)


def gate_matrix(n: int, kind: str, qubits: tuple[int, ...], angle: float | None) -> np.ndarray:
    if kind == "H":
        return op_on(n, {qubits[0]: H})
    if kind == "RX":
        return op_on(n, {qubits[0]: rx_mat(angle)})
    if kind == "RZ":
        return op_on(n, {qubits[0]: rz_mat(angle)})
    if kind == "CNOT":
        return cnot_matrix(n, qubits[0], qubits[1])
    raise ValueError(kind)


def circuit_unitary(n: int, gates) -> np.ndarray:
    """Full unitary of a gate list (small n only)."""
    u = np.eye(1 << n, dtype=complex)
    for g in gates:
        u = gate_matrix(n, g.kind, g.qubits, g.angle) @ u
    return u


def zz_phase_matrix(n: int, qubits: tuple[int, ...], theta: float) -> np.ndarray:
    """exp(i theta * prod_q Z_q) as a dense diagonal."""
    zprod = pauli_string_matrix(n, {q: "Z" for q in qubits})
    return np.diag(np.exp(1j * theta * np.diag(zprod).real))


def dense_lgt_hamiltonian(lat, h: float) -> np.ndarray:
    """H = sum_l (1 - X_l) - h sum_p Z Z Z Z, assembled term by term."""
    n = lat.num_links
    dim = 1 << n
    ham = np.zeros((dim, dim), dtype=complex)
    for link in range(n):
        ham += np.eye(dim) - pauli_string_matrix(n, {link: "X"})
    for plaq in lat.plaquettes:
        ham -= h * pauli_string_matrix(n, {q: "Z" for q in plaq})
    return ham


def dense_dual_hamiltonian(L: int, h: float) -> np.ndarray:
    """Dual Ising Hamiltonian from a fresh bond enumeration."""
    n = L * L
    dim = 1 << n

    def site(x, y):
        return (y % L) * L + (x % L)

    ham = np.zeros((dim, dim), dtype=complex)
    for y in range(L):
        for x in range(L):
            for nx, ny in ((x + 1, y), (x, y + 1)):
                zz = pauli_string_matrix(n, {site(x, y): "Z", site(nx, ny): "Z"})
                ham += np.eye(dim) - zz
            ham -= h * pauli_string_matrix(n, {site(x, y): "X"})
    return ham


def dense_expectation(ham: np.ndarray, amps: np.ndarray) -> float:
    return float(np.real(amps.conj() @ (ham @ amps)))


def random_state(n: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return v / np.linalg.norm(v)
