"""Gate kernels, expectations and entropies against dense kron oracles."""

from __future__ import annotations

import numpy as np
import pytest

import oracles
from z2qaoa.lattice import build_lattice
from z2qaoa.circuits import prepare_toric_code_gs
from z2qaoa.statevector import (
    HADAMARD,
    StateVector,
    apply_cnot,
    apply_hadamard,
    apply_one_qubit,
    apply_pauli_string,
    apply_rx,
    apply_rz,
    apply_zz_phase,
    expect_pauli_string,
    expect_x,
    fidelity,
    inner,
    load_amplitudes,
    reduced_density_matrix,
    rx_matrix,
    rz_matrix,
    save_amplitudes,
    von_neumann_entropy,
)


def rand_sv(n, rng) -> StateVector:
    return StateVector(n, oracles.random_state(n, rng))


def test_one_qubit_identity_and_involutions():
    rng = np.random.default_rng(1)
    psi = rand_sv(3, rng)
    ref = psi.amps.copy()
    apply_one_qubit(psi, 1, np.eye(2))
    assert np.allclose(psi.amps, ref)
    apply_hadamard(psi, 2)
    apply_hadamard(psi, 2)
    assert np.allclose(psi.amps, ref, atol=1e-12)
    g = 0.731
    apply_rz(psi, 0, g)
    apply_rz(psi, 0, -g)
    assert np.allclose(psi.amps, ref, atol=1e-12)


def test_one_qubit_rejects_non_unitary():
    psi = StateVector.zero_state(2)
    with pytest.raises(ValueError):
        apply_one_qubit(psi, 0, np.array([[1.0, 0.0], [0.0, 1.0 + 1e-6]]))
    with pytest.raises(ValueError):
        apply_one_qubit(psi, 5, np.eye(2))


@pytest.mark.parametrize("n", [2, 4, 6])
def test_random_circuit_matches_dense_oracle(n):
    """Every specialized kernel agrees with explicit matrix algebra."""
    rng = np.random.default_rng(n)
    psi = rand_sv(n, rng)
    dense = psi.amps.copy()
    for _ in range(40):
        kind = rng.choice(["H", "RX", "RZ", "CNOT", "ZZ"])
        if kind == "CNOT":
            c, t = rng.choice(n, size=2, replace=False)
            apply_cnot(psi, int(c), int(t))
            dense = oracles.cnot_matrix(n, int(c), int(t)) @ dense
        elif kind == "ZZ":
            k = int(rng.integers(1, min(n, 4) + 1))
            qs = tuple(int(q) for q in rng.choice(n, size=k, replace=False))
            th = float(rng.uniform(-2, 2))
            apply_zz_phase(psi, qs, th)
            dense = oracles.zz_phase_matrix(n, qs, th) @ dense
        else:
            q = int(rng.integers(n))
            th = float(rng.uniform(-2, 2))
            if kind == "H":
                apply_hadamard(psi, q)
                dense = oracles.op_on(n, {q: oracles.H}) @ dense
            elif kind == "RX":
                apply_rx(psi, q, th)
                dense = oracles.op_on(n, {q: oracles.rx_mat(th)}) @ dense
            else:
                apply_rz(psi, q, th)
                dense = oracles.op_on(n, {q: oracles.rz_mat(th)}) @ dense
    assert np.allclose(psi.amps, dense, atol=1e-12)


def test_cnot_basics():
    # |q1 q0> = |01>: control 0 set, target 1 flips -> index 3
    psi = StateVector(2, np.array([0, 1, 0, 0], dtype=complex))
    apply_cnot(psi, 0, 1)
    assert np.allclose(psi.amps, [0, 0, 0, 1])
    rng = np.random.default_rng(3)
    psi = rand_sv(5, rng)
    ref = psi.amps.copy()
    apply_cnot(psi, 4, 2)
    apply_cnot(psi, 4, 2)
    assert np.allclose(psi.amps, ref, atol=1e-14)
    with pytest.raises(ValueError):
        apply_cnot(psi, 1, 1)


def test_cnot_conjugation_identity():
    """CNOT maps Z_t -> Z_c Z_t, so conjugating Z x Z leaves Z on the target
    alone; checked as dense algebra and as expectations on random states."""
    n = 2
    cnot = oracles.cnot_matrix(n, 0, 1)
    zz = oracles.pauli_string_matrix(n, {0: "Z", 1: "Z"})
    z_target = oracles.pauli_string_matrix(n, {1: "Z"})
    assert np.allclose(cnot @ zz @ cnot, z_target, atol=1e-14)
    rng = np.random.default_rng(7)
    for _ in range(5):
        psi = rand_sv(2, rng)
        phi = psi.copy()
        apply_cnot(phi, 0, 1)
        lhs = expect_pauli_string(phi, {0: "Z", 1: "Z"})
        rhs = expect_pauli_string(psi, {1: "Z"})
        assert abs(lhs - rhs) < 1e-12


def test_zz_phase_edge_cases():
    rng = np.random.default_rng(11)
    psi = rand_sv(4, rng)
    ref = psi.amps.copy()
    apply_zz_phase(psi, (0, 2), 0.0)
    assert np.allclose(psi.amps, ref)
    with pytest.raises(ValueError):
        apply_zz_phase(psi, (1, 1), 0.3)
    with pytest.raises(ValueError):
        apply_zz_phase(psi, (), 0.3)
    # single qubit: equals RZ(-2 theta) up to a global phase
    th = 0.613
    a = rand_sv(3, rng)
    b = a.copy()
    apply_zz_phase(a, (1,), th)
    apply_rz(b, 1, -2.0 * th)
    assert abs(fidelity(a, b) - 1.0) < 1e-12


def test_zz_phase_equals_plaquette_circuit():
    """The four-qubit diagonal phase matches the CNOT-ladder realization
    (parity into the target, z-rotation, uncompute) up to a global phase."""
    th = 0.83
    n = 4
    u_ladder = np.eye(1 << n, dtype=complex)
    for mat in [
        oracles.cnot_matrix(n, 0, 3),
        oracles.cnot_matrix(n, 1, 3),
        oracles.cnot_matrix(n, 2, 3),
        oracles.op_on(n, {3: oracles.rz_mat(-2.0 * th)}),
        oracles.cnot_matrix(n, 2, 3),
        oracles.cnot_matrix(n, 1, 3),
        oracles.cnot_matrix(n, 0, 3),
    ]:
        u_ladder = mat @ u_ladder
    u_diag = oracles.zz_phase_matrix(n, (0, 1, 2, 3), th)
    # phase-insensitive comparison of the two unitaries
    overlap = abs(np.trace(u_ladder.conj().T @ u_diag)) / (1 << n)
    assert overlap > 1 - 1e-12


def test_expect_pauli_string_reference_values():
    lat = build_lattice(2)
    plus = StateVector.plus_state(8)
    assert abs(expect_pauli_string(plus, {q: "Z" for q in range(8)})) < 1e-12
    assert abs(expect_pauli_string(plus, {q: "X" for q in range(8)}) - 1) < 1e-12
    toric, _ = prepare_toric_code_gs(lat)
    for p in lat.plaquettes:
        assert abs(expect_pauli_string(toric, {q: "Z" for q in p}) - 1) < 1e-12


def test_expect_pauli_string_vs_dense():
    rng = np.random.default_rng(5)
    n = 5
    for _ in range(10):
        psi = rand_sv(n, rng)
        qs = rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False)
        string = {int(q): str(rng.choice(["X", "Y", "Z"])) for q in qs}
        mat = oracles.pauli_string_matrix(n, string)
        want = float(np.real(psi.amps.conj() @ (mat @ psi.amps)))
        assert abs(expect_pauli_string(psi, string) - want) < 1e-12
        assert -1 - 1e-12 <= expect_pauli_string(psi, string) <= 1 + 1e-12


def test_apply_pauli_string_is_involutive_and_matches_dense():
    rng = np.random.default_rng(9)
    n = 4
    psi = rand_sv(n, rng)
    ref = psi.amps.copy()
    string = {0: "X", 1: "Y", 3: "Z"}
    mat = oracles.pauli_string_matrix(n, string)
    apply_pauli_string(psi, string)
    assert np.allclose(psi.amps, mat @ ref, atol=1e-12)
    apply_pauli_string(psi, string)
    assert np.allclose(psi.amps, ref, atol=1e-12)


def test_expect_x_shortcut():
    rng = np.random.default_rng(13)
    psi = rand_sv(5, rng)
    for q in range(5):
        assert abs(expect_x(psi, q) - expect_pauli_string(psi, {q: "X"})) < 1e-13


def test_reduced_density_matrix_and_entropy():
    # product state: rank one, zero entropy
    psi = StateVector.plus_state(4)
    rho = reduced_density_matrix(psi, [1, 2])
    assert abs(von_neumann_entropy(rho)) < 1e-12
    # Bell pair: one side is maximally mixed
    bell = StateVector(2, np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2))
    rho1 = reduced_density_matrix(bell, [0])
    assert np.allclose(rho1.matrix, np.eye(2) / 2, atol=1e-14)
    assert abs(von_neumann_entropy(rho1) - np.log(2)) < 1e-12
    # maximally mixed on k qubits from 2k-qubit pairwise Bells
    two_bells = StateVector(
        4, np.kron(bell.amps, bell.amps)
    )
    rho2 = reduced_density_matrix(two_bells, [0, 2])
    assert abs(von_neumann_entropy(rho2) - 2 * np.log(2)) < 1e-12
    with pytest.raises(ValueError):
        reduced_density_matrix(psi, [])
    with pytest.raises(ValueError):
        reduced_density_matrix(psi, [0, 0])


def test_rdm_keep_order_is_little_endian():
    rng = np.random.default_rng(17)
    psi = rand_sv(3, rng)
    rho = reduced_density_matrix(psi, [2, 0]).matrix
    want = np.zeros((4, 4), dtype=complex)
    for r in range(4):
        for c in range(4):
            # row/col bit 0 holds qubit 2, bit 1 holds qubit 0
            q2r, q0r = r & 1, (r >> 1) & 1
            q2c, q0c = c & 1, (c >> 1) & 1
            for q1 in range(2):
                zr = (q2r << 2) | (q1 << 1) | q0r
                zc = (q2c << 2) | (q1 << 1) | q0c
                want[r, c] += psi.amps[zr] * np.conj(psi.amps[zc])
    assert np.allclose(rho, want, atol=1e-13)


def test_entropy_subadditivity_on_random_states():
    rng = np.random.default_rng(23)
    for _ in range(20):
        psi = rand_sv(6, rng)
        a, b = [0, 1], [2, 3]
        s_ab = von_neumann_entropy(reduced_density_matrix(psi, a + b))
        s_a = von_neumann_entropy(reduced_density_matrix(psi, a))
        s_b = von_neumann_entropy(reduced_density_matrix(psi, b))
        assert s_ab <= s_a + s_b + 1e-9


def test_fidelity_and_inner():
    a = StateVector.zero_state(3)
    assert abs(fidelity(a, a) - 1) < 1e-14
    b = StateVector(3, np.eye(8)[3].astype(complex))
    assert fidelity(a, b) == 0
    with pytest.raises(ValueError):
        inner(a, StateVector.zero_state(2))


def test_norm_preserved_over_thousand_gates():
    rng = np.random.default_rng(31)
    psi = rand_sv(6, rng)
    for _ in range(1000):
        kind = rng.choice(["H", "RX", "RZ", "CNOT"])
        if kind == "CNOT":
            c, t = rng.choice(6, size=2, replace=False)
            apply_cnot(psi, int(c), int(t))
        else:
            q = int(rng.integers(6))
            th = float(rng.uniform(-3, 3))
            {"H": lambda: apply_hadamard(psi, q),
             "RX": lambda: apply_rx(psi, q, th),
             "RZ": lambda: apply_rz(psi, q, th)}[kind]()
    assert abs(psi.norm() - 1.0) < 1e-12


def test_qubit_cap():
    with pytest.raises(ValueError):
        StateVector(27)
    StateVector(4, max_qubits=4)
    with pytest.raises(ValueError):
        StateVector(5, max_qubits=4)


def test_amplitude_dump_roundtrip(tmp_path):
    rng = np.random.default_rng(37)
    psi = rand_sv(4, rng)
    path = tmp_path / "state.z2sv"
    save_amplitudes(psi, path)
    back = load_amplitudes(path)
    assert back.n_qubits == 4
    assert np.array_equal(back.amps, psi.amps)
    with pytest.raises(ValueError):
        (tmp_path / "bad.z2sv").write_bytes(b"XXXX" + b"\x00" * 8)
        load_amplitudes(tmp_path / "bad.z2sv")


def test_gate_matrix_conventions():
    assert np.allclose(rx_matrix(np.pi), [[0, -1j], [-1j, 0]], atol=1e-15)
    assert np.allclose(rz_matrix(np.pi), np.diag([-1j, 1j]), atol=1e-15)
    assert np.allclose(HADAMARD @ HADAMARD, np.eye(2), atol=1e-15)
