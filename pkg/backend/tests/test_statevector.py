import numpy as np
import pytest
from scipy.linalg import expm

from models.errors import InvalidInputError
from services.statevector_service import (
    PAULI,
    CouplingGraph,
    apply_1q,
    apply_cz,
    hamming_weight_distribution,
    outcome_distribution,
    prepare_fiducial,
    rotation,
    rx,
    ry,
    unprepare_fiducial,
    zero_state,
)


@pytest.mark.parametrize("pauli", ["X", "Y", "Z"])
@pytest.mark.parametrize("phi", [0.0, 0.3, -1.7, np.pi, 3 * np.pi])
def test_rotation_matches_matrix_exponential(pauli, phi):
    np.testing.assert_allclose(rotation(pauli, phi), expm(-0.5j * phi * PAULI[pauli]), atol=1e-12)


def test_rx_pi_is_x_up_to_phase():
    np.testing.assert_allclose(rx(np.pi), -1j * PAULI["X"], atol=1e-15)


def test_zero_state_bounds():
    state = zero_state(3)
    assert state.amps[0] == 1 and state.norm() == pytest.approx(1.0)
    with pytest.raises(InvalidInputError):
        zero_state(0)
    with pytest.raises(InvalidInputError):
        zero_state(5, cap=4)


def test_little_endian_qubit_order():
    flipped0 = apply_1q(zero_state(2), 0, PAULI["X"])
    flipped1 = apply_1q(zero_state(2), 1, PAULI["X"])
    assert flipped0.amps[1] == 1
    assert flipped1.amps[2] == 1


def test_apply_1q_rejects_bad_gates():
    with pytest.raises(InvalidInputError):
        apply_1q(zero_state(2), 0, np.array([[1, 1], [0, 1]]))
    with pytest.raises(InvalidInputError):
        apply_1q(zero_state(2), 2, PAULI["X"])
    with pytest.raises(InvalidInputError):
        apply_1q(zero_state(2), 0, np.eye(3))


def test_cz_phases_only_the_11_component():
    state = zero_state(2)
    for q in (0, 1):
        state = apply_1q(state, q, ry(np.pi / 2))
    out = apply_cz(state, 0, 1)
    np.testing.assert_allclose(out.amps, [0.5, 0.5, 0.5, -0.5], atol=1e-15)
    with pytest.raises(InvalidInputError):
        apply_cz(state, 1, 1)


def test_coupling_graph_validation():
    assert CouplingGraph(3, ((2, 1),)).edges == ((1, 2),)
    with pytest.raises(InvalidInputError):
        CouplingGraph(3, ((1, 1),))
    with pytest.raises(InvalidInputError):
        CouplingGraph(3, ((0, 1), (1, 0)))
    with pytest.raises(InvalidInputError):
        CouplingGraph(3, ((0, 3),))


@pytest.mark.parametrize("lam", [0.0, 0.4, np.pi / 2, [0.1, 0.2, 0.3]])
def test_fiducial_matches_gate_by_gate_circuit(path3, lam):
    angles = np.broadcast_to(np.asarray(lam, dtype=float), (3,))
    expected = zero_state(3)
    for k, a in enumerate(angles):
        expected = apply_1q(expected, k, ry(a))
    for a, b in path3.edges:
        expected = apply_cz(expected, a, b)
    np.testing.assert_allclose(prepare_fiducial(path3, lam).amps, expected.amps, atol=1e-14)


def test_unprepare_inverts_prepare(path5):
    state = unprepare_fiducial(prepare_fiducial(path5, 0.7), path5, 0.7)
    np.testing.assert_allclose(state.amps, zero_state(5).amps, atol=1e-14)


def test_lambda_vector_length_checked(path3):
    with pytest.raises(InvalidInputError):
        prepare_fiducial(path3, [0.1, 0.2])


def test_hamming_weight_histogram():
    uniform = np.full(4, 0.25)
    np.testing.assert_allclose(hamming_weight_distribution(uniform, 2), [0.25, 0.5, 0.25])
    p = outcome_distribution(prepare_fiducial(CouplingGraph(2), np.pi / 2))
    np.testing.assert_allclose(p, uniform, atol=1e-15)
    with pytest.raises(InvalidInputError):
        hamming_weight_distribution(np.full(4, 0.3), 2)
