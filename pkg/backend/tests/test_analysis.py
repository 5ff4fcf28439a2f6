import math

import numpy as np
import pytest

from models.errors import InvalidInputError
from models.schemas import KernelConfig
from services import svm_service
from services.analysis_service import (
    centroid_hs_distance,
    classification_metrics,
    decision_report,
    geometry_metrics,
    hamming_comparison,
    interlabel_variance,
    metrics_report,
    total_variation_distance,
)
from services.group_service import datum_to_unitaries
from services.kernel_service import build_kernel_matrix, fiducial_state, kernel_entry_exact
from services.lce_service import generate_dataset, single_qubit_coset_example


def _state_kernel(states: np.ndarray) -> np.ndarray:
    return np.abs(states.conj() @ states.T) ** 2


# ── Classification ───────────────────────────────────────────

def test_classification_metrics():
    m = classification_metrics([1, -1, 1, 1], [1, -1, -1, 1], [0.5, -0.2, 0.1, 2.0])
    assert m.accuracy == 0.75
    assert m.misclassified == [2]
    with pytest.raises(InvalidInputError):
        classification_metrics([1, -1], [1], [0.3, 0.1])


def test_metrics_report_with_geometry():
    y = np.array([1, -1])
    model, _ = svm_service.solve_dual(np.eye(2), y)
    report = metrics_report(model, np.eye(2), y, K_train=np.eye(2))
    assert report.accuracy == 1.0
    assert report.misclassified == []
    assert report.decision_values == pytest.approx([1.0, -1.0])
    assert report.hs_distance == pytest.approx(2.0)
    assert report.variance_plus == pytest.approx(0.0)

    flipped = metrics_report(model, np.eye(2), [1, 1])
    assert flipped.accuracy == 0.5
    assert flipped.misclassified == [1]
    assert flipped.hs_distance is None


def test_decision_report_rows():
    y = np.array([1, -1])
    model, _ = svm_service.solve_dual(np.eye(2), y)
    rows = decision_report(model, np.array([[0.2, 0.9]]), [-1])
    assert rows[0]["label"] == -1
    assert rows[0]["decision_value"] == pytest.approx(-0.7)
    assert rows[0]["support_mask"] == [True, True]
    assert rows[0]["kernel_row"] == [0.2, 0.9]


# ── Geometry ─────────────────────────────────────────────────

def test_single_qubit_coset_geometry():
    example = single_qubit_coset_example()
    plus_state = np.array([1.0, 1.0]) / math.sqrt(2)
    states = np.array([u @ plus_state for u in example[1] + example[-1]])
    y = np.array([1, 1, 1, -1, -1, -1])
    K = _state_kernel(states)
    np.testing.assert_allclose(K[:3, 3:], 0.5, atol=1e-12)
    geometry = geometry_metrics(K, y)
    assert geometry.hs_distance == pytest.approx(1.0, abs=1e-12)
    assert geometry.variance_plus == pytest.approx(0.0, abs=1e-12)
    assert geometry.variance_minus == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("dim", [2, 4])
def test_geometry_matches_dense_density_matrices(rng, dim):
    raw = rng.normal(size=(5, dim)) + 1j * rng.normal(size=(5, dim))
    states = raw / np.linalg.norm(raw, axis=1, keepdims=True)
    y = np.array([1, 1, 1, -1, -1])
    rhos = np.einsum("ia,ib->iab", states, states.conj())
    centroid_plus = rhos[y == 1].mean(axis=0)
    centroid_minus = rhos[y == -1].mean(axis=0)

    K = _state_kernel(states)
    expected_distance = np.linalg.norm(centroid_plus - centroid_minus) ** 2
    assert centroid_hs_distance(K, y) == pytest.approx(expected_distance, abs=1e-12)

    expected_spread = np.mean([np.linalg.norm(r - centroid_plus) ** 2 for r in rhos[y == 1]])
    assert interlabel_variance(K, y, 1) == pytest.approx(expected_spread, abs=1e-12)


def test_geometry_needs_both_classes():
    with pytest.raises(InvalidInputError):
        centroid_hs_distance(np.eye(2), np.array([1, 1]))
    with pytest.raises(InvalidInputError):
        interlabel_variance(np.eye(3), np.array([1, -1]), 1)


def test_optimal_objective_on_error_free_data(problem3):
    """Within-class entries are 1 and cross entries share one value κ."""
    train = generate_dataset(problem3, 3, 0.0, seed=11)
    K = build_kernel_matrix(train, train, problem3.graph, KernelConfig(threads=1)).values
    minus, plus = train.labels == -1, train.labels == 1
    np.testing.assert_allclose(K[np.ix_(plus, plus)], 1.0, atol=1e-9)
    np.testing.assert_allclose(K[np.ix_(minus, minus)], 1.0, atol=1e-9)

    kappa = kernel_entry_exact(
        datum_to_unitaries(problem3.c_plus),
        datum_to_unitaries(problem3.c_minus),
        fiducial_state(problem3.graph, math.pi / 2),
    )
    np.testing.assert_allclose(K[np.ix_(plus, minus)], kappa, atol=1e-9)

    C = 1.0
    best_total = min(1.0 / (1.0 - kappa), 3 * C)
    expected = 2 * best_total - best_total ** 2 * (1.0 - kappa)
    _, report = svm_service.solve_dual(K, train.labels, C)
    assert report.objective == pytest.approx(expected, abs=1e-6)


# ── Distributions ────────────────────────────────────────────

def test_total_variation_distance():
    assert total_variation_distance([1.0, 0.0], [0.0, 1.0]) == 1.0
    assert total_variation_distance([0.5, 0.5], [0.5, 0.5]) == 0.0
    assert total_variation_distance([0.7, 0.2, 0.1], [0.5, 0.3, 0.2]) == pytest.approx(0.2)
    with pytest.raises(InvalidInputError):
        total_variation_distance([0.5, 0.5], [1.0, 0.0, 0.0])
    with pytest.raises(InvalidInputError):
        total_variation_distance([0.5, 0.6], [0.5, 0.5])


def test_total_variation_distance_is_a_metric(rng):
    P, Q, R = (rng.dirichlet(np.ones(8)) for _ in range(3))
    assert total_variation_distance(P, Q) == pytest.approx(total_variation_distance(Q, P))
    assert total_variation_distance(P, R) <= total_variation_distance(P, Q) + total_variation_distance(Q, R) + 1e-15
    assert 0.0 <= total_variation_distance(P, Q) <= 1.0


def test_hamming_comparison(problem3):
    data = generate_dataset(problem3, 1, 0.01, seed=2)
    x, z = datum_to_unitaries(data.thetas[0]), datum_to_unitaries(data.thetas[1])
    result = hamming_comparison(x, z, problem3.graph, math.pi / 2, p_dep=0.1, stretches=[1.0, 1.3])

    exact = kernel_entry_exact(x, z, fiducial_state(problem3.graph, math.pi / 2))
    assert result["kernel_value"] == pytest.approx(exact, abs=1e-12)
    assert result["hamming"]["ideal"][0] == pytest.approx(exact, abs=1e-12)
    assert result["weights"] == [0, 1, 2, 3]
    assert set(result["hamming"]) == {"ideal", "c=1", "c=1.3", "mitigated"}
    for hist in result["hamming"].values():
        assert sum(hist) == pytest.approx(1.0)

    assert result["tvd"]["ideal"] == 0.0
    assert result["tvd"]["c=1"] > 0.0
    assert result["tvd"]["c=1.3"] > result["tvd"]["c=1"]
    assert result["tvd"]["mitigated"] == pytest.approx(0.0, abs=1e-12)


def test_hamming_comparison_with_shots(problem3, rng):
    data = generate_dataset(problem3, 1, 0.01, seed=2)
    x, z = datum_to_unitaries(data.thetas[0]), datum_to_unitaries(data.thetas[1])
    result = hamming_comparison(x, z, problem3.graph, math.pi / 2, 0.05, [1.0], shots=1000, rng=rng)
    assert "mitigated" not in result["hamming"]
    assert 0.0 <= result["tvd"]["c=1"] <= 1.0
    with pytest.raises(InvalidInputError):
        hamming_comparison(x, z, problem3.graph, math.pi / 2, 0.9, [1.0, 1.3])
