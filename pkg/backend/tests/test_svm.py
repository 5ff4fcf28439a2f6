import numpy as np
import pytest
from scipy.optimize import minimize

from models.errors import DegenerateModelError, InvalidInputError, QpConvergenceError
from models.schemas import KernelConfig, KernelMode
from services.kernel_service import build_kernel_matrix
from services.lce_service import generate_dataset
from services.svm_service import (
    SvmModel,
    compute_bias,
    decision_value,
    decision_values,
    kkt_violation,
    objective_f,
    predict,
    solve_dual,
)


def _random_kernel(m: int, seed: int) -> np.ndarray:
    v = np.random.default_rng(seed).normal(size=(m, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v @ v.T


# ── Analytic instances ───────────────────────────────────────

@pytest.mark.parametrize("C, expected", [(1.0, 1.0), (0.5, 0.75)])
def test_two_orthogonal_points(C, expected):
    y = np.array([1, -1])
    model, report = solve_dual(np.eye(2), y, C)
    assert report.objective == pytest.approx(expected, abs=1e-12)
    assert model.b == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(model.alpha, [C, C], atol=1e-12)
    assert report.converged
    assert report.kkt_violation <= 1e-6
    assert predict(model, np.eye(2)).tolist() == [1, -1]


@pytest.mark.parametrize("k", [0.0, 0.3, 0.5, 0.9])
def test_symmetric_two_point_instance(k):
    K, y = np.array([[1.0, k], [k, 1.0]]), np.array([1, -1])
    model, report = solve_dual(K, y, C=100.0)
    np.testing.assert_allclose(model.alpha, [1 / (1 - k)] * 2, rtol=1e-9)
    assert model.alpha[0] == pytest.approx(model.alpha[1], abs=1e-12)
    assert model.b == pytest.approx(0.0, abs=1e-9)
    assert report.objective == pytest.approx(1 / (1 - k), rel=1e-9)
    assert decision_values(model, K).tolist() == pytest.approx([1.0, -1.0])


def test_objective_values():
    K, y = np.eye(2), np.array([1, -1])
    assert objective_f(np.zeros(2), K, y) == 0.0
    assert objective_f(np.ones(2), K, y) == 1.0
    with pytest.raises(InvalidInputError):
        objective_f(np.ones(3), K, y)


# ── Oracles ──────────────────────────────────────────────────

def _grid_optimum(K: np.ndarray, C: float, step: float = 1e-3) -> float:
    """Brute force for y = (+1, +1, −1): α₃ = α₁ + α₂."""
    a = np.arange(0.0, C + step / 2, step)
    a1, a2 = np.meshgrid(a, a, indexing="ij")
    feasible = a1 + a2 <= C + 1e-12
    ay = np.stack([a1[feasible], a2[feasible], -(a1 + a2)[feasible]], axis=1)
    alpha_sum = 2 * (a1 + a2)[feasible]
    quad = np.einsum("pi,ij,pj->p", ay, K, ay)
    return float(np.max(alpha_sum - 0.5 * quad))


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_matches_brute_force_grid_3x3(seed):
    K = _random_kernel(3, seed)
    y = np.array([1, 1, -1])
    _, report = solve_dual(K, y, 1.0)
    best = _grid_optimum(K, 1.0)
    assert report.objective >= best - 1e-9
    assert report.objective - best <= 2e-3
    assert report.kkt_violation <= 1e-6


@pytest.mark.parametrize("seed", [10, 11, 12])
@pytest.mark.parametrize("C", [0.3, 1.0, 5.0])
def test_matches_slsqp_4x4(seed, C):
    K = _random_kernel(4, seed)
    y = np.array([1, -1, 1, -1])
    Q = np.outer(y, y) * K
    result = minimize(
        lambda a: 0.5 * a @ Q @ a - a.sum(),
        x0=np.full(4, C / 2),
        jac=lambda a: Q @ a - 1.0,
        bounds=[(0.0, C)] * 4,
        constraints=[{"type": "eq", "fun": lambda a: a @ y, "jac": lambda a: y.astype(float)}],
        method="SLSQP",
        options={"ftol": 1e-12, "maxiter": 500},
    )
    model, report = solve_dual(K, y, C)
    assert abs(report.objective - (-result.fun)) <= 2e-3
    assert report.objective >= -result.fun - 1e-6
    assert report.kkt_violation <= 1e-6
    assert kkt_violation(model.alpha, K, y, model.b, C) == pytest.approx(report.kkt_violation)
    assert abs(model.alpha @ y) <= 1e-12
    assert np.all((model.alpha >= 0) & (model.alpha <= C))


def test_objective_history_is_non_decreasing():
    K = _random_kernel(8, 5)
    y = np.array([1, -1] * 4)
    _, report = solve_dual(K, y, 1.0)
    history = np.array(report.objective_history)
    assert np.all(np.diff(history) >= -1e-12)
    assert history[-1] == pytest.approx(report.objective, abs=1e-10)


# ── Degenerate and invalid inputs ────────────────────────────

def test_single_class_gives_constant_classifier():
    model, report = solve_dual(np.eye(3), np.array([-1, -1, -1]))
    assert model.degenerate and report.degenerate
    assert model.support.size == 0
    assert predict(model, np.eye(3)).tolist() == [-1, -1, -1]
    with pytest.raises(DegenerateModelError):
        compute_bias(model, np.eye(3), np.array([-1, -1, -1]))


def test_invalid_problems():
    indefinite = np.array([[1.0, 0.9, 0.1], [0.9, 1.0, 0.9], [0.1, 0.9, 1.0]])
    with pytest.raises(InvalidInputError):
        solve_dual(indefinite, np.array([1, -1, 1]))
    with pytest.raises(InvalidInputError):
        solve_dual(np.array([[1.0, 0.5], [0.2, 1.0]]), np.array([1, -1]))
    with pytest.raises(InvalidInputError):
        solve_dual(np.eye(2), np.array([1, 0]))
    with pytest.raises(InvalidInputError):
        solve_dual(np.eye(2), np.array([1, -1]), C=0.0)
    with pytest.raises(InvalidInputError):
        solve_dual(np.eye(3), np.array([1, -1]))


# ── Prediction ───────────────────────────────────────────────

def test_ties_predict_plus_one():
    model = SvmModel(np.zeros(2), 0.0, 1.0, np.array([1, -1]), np.array([], dtype=int))
    assert predict(model, np.array([[0.3, 0.7]])).tolist() == [1]


def test_decision_value_shapes():
    model, _ = solve_dual(np.eye(2), np.array([1, -1]))
    assert decision_value(model, np.array([1.0, 0.0])) == pytest.approx(1.0)
    np.testing.assert_allclose(decision_values(model, np.eye(2)), [1.0, -1.0])
    with pytest.raises(InvalidInputError):
        decision_values(model, np.ones((1, 3)))
    with pytest.raises(InvalidInputError):
        decision_value(model, np.eye(2))


def test_model_record_preserves_prediction():
    K = _random_kernel(6, 3)
    y = np.array([1, 1, 1, -1, -1, -1])
    model, _ = solve_dual(K, y)
    restored = SvmModel.from_record(model.to_record())
    np.testing.assert_allclose(decision_values(restored, K), decision_values(model, K), atol=1e-15)


def test_iteration_cap_raises_instead_of_returning_a_partial_model():
    K, y = _random_kernel(4, 3), np.array([1, 1, -1, -1])
    with pytest.raises(QpConvergenceError) as err:
        solve_dual(K, y, 1.0, max_iter=0)
    assert err.value.exit_code == 2
    assert err.value.gap > 0


def test_reaching_the_cap_at_the_optimum_still_converges():
    _, report = solve_dual(np.eye(2), np.array([1, -1]), 1.0, max_iter=1)
    assert report.converged and report.iterations == 1


# ── Noisy kernels end to end ─────────────────────────────────

@pytest.fixture
def error_free_split(problem3):
    return problem3, generate_dataset(problem3, 4, 0.0, seed=21), generate_dataset(problem3, 5, 0.0, seed=22)


def test_noisy_shots_entries_shrink_towards_maximally_mixed(error_free_split):
    problem, train, test = error_free_split
    cfg = KernelConfig(mode=KernelMode.NOISY_SHOTS, shots=8192, p_dep=0.1, seed=4, threads=1)
    K = build_kernel_matrix(test, train, problem.graph, cfg)
    same = test.labels[:, None] == train.labels[None, :]
    # error-free same-class entries are exactly 1 before the channel
    np.testing.assert_allclose(K.values[same], 0.9 + 0.1 / 8, atol=0.03)
    assert np.all((K.values >= 0) & (K.values <= 1))
    assert K.provenance.clamped_entries == 0


def test_mitigated_shot_kernel_clamps_and_classifies(error_free_split):
    problem, train, test = error_free_split
    cfg = KernelConfig(mode=KernelMode.MITIGATED, shots=8192, p_dep=0.1, seed=4, threads=1)
    K_test = build_kernel_matrix(test, train, problem.graph, cfg)
    assert np.all((K_test.values >= 0) & (K_test.values <= 1))
    at_bounds = int(np.sum((K_test.values == 0.0) | (K_test.values == 1.0)))
    assert 0 < K_test.provenance.clamped_entries == at_bounds

    K_train = build_kernel_matrix(train, train, problem.graph, cfg)
    model, report = solve_dual(K_train.values, train.labels, 1.0)
    assert report.converged
    assert predict(model, K_train.values).tolist() == train.labels.tolist()
    assert predict(model, K_test.values).tolist() == test.labels.tolist()
