"""
Soft-Margin SVM Dual
maximize  F(α) = Σ αᵢ − ½ ΣΣ αᵢ αⱼ yᵢ yⱼ K(xᵢ, xⱼ)
s.t.      0 ≤ αᵢ ≤ C,  Σ yᵢ αᵢ = 0

Solved with SMO: pairwise coordinate ascent on the maximal violating pair,
internally minimizing f(α) = ½ αᵀQα − eᵀα with Q_ij = yᵢ yⱼ K_ij.
Ties of the decision function (exactly 0) predict +1. Hitting the iteration
cap without closing the KKT gap raises QpConvergenceError.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

import config
from models.errors import DegenerateModelError, InvalidInputError, QpConvergenceError
from models.schemas import QpReport, SvmModelRecord

logger = logging.getLogger(__name__)

PSD_CHECK_TOL = 1e-8
TAU = 1e-12


@dataclass
class SvmModel:
    alpha: np.ndarray
    b: float
    C: float
    y: np.ndarray
    support: np.ndarray
    kernel_checksum: Optional[str] = None
    dataset_checksum: Optional[str] = None
    degenerate: bool = False

    def to_record(self) -> SvmModelRecord:
        return SvmModelRecord(
            alpha=[float(a) for a in self.alpha],
            b=float(self.b),
            C=float(self.C),
            labels=[int(v) for v in self.y],
            support=[int(i) for i in self.support],
            kernel_checksum=self.kernel_checksum,
            dataset_checksum=self.dataset_checksum,
            degenerate=self.degenerate,
        )

    @classmethod
    def from_record(cls, record: SvmModelRecord) -> "SvmModel":
        return cls(
            alpha=np.array(record.alpha, dtype=float),
            b=record.b,
            C=record.C,
            y=np.array(record.labels, dtype=int),
            support=np.array(record.support, dtype=int),
            kernel_checksum=record.kernel_checksum,
            dataset_checksum=record.dataset_checksum,
            degenerate=record.degenerate,
        )


def _check_problem(K: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    K = np.asarray(K, dtype=float)
    y = np.asarray(y, dtype=int)
    if K.ndim != 2 or K.shape[0] != K.shape[1] or K.shape[0] != y.shape[0]:
        raise InvalidInputError(f"kernel {K.shape} does not match {y.shape[0]} labels")
    if not np.all(np.isin(y, (-1, 1))):
        raise InvalidInputError("labels must be ±1")
    return K, y


def _support(alpha: np.ndarray) -> np.ndarray:
    return np.flatnonzero(alpha > config.SUPPORT_TOL)


# ── Objective ────────────────────────────────────────────────

def objective_f(alpha: np.ndarray, K: np.ndarray, y: np.ndarray) -> float:
    K, y = _check_problem(K, y)
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != y.shape:
        raise InvalidInputError(f"α has shape {alpha.shape}, expected {y.shape}")
    ay = alpha * y
    return float(alpha.sum() - 0.5 * ay @ K @ ay)


# ── Solver ───────────────────────────────────────────────────

def _select_pair(alpha: np.ndarray, grad: np.ndarray, y: np.ndarray, C: float):
    """Maximal violating pair; returns (i, j, gap)."""
    score = -y * grad
    up = ((y == 1) & (alpha < C)) | ((y == -1) & (alpha > 0))
    low = ((y == 1) & (alpha > 0)) | ((y == -1) & (alpha < C))
    if not up.any() or not low.any():
        return -1, -1, 0.0
    i = int(np.flatnonzero(up)[np.argmax(score[up])])
    j = int(np.flatnonzero(low)[np.argmin(score[low])])
    return i, j, float(score[i] - score[j])


def _pair_update(ai: float, aj: float, gi: float, gj: float, Q: np.ndarray,
                 i: int, j: int, same_sign: bool, C: float) -> tuple[float, float]:
    if not same_sign:
        quad = Q[i, i] + Q[j, j] + 2 * Q[i, j]
        delta = (-gi - gj) / max(quad, TAU)
        diff = ai - aj
        ai, aj = ai + delta, aj + delta
        if diff > 0:
            if aj < 0:
                aj, ai = 0.0, diff
        elif ai < 0:
            ai, aj = 0.0, -diff
        if diff > 0:
            if ai > C:
                ai, aj = C, C - diff
        elif aj > C:
            aj, ai = C, C + diff
    else:
        quad = Q[i, i] + Q[j, j] - 2 * Q[i, j]
        delta = (gi - gj) / max(quad, TAU)
        total = ai + aj
        ai, aj = ai - delta, aj + delta
        if total > C:
            if ai > C:
                ai, aj = C, total - C
        elif aj < 0:
            aj, ai = 0.0, total
        if total > C:
            if aj > C:
                aj, ai = C, total - C
        elif ai < 0:
            ai, aj = 0.0, total
    return ai, aj


def kkt_violation(alpha: np.ndarray, K: np.ndarray, y: np.ndarray, b: float, C: float) -> float:
    """Largest violation of the margin conditions y_i d(x_i) vs 1 at the bounds."""
    r = y * (K @ (alpha * y) + b) - 1.0
    at_zero = alpha <= config.SUPPORT_TOL
    at_box = alpha >= C - config.SUPPORT_TOL
    free = ~at_zero & ~at_box
    viol = np.zeros_like(r)
    viol[at_zero] = np.maximum(0.0, -r[at_zero])
    viol[at_box] = np.maximum(0.0, r[at_box])
    viol[free] = np.abs(r[free])
    return float(viol.max()) if viol.size else 0.0


def solve_dual(
    K: np.ndarray,
    y: np.ndarray,
    C: float = config.DEFAULT_C,
    tol: float = config.SVM_TOL,
    max_iter: Optional[int] = None,
) -> tuple[SvmModel, QpReport]:
    if max_iter is None:
        max_iter = config.SVM_MAX_ITER
    K, y = _check_problem(K, y)
    if C <= 0:
        raise InvalidInputError(f"C must be > 0, got {C}")
    m = y.shape[0]

    if np.unique(y).size < 2:
        logger.warning("Single-class training labels (%+d); returning constant classifier", y[0])
        model = SvmModel(np.zeros(m), float(y[0]), C, y, np.array([], dtype=int), degenerate=True)
        return model, QpReport(objective=0.0, iterations=0, kkt_violation=0.0,
                               converged=True, degenerate=True)

    if not np.allclose(K, K.T, atol=1e-10):
        raise InvalidInputError("kernel matrix is not symmetric; symmetrize and repair first")
    min_eig = float(np.linalg.eigvalsh(K).min())
    if min_eig < -PSD_CHECK_TOL:
        raise InvalidInputError(f"kernel matrix not PSD (min eigenvalue {min_eig:.3e}); repair first")

    Q = np.outer(y, y) * K
    alpha = np.zeros(m)
    grad = -np.ones(m)
    history = [0.0]
    iterations = 0
    converged = False

    while iterations < max_iter:
        i, j, gap = _select_pair(alpha, grad, y, C)
        if i < 0 or gap <= tol:
            converged = True
            break
        old_i, old_j = alpha[i], alpha[j]
        alpha[i], alpha[j] = _pair_update(old_i, old_j, grad[i], grad[j], Q, i, j, y[i] == y[j], C)
        d_i, d_j = alpha[i] - old_i, alpha[j] - old_j
        grad += Q[:, i] * d_i + Q[:, j] * d_j
        iterations += 1
        history.append(float(0.5 * np.dot(alpha, 1.0 - grad)))

    if not converged:
        i, _, gap = _select_pair(alpha, grad, y, C)
        converged = i < 0 or gap <= tol
    if not converged:
        logger.error("SMO hit the iteration cap (%d) with gap %.3e", max_iter, gap)
        raise QpConvergenceError(max_iter, gap)

    model = SvmModel(alpha, 0.0, C, y, _support(alpha))
    model.b = compute_bias(model, K, y)
    report = QpReport(
        objective=objective_f(alpha, K, y),
        iterations=iterations,
        kkt_violation=kkt_violation(alpha, K, y, model.b, C),
        converged=converged,
        objective_history=history,
    )
    logger.debug("SMO: %d iterations, F*=%.6f, %d SVs", iterations, report.objective, model.support.size)
    return model, report


def compute_bias(model: SvmModel, K: np.ndarray, y: np.ndarray) -> float:
    """Mean over free SVs of y_i − Σ_j y_j α_j K_ji; midpoint of the KKT interval otherwise."""
    K, y = _check_problem(K, y)
    if model.degenerate or model.support.size == 0:
        raise DegenerateModelError("model has no support vectors")
    alpha, C = model.alpha, model.C
    contrib = K @ (alpha * y)
    free = (alpha > config.SUPPORT_TOL) & (alpha < C - config.SUPPORT_TOL)
    if free.any():
        return float(np.mean(y[free] - contrib[free]))

    # b must satisfy y_i (contrib_i + b) ≥ 1 at α=0 and ≤ 1 at α=C
    target = y - contrib
    at_zero = alpha <= config.SUPPORT_TOL
    lower = np.concatenate([target[at_zero & (y == 1)], target[~at_zero & (y == -1)]])
    upper = np.concatenate([target[at_zero & (y == -1)], target[~at_zero & (y == 1)]])
    lo = lower.max() if lower.size else None
    hi = upper.min() if upper.size else None
    if lo is None and hi is None:
        return 0.0
    if lo is None:
        return float(hi)
    if hi is None:
        return float(lo)
    return float((lo + hi) / 2)


# ── Prediction ───────────────────────────────────────────────

def decision_values(model: SvmModel, K_rows: np.ndarray) -> np.ndarray:
    K_rows = np.atleast_2d(np.asarray(K_rows, dtype=float))
    if K_rows.shape[1] != model.y.shape[0]:
        raise InvalidInputError(f"kernel rows have {K_rows.shape[1]} columns, model has {model.y.shape[0]} points")
    sv = model.support
    return K_rows[:, sv] @ (model.alpha[sv] * model.y[sv]) + model.b


def decision_value(model: SvmModel, k_row: np.ndarray) -> float:
    k_row = np.asarray(k_row, dtype=float)
    if k_row.ndim != 1:
        raise InvalidInputError("decision_value takes a single kernel row")
    return float(decision_values(model, k_row)[0])


def predict(model: SvmModel, K_test: np.ndarray) -> np.ndarray:
    return np.where(decision_values(model, K_test) >= 0, 1, -1)
