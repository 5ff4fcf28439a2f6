"""
Diagnostics
- classification metrics and per-point decision reports
- feature-space geometry from kernel entries alone: squared Hilbert–Schmidt
  distance between class centroids and per-class spread
- total variation distance and Hamming-weight comparisons of kernel-circuit
  outcome distributions (ideal, per noise stretch, extrapolated)
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from models.errors import InvalidInputError
from models.schemas import InvarianceSide, MetricsReport
from services import svm_service
from services.kernel_service import zne_intercept, kernel_circuit_state
from services.statevector_service import CouplingGraph, Gate1Q, hamming_weight_distribution, outcome_distribution

logger = logging.getLogger(__name__)


@dataclass
class ClassMetrics:
    accuracy: float
    decision_values: np.ndarray
    misclassified: list[int] = field(default_factory=list)


@dataclass
class GeometryMetrics:
    hs_distance: float
    variance_plus: float
    variance_minus: float


# ── Classification ───────────────────────────────────────────

def classification_metrics(pred_labels, true_labels, decision_values) -> ClassMetrics:
    pred = np.asarray(pred_labels, dtype=int)
    true = np.asarray(true_labels, dtype=int)
    values = np.asarray(decision_values, dtype=float)
    if not pred.shape == true.shape == values.shape:
        raise InvalidInputError(f"length mismatch: {pred.shape}, {true.shape}, {values.shape}")
    wrong = np.flatnonzero(pred != true)
    accuracy = (pred.size - wrong.size) / pred.size if pred.size else 0.0
    return ClassMetrics(accuracy, values, wrong.tolist())


def decision_report(model: svm_service.SvmModel, K_test: np.ndarray, true_labels) -> list[dict]:
    """Per test point: decision value, prediction, and the kernel row against the training set."""
    values = svm_service.decision_values(model, K_test)
    sv_mask = np.zeros(model.y.shape[0], dtype=bool)
    sv_mask[model.support] = True
    rows = []
    for idx, (d, row, y) in enumerate(zip(values, np.atleast_2d(K_test), true_labels)):
        rows.append({
            "index": idx,
            "decision_value": float(d),
            "label": 1 if d >= 0 else -1,
            "true_label": int(y),
            "kernel_row": [float(v) for v in row],
            "support_mask": sv_mask.tolist(),
        })
    return rows


# ── Geometry ─────────────────────────────────────────────────

def _class_blocks(K: np.ndarray, y: np.ndarray, label: int) -> np.ndarray:
    K = np.asarray(K, dtype=float)
    y = np.asarray(y, dtype=int)
    if K.ndim != 2 or K.shape[0] != K.shape[1] or K.shape[0] != y.shape[0]:
        raise InvalidInputError(f"kernel {K.shape} does not match {y.shape[0]} labels")
    idx = np.flatnonzero(y == label)
    if idx.size == 0:
        raise InvalidInputError(f"class {label:+d} missing")
    return idx


def centroid_hs_distance(K: np.ndarray, y: np.ndarray) -> float:
    """‖Φ₊ − Φ₋‖²_HS expanded in kernel entries (class sizes may differ)."""
    K = np.asarray(K, dtype=float)
    plus = _class_blocks(K, y, 1)
    minus = _class_blocks(K, y, -1)
    within_plus = K[np.ix_(plus, plus)].sum() / plus.size ** 2
    within_minus = K[np.ix_(minus, minus)].sum() / minus.size ** 2
    cross = K[np.ix_(plus, minus)].sum() / (plus.size * minus.size)
    return float(within_plus + within_minus - 2 * cross)


def interlabel_variance(K: np.ndarray, y: np.ndarray, label: int) -> float:
    """Σ_{i∈class} ‖φ(x_i) − Φ_class‖²_HS / M."""
    K = np.asarray(K, dtype=float)
    idx = _class_blocks(K, y, label)
    block = K[np.ix_(idx, idx)]
    return float(np.trace(block) / idx.size - block.sum() / idx.size ** 2)


def geometry_metrics(K: np.ndarray, y: np.ndarray) -> GeometryMetrics:
    return GeometryMetrics(
        hs_distance=centroid_hs_distance(K, y),
        variance_plus=interlabel_variance(K, y, 1),
        variance_minus=interlabel_variance(K, y, -1),
    )


# ── Distributions ────────────────────────────────────────────

def total_variation_distance(P, Q) -> float:
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    if P.shape != Q.shape:
        raise InvalidInputError(f"distribution shapes differ: {P.shape} vs {Q.shape}")
    for dist in (P, Q):
        if abs(dist.sum() - 1.0) > 1e-6:
            raise InvalidInputError(f"distribution sums to {dist.sum()}, expected 1")
    return float(0.5 * np.abs(P - Q).sum())


def _depolarize(P: np.ndarray, rate: float) -> np.ndarray:
    return (1.0 - rate) * P + rate / P.size


def hamming_comparison(
    x_gates: Sequence[Gate1Q],
    z_gates: Sequence[Gate1Q],
    graph: CouplingGraph,
    lam: Union[float, Sequence[float]],
    p_dep: float,
    stretches: Sequence[float],
    side: InvarianceSide = InvarianceSide.LEFT,
    shots: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> dict:
    """Outcome distributions of one kernel circuit: ideal, per stretch, and extrapolated.

    Returns Hamming-weight histograms per series and each series' TVD to the ideal.
    """
    n = graph.n
    ideal = outcome_distribution(kernel_circuit_state(x_gates, z_gates, graph, lam, side))
    rng = rng or np.random.default_rng(0)
    series: dict[str, np.ndarray] = {"ideal": ideal}
    measured = []
    for c in stretches:
        if not 0 <= p_dep * c < 1:
            raise InvalidInputError(f"effective noise rate {p_dep * c} outside [0, 1)")
        dist = _depolarize(ideal, p_dep * c)
        if shots:
            dist = rng.multinomial(shots, dist / dist.sum()) / shots
        series[f"c={c:g}"] = dist
        measured.append(dist)
    if len(stretches) >= 2:
        mitigated = np.array([
            zne_intercept([m[k] for m in measured], stretches) for k in range(ideal.size)
        ])
        mitigated = np.clip(mitigated, 0.0, None)
        series["mitigated"] = mitigated / mitigated.sum()

    return {
        "weights": list(range(n + 1)),
        "hamming": {name: hamming_weight_distribution(dist, n).tolist() for name, dist in series.items()},
        "tvd": {name: total_variation_distance(dist, ideal) for name, dist in series.items()},
        "kernel_value": float(ideal[0]),
    }


def metrics_report(
    model: svm_service.SvmModel,
    K_test: np.ndarray,
    true_labels,
    K_train: Optional[np.ndarray] = None,
) -> MetricsReport:
    values = svm_service.decision_values(model, K_test)
    pred = np.where(values >= 0, 1, -1)
    metrics = classification_metrics(pred, true_labels, values)
    report = MetricsReport(
        accuracy=metrics.accuracy,
        decision_values=[float(v) for v in values],
        misclassified=metrics.misclassified,
    )
    if K_train is not None:
        geometry = geometry_metrics(K_train, model.y)
        report.hs_distance = geometry.hs_distance
        report.variance_plus = geometry.variance_plus
        report.variance_minus = geometry.variance_minus
    return report
