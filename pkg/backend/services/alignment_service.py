"""
Quantum Kernel Alignment
min_λ max_α F(α, λ) by SPSA over the fiducial parameters λ:

  for i = 0 … P−1:
      Δ ∈ {−1, +1}^q,  λ± = λ_i ± c_i Δ            (wrapped to [0, 2π))
      F± = max_α F(α, λ±)   via the SVM dual on K(λ±)
      λ_{i+1} = λ_i − (a_i / 2c_i) (F+ − F−) Δ      (wrapped)

with a_i = a/(i+1+A)^σ and c_i = c/(i+1)^γ. The trace holds one record per
λ_0 … λ_P, each with the cost at that λ, so the last record is the cost of
the aligned kernel K(λ_P).
Unweighted and centered alignment plug into the same loop as costs to
minimize (their negated scores).
"""

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from joblib import Parallel, delayed

from models.errors import AlignmentError, CokernError, InvalidInputError
from models.schemas import AlignmentObjective, KernelConfig, SpsaConfig, TraceRecord
from services import svm_service
from services.kernel_service import KernelMatrix, build_kernel_matrix
from services.lce_service import Dataset
from services.statevector_service import CouplingGraph

logger = logging.getLogger(__name__)

TWO_PI = 2 * math.pi


@dataclass
class AlignmentTrace:
    records: list[TraceRecord] = field(default_factory=list)
    lam_star: Optional[np.ndarray] = None
    model: Optional[svm_service.SvmModel] = None
    kernel: Optional[KernelMatrix] = None

    @property
    def costs(self) -> list[float]:
        return [r.cost for r in self.records]


# ── SPSA Primitives ──────────────────────────────────────────

def spsa_gains(i: int, cfg: SpsaConfig) -> tuple[float, float]:
    if i < 0:
        raise InvalidInputError(f"step index must be >= 0, got {i}")
    a_i = cfg.a / (i + 1 + cfg.A) ** cfg.sigma
    c_i = cfg.c / (i + 1) ** cfg.gamma
    return a_i, c_i


def wrap_angles(lam) -> np.ndarray:
    wrapped = np.mod(np.asarray(lam, dtype=float), TWO_PI)
    # np.mod rounds tiny negatives up to exactly 2π
    return np.where(wrapped >= TWO_PI, 0.0, wrapped)


def spsa_perturb(lam, c_i: float, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    delta = rng.choice(np.array([-1, 1]), size=lam.shape)
    return wrap_angles(lam + c_i * delta), wrap_angles(lam - c_i * delta), delta


# ── Alignment Scores ─────────────────────────────────────────

def _check_square(K: np.ndarray, y: Optional[np.ndarray] = None) -> np.ndarray:
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise InvalidInputError(f"expected a square kernel, got {K.shape}")
    if y is not None and np.asarray(y).shape != (K.shape[0],):
        raise InvalidInputError(f"{np.asarray(y).shape} labels for a {K.shape} kernel")
    return K


def unweighted_alignment(K: np.ndarray, y: np.ndarray) -> float:
    """Σ_ij K_ij y_i y_j (proportionality constant 1)."""
    K = _check_square(K, y)
    y = np.asarray(y, dtype=float)
    return float(y @ K @ y)


def center_kernel(K: np.ndarray) -> np.ndarray:
    """[I − 11ᵀ/m] K [I − 11ᵀ/m]."""
    K = _check_square(K)
    m = K.shape[0]
    H = np.eye(m) - np.ones((m, m)) / m
    return H @ K @ H


def centered_alignment(K: np.ndarray, y: np.ndarray) -> float:
    """⟨K_c, yyᵀ⟩_F / (‖K_c‖_F ‖yyᵀ‖_F); 0 for a kernel that centers to zero."""
    Kc = center_kernel(_check_square(K, y))
    y = np.asarray(y, dtype=float)
    target = np.outer(y, y)
    norm = np.linalg.norm(Kc) * np.linalg.norm(target)
    return float(np.sum(Kc * target) / norm) if norm > 0 else 0.0


def alignment_cost(K: np.ndarray, y: np.ndarray, objective: AlignmentObjective, C: float) -> float:
    """Quantity the SPSA loop minimizes."""
    if objective == AlignmentObjective.WEIGHTED:
        _, report = svm_service.solve_dual(K, y, C)
        return report.objective
    if objective == AlignmentObjective.UNWEIGHTED:
        return -unweighted_alignment(K, y)
    return -centered_alignment(K, y)


# ── Alignment Loop ───────────────────────────────────────────

def _lam_value(lam: np.ndarray) -> Union[float, list[float]]:
    return float(lam[0]) if lam.size == 1 else [float(v) for v in lam]


def _kernel_at(train: Dataset, graph: CouplingGraph, kcfg: KernelConfig, lam: np.ndarray) -> KernelMatrix:
    return build_kernel_matrix(train, train, graph, kcfg.model_copy(update={"lam": _lam_value(lam)}))


def _test_accuracy(model: svm_service.SvmModel, train: Dataset, test: Dataset, graph: CouplingGraph,
                   kcfg: KernelConfig, lam: np.ndarray) -> float:
    K_test = build_kernel_matrix(test, train, graph, kcfg.model_copy(update={"lam": _lam_value(lam)}))
    return float(np.mean(svm_service.predict(model, K_test.values) == test.labels))


def _fit_at(train: Dataset, graph: CouplingGraph, kcfg: KernelConfig, lam: np.ndarray,
            objective: AlignmentObjective, C: float):
    """(kernel, classifier, cost) at the unperturbed λ."""
    K = _kernel_at(train, graph, kcfg, lam)
    model, report = svm_service.solve_dual(K.values, train.labels, C)
    cost = report.objective if objective == AlignmentObjective.WEIGHTED \
        else alignment_cost(K.values, train.labels, objective, C)
    return K, model, cost


def align(
    train: Dataset,
    graph: CouplingGraph,
    kcfg: KernelConfig,
    scfg: SpsaConfig,
    C: float,
    test: Optional[Dataset] = None,
    on_record: Optional[Callable[[TraceRecord], None]] = None,
) -> AlignmentTrace:
    """Run P SPSA steps from λ₀ and train the final classifier on K(λ*).

    Record i holds the cost at λ_i itself; f_plus and f_minus are the costs at
    the perturbed points that drive the update. With a test set, the classifier
    at λ_i is scored on every odd step and on λ*. Kernel, QP and linear algebra
    failures raise AlignmentError carrying the partial trace.
    """
    if len(set(train.labels.tolist())) < 2:
        raise InvalidInputError("alignment needs both classes in the training set")
    rng = np.random.default_rng(scfg.seed)
    trace = AlignmentTrace()
    lam = wrap_angles(np.atleast_1d(np.asarray(scfg.lam0, dtype=float)))
    y = train.labels

    def emit(record: TraceRecord):
        trace.records.append(record)
        if on_record is not None:
            on_record(record)

    try:
        for i in range(scfg.steps):
            started = time.time()
            a_i, c_i = spsa_gains(i, scfg)
            lam_plus, lam_minus, delta = spsa_perturb(lam, c_i, rng)
            if kcfg.threads > 1:
                k_plus, k_minus = Parallel(n_jobs=2, prefer="threads")(
                    delayed(_kernel_at)(train, graph, kcfg, l) for l in (lam_plus, lam_minus)
                )
            else:
                k_plus = _kernel_at(train, graph, kcfg, lam_plus)
                k_minus = _kernel_at(train, graph, kcfg, lam_minus)
            f_plus = alignment_cost(k_plus.values, y, scfg.objective, C)
            f_minus = alignment_cost(k_minus.values, y, scfg.objective, C)

            _, model, cost = _fit_at(train, graph, kcfg, lam, scfg.objective, C)
            accuracy = None
            if test is not None and i % 2 == 1:
                accuracy = _test_accuracy(model, train, test, graph, kcfg, lam)

            emit(TraceRecord(
                step=i,
                lam=lam.tolist(),
                lam_plus=lam_plus.tolist(),
                lam_minus=lam_minus.tolist(),
                delta=[int(d) for d in delta],
                f_plus=f_plus,
                f_minus=f_minus,
                cost=cost,
                a_i=a_i,
                c_i=c_i,
                wall_time=time.time() - started,
                test_accuracy=accuracy,
            ))
            lam = wrap_angles(lam - (a_i / (2 * c_i)) * (f_plus - f_minus) * delta)
            logger.info("SPSA step %d: cost %.5f, F+=%.5f F-=%.5f -> λ=%s",
                        i, cost, f_plus, f_minus, lam.round(5).tolist())

        started = time.time()
        K_final, model, cost = _fit_at(train, graph, kcfg, lam, scfg.objective, C)
        accuracy = None
        if test is not None:
            accuracy = _test_accuracy(model, train, test, graph, kcfg, lam)
        emit(TraceRecord(
            step=scfg.steps,
            lam=lam.tolist(),
            cost=cost,
            wall_time=time.time() - started,
            test_accuracy=accuracy,
        ))
    except (CokernError, np.linalg.LinAlgError, FloatingPointError) as e:
        raise AlignmentError(f"alignment failed at step {len(trace.records)}: {e}", trace) from e

    trace.lam_star = lam
    trace.model = model
    trace.kernel = K_final
    logger.info("Alignment done: λ*=%s, final cost %.5f", lam.round(5).tolist(), cost)
    return trace
