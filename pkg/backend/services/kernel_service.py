"""
Covariant Kernel Engine
K(x, z) = |⟨ψ_λ| D_x† D_z |ψ_λ⟩|² (left-invariant) or |⟨ψ_λ| D_x D_z† |ψ_λ⟩|² (right).

Entry pipeline: exact → [depolarizing noise per stretch] → [shots per stretch] → [ZNE].
- exact        exact fidelity
- shots        Binomial(R, K)/R
- noisy-shots  noise at the first stretch, then shots (R=None: infinite shots)
- mitigated    noise + shots at every stretch, first-order extrapolation to c=0

Training matrices (rows == cols) are evaluated on the upper triangle, mirrored,
given a unit diagonal and PSD-repaired. Every entry draws from its own
generator seeded by (seed, i, j), so results never depend on thread scheduling.
"""

import logging
import time
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence, Union

import numpy as np
from joblib import Parallel, delayed

from models.errors import InvalidInputError, NumericalError
from models.schemas import InvarianceSide, KernelConfig, KernelMode, KernelProvenance, PsdPolicy
from services.group_service import datum_to_unitaries
from services.lce_service import Dataset
from services.statevector_service import (
    CouplingGraph,
    Gate1Q,
    QuantumState,
    apply_product_gates,
    prepare_fiducial,
    unprepare_fiducial,
)

logger = logging.getLogger(__name__)

PSD_TOL = 1e-10


@dataclass
class KernelMatrix:
    values: np.ndarray
    provenance: KernelProvenance

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def is_square(self) -> bool:
        return self.values.shape[0] == self.values.shape[1]


# ── Single Entries ───────────────────────────────────────────

@lru_cache(maxsize=64)
def _cached_fiducial(graph: CouplingGraph, lam: tuple[float, ...]) -> QuantumState:
    state = prepare_fiducial(graph, lam if len(lam) > 1 else lam[0])
    state.amps.setflags(write=False)
    return state


def fiducial_state(graph: CouplingGraph, lam: Union[float, Sequence[float]]) -> QuantumState:
    """Prepared once per (graph, λ); shared read-only between threads."""
    return _cached_fiducial(graph, tuple(float(v) for v in np.atleast_1d(lam)))


def _relative_gates(x_gates, z_gates, side: InvarianceSide) -> np.ndarray:
    x = np.asarray(x_gates, dtype=np.complex128)
    z = np.asarray(z_gates, dtype=np.complex128)
    if side == InvarianceSide.LEFT:
        return np.conj(np.swapaxes(x, -1, -2)) @ z
    return x @ np.conj(np.swapaxes(z, -1, -2))


def kernel_entry_exact(
    x_gates: Sequence[Gate1Q],
    z_gates: Sequence[Gate1Q],
    fiducial: QuantumState,
    side: InvarianceSide = InvarianceSide.LEFT,
) -> float:
    if len(x_gates) != fiducial.n or len(z_gates) != fiducial.n:
        raise InvalidInputError(
            f"need {fiducial.n} gates per datum, got {len(x_gates)} and {len(z_gates)}"
        )
    gates = _relative_gates(x_gates, z_gates, InvarianceSide(side))
    moved = apply_product_gates(fiducial.amps, fiducial.n, gates)
    value = abs(np.vdot(fiducial.amps, moved)) ** 2
    return float(min(max(value, 0.0), 1.0))


def kernel_entry_sampled(exact_value: float, shots: int, rng: np.random.Generator) -> float:
    """Frequency of the all-zeros outcome over R shots."""
    if shots < 1:
        raise InvalidInputError(f"shots must be >= 1, got {shots}")
    p = min(max(float(exact_value), 0.0), 1.0)
    return rng.binomial(shots, p) / shots


def apply_noise(value: float, p_dep: float, stretch: float, n: int) -> float:
    """Global depolarizing at rate p_dep·c: (1 − pc)·K + pc·2^{−n}."""
    rate = p_dep * stretch
    if not 0.0 <= rate < 1.0:
        raise InvalidInputError(f"effective noise rate {rate} outside [0, 1)")
    return (1.0 - rate) * value + rate * 2.0 ** (-n)


def zne_intercept(values: Sequence[float], stretches: Sequence[float]) -> float:
    c = np.asarray(stretches, dtype=float)
    e = np.asarray(values, dtype=float)
    if c.size < 2 or c.size != e.size:
        raise InvalidInputError("zero-noise extrapolation needs >= 2 (stretch, value) pairs")
    if np.unique(c).size != c.size:
        raise InvalidInputError(f"duplicate stretches {list(c)}")
    dc = c - c.mean()
    slope = float(np.dot(dc, e - e.mean()) / np.dot(dc, dc))
    return float(e.mean() - slope * c.mean())


def zne_extrapolate(values: Sequence[float], stretches: Sequence[float]) -> float:
    """Least-squares line through (c_i, E_i) evaluated at c = 0, clamped to [0, 1]."""
    return min(max(zne_intercept(values, stretches), 0.0), 1.0)


def _estimate(exact: float, cfg: KernelConfig, n: int, rng: np.random.Generator) -> tuple[float, bool]:
    """One entry through the configured pipeline; returns (value, clamped)."""
    if cfg.mode == KernelMode.EXACT:
        return exact, False
    if cfg.mode == KernelMode.SHOTS:
        return (kernel_entry_sampled(exact, cfg.shots, rng) if cfg.shots else exact), False

    stretches = cfg.stretches if cfg.mode == KernelMode.MITIGATED else cfg.stretches[:1]
    measured = []
    for c in stretches:
        value = apply_noise(exact, cfg.p_dep, c, n)
        if cfg.shots:
            value = kernel_entry_sampled(value, cfg.shots, rng)
        measured.append(value)
    if cfg.mode == KernelMode.NOISY_SHOTS:
        return measured[0], False
    raw = zne_intercept(measured, stretches)
    clamped = min(max(raw, 0.0), 1.0)
    return clamped, clamped != raw


# ── Gram Matrices ────────────────────────────────────────────

def dataset_gates(ds: Dataset) -> np.ndarray:
    """(m, n, 2, 2) per-qubit unitaries of every data point."""
    return np.array([datum_to_unitaries(theta) for theta in ds.thetas], dtype=np.complex128)


def _entry_rng(seed: int, i: int, j: int) -> np.random.Generator:
    return np.random.default_rng([seed, i, j])


def build_kernel_matrix(
    rows: Dataset,
    cols: Dataset,
    graph: CouplingGraph,
    cfg: KernelConfig,
    symmetric: Optional[bool] = None,
) -> KernelMatrix:
    """K_{ij} = K(rows_i, cols_j). `symmetric` defaults to rows is cols."""
    if rows.n != graph.n or cols.n != graph.n:
        raise InvalidInputError(f"datasets ({rows.n}, {cols.n} qubits) do not match graph ({graph.n})")
    symmetric = (rows is cols) if symmetric is None else symmetric
    if symmetric and len(rows) != len(cols):
        raise InvalidInputError("symmetric kernel needs rows and cols of equal size")

    start = time.time()
    n = graph.n
    fiducial = fiducial_state(graph, cfg.lam)
    xg = dataset_gates(rows)
    zg = xg if symmetric else dataset_gates(cols)
    m, mc = len(rows), len(cols)
    values = np.zeros((m, mc))
    clamped = np.zeros((m, mc), dtype=bool)

    def fill_row(i: int):
        first = i + 1 if symmetric else 0
        for j in range(first, mc):
            exact = kernel_entry_exact(xg[i], zg[j], fiducial, cfg.side)
            values[i, j], clamped[i, j] = _estimate(exact, cfg, n, _entry_rng(cfg.seed, i, j))

    if cfg.threads > 1:
        Parallel(n_jobs=cfg.threads, require="sharedmem")(delayed(fill_row)(i) for i in range(m))
    else:
        for i in range(m):
            fill_row(i)

    provenance = KernelProvenance(
        mode=cfg.mode,
        shots=cfg.shots if cfg.mode != KernelMode.EXACT else None,
        p_dep=cfg.p_dep,
        stretches=cfg.stretches if cfg.mode == KernelMode.MITIGATED else cfg.stretches[:1],
        side=cfg.side,
        lam=cfg.lam,
        seed=cfg.seed,
        n=n,
        shape=(m, mc),
        clamped_entries=int(clamped.sum()),
    )
    if provenance.clamped_entries:
        logger.warning("ZNE clamped %d entries into [0, 1]", provenance.clamped_entries)

    kernel = KernelMatrix(values, provenance)
    if symmetric:
        upper = np.triu(values, 1)
        kernel.values = upper + upper.T + np.eye(m)
        provenance.symmetrized = True
        kernel = psd_repair(kernel, cfg.psd_policy)

    provenance = kernel.provenance
    provenance.elapsed_seconds = time.time() - start
    logger.info(
        "Built %dx%d %s kernel (n=%d, λ=%s) in %.2fs",
        m, mc, cfg.mode.value, n, cfg.lam, provenance.elapsed_seconds,
    )
    return kernel


def psd_repair(K: KernelMatrix, policy: PsdPolicy = PsdPolicy.CLIP) -> KernelMatrix:
    """Symmetrize, then clip negative eigenvalues or add a diagonal jitter."""
    values = np.asarray(K.values, dtype=float)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise InvalidInputError(f"PSD repair needs a square matrix, got {values.shape}")
    values = (values + values.T) / 2
    try:
        eigvals, eigvecs = np.linalg.eigh(values)
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"eigendecomposition failed: {e}") from e
    min_eig = float(eigvals.min()) if eigvals.size else 0.0

    provenance = K.provenance.model_copy(update={
        "min_eigenvalue": min_eig,
        "symmetrized": True,
        "psd_policy": PsdPolicy(policy),
    })
    if min_eig >= -PSD_TOL:
        return KernelMatrix(values, provenance)

    if PsdPolicy(policy) == PsdPolicy.CLIP:
        repaired = eigvecs @ np.diag(np.clip(eigvals, 0, None)) @ eigvecs.T
        repaired = (repaired + repaired.T) / 2
    else:
        delta = abs(min_eig) + PSD_TOL
        repaired = values + delta * np.eye(values.shape[0])
        scale = np.sqrt(np.diag(repaired))
        repaired = repaired / np.outer(scale, scale)
    logger.warning("PSD repair (%s): min eigenvalue %.3e", PsdPolicy(policy).value, min_eig)
    provenance.psd_repaired = True
    return KernelMatrix(repaired, provenance)


# ── Kernel Circuit ───────────────────────────────────────────

def kernel_circuit_state(
    x_gates: Sequence[Gate1Q],
    z_gates: Sequence[Gate1Q],
    graph: CouplingGraph,
    lam: Union[float, Sequence[float]],
    side: InvarianceSide = InvarianceSide.LEFT,
) -> QuantumState:
    """V_λ† D_x† D_z V_λ |0^n⟩; its all-zeros probability is the kernel entry."""
    fiducial = fiducial_state(graph, lam)
    gates = _relative_gates(x_gates, z_gates, InvarianceSide(side))
    moved = QuantumState(graph.n, apply_product_gates(fiducial.amps, graph.n, gates))
    return unprepare_fiducial(moved, graph, lam)
