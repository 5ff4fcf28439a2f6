"""
Statevector Simulation
Dense complex128 simulation of the kernel circuit family:
- single-qubit gates (R_X, R_Y, R_Z and arbitrary 2x2 unitaries)
- CZ entanglers on coupling-graph edges
- fiducial preparation V_λ|0^n⟩ = ∏ CZ ∏ R_Y(λ)|0^n⟩ and its inverse
- overlaps, outcome distributions and Hamming-weight histograms

Qubit k is bit k of the basis index (little-endian). With the C-ordered
reshape to (2,)*n, qubit k lives on tensor axis n-1-k.
"""

import logging
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

import config
from models.errors import InvalidInputError

logger = logging.getLogger(__name__)

Gate1Q = np.ndarray   # 2x2 complex128

I2 = np.eye(2, dtype=np.complex128)
PAULI = {
    "I": I2,
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}
HADAMARD = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)

UNITARY_TOL = 1e-9


# ── Types ────────────────────────────────────────────────────

@dataclass
class QuantumState:
    n: int
    amps: np.ndarray

    def __post_init__(self):
        self.amps = np.asarray(self.amps, dtype=np.complex128)
        if self.amps.shape != (2 ** self.n,):
            raise InvalidInputError(
                f"state of {self.n} qubits needs {2 ** self.n} amplitudes, got {self.amps.shape}"
            )

    def copy(self) -> "QuantumState":
        return QuantumState(self.n, self.amps.copy())

    def norm(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)


@dataclass(frozen=True)
class CouplingGraph:
    n: int
    edges: tuple[tuple[int, int], ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.n < 1:
            raise InvalidInputError(f"graph needs at least one vertex, got {self.n}")
        seen = set()
        canon = []
        for a, b in self.edges:
            a, b = int(a), int(b)
            if a == b:
                raise InvalidInputError(f"self-loop at vertex {a}")
            if not (0 <= a < self.n and 0 <= b < self.n):
                raise InvalidInputError(f"edge ({a}, {b}) outside [0, {self.n})")
            key = (min(a, b), max(a, b))
            if key in seen:
                raise InvalidInputError(f"duplicate edge {key}")
            seen.add(key)
            canon.append(key)
        object.__setattr__(self, "edges", tuple(canon))

    def neighbors(self, vertex: int) -> list[int]:
        out = []
        for a, b in self.edges:
            if a == vertex:
                out.append(b)
            elif b == vertex:
                out.append(a)
        return sorted(out)


# ── Gates ────────────────────────────────────────────────────

def rotation(pauli: str, phi: float) -> Gate1Q:
    """R_P(φ) = exp(−i(φ/2)P) = cos(φ/2)·I − i·sin(φ/2)·P."""
    return np.cos(phi / 2) * I2 - 1j * np.sin(phi / 2) * PAULI[pauli]


def rx(phi: float) -> Gate1Q:
    return rotation("X", phi)


def ry(phi: float) -> Gate1Q:
    return rotation("Y", phi)


def rz(phi: float) -> Gate1Q:
    return rotation("Z", phi)


def dagger(g: Gate1Q) -> Gate1Q:
    return np.conj(np.asarray(g)).T


def is_unitary(g: Gate1Q, tol: float = UNITARY_TOL) -> bool:
    g = np.asarray(g)
    return g.shape == (2, 2) and np.allclose(dagger(g) @ g, I2, atol=tol, rtol=0)


def _check_gate(g: Gate1Q) -> np.ndarray:
    g = np.asarray(g, dtype=np.complex128)
    if g.shape != (2, 2):
        raise InvalidInputError(f"single-qubit gate must be 2x2, got {g.shape}")
    if config.VALIDATE_GATES and not is_unitary(g):
        raise InvalidInputError("gate is not unitary within 1e-9")
    return g


def _check_qubit(n: int, qubit: int):
    if not 0 <= qubit < n:
        raise InvalidInputError(f"qubit {qubit} out of range for {n} qubits")


# ── Core Operations ──────────────────────────────────────────

def zero_state(n: int, cap: int | None = None) -> QuantumState:
    cap = config.QUBIT_CAP if cap is None else cap
    if not 1 <= n <= cap:
        raise InvalidInputError(f"qubit count {n} outside [1, {cap}]")
    amps = np.zeros(2 ** n, dtype=np.complex128)
    amps[0] = 1.0
    return QuantumState(n, amps)


def _apply_gate_array(amps: np.ndarray, n: int, qubit: int, g: np.ndarray) -> np.ndarray:
    axis = n - 1 - qubit
    psi = amps.reshape((2,) * n)
    out = np.tensordot(g, psi, axes=([1], [axis]))
    return np.moveaxis(out, 0, axis).reshape(-1)


def apply_product_gates(amps: np.ndarray, n: int, gates: Sequence[Gate1Q]) -> np.ndarray:
    """Apply one 2x2 gate per qubit (gates[k] on qubit k). No validation."""
    psi = amps.reshape((2,) * n)
    for k, g in enumerate(gates):
        axis = n - 1 - k
        psi = np.moveaxis(np.tensordot(g, psi, axes=([1], [axis])), 0, axis)
    return np.ascontiguousarray(psi).reshape(-1)


def apply_1q(state: QuantumState, qubit: int, g: Gate1Q) -> QuantumState:
    _check_qubit(state.n, qubit)
    g = _check_gate(g)
    return QuantumState(state.n, _apply_gate_array(state.amps, state.n, qubit, g))


def _cz_mask(n: int, q1: int, q2: int) -> np.ndarray:
    idx = np.arange(2 ** n)
    return (((idx >> q1) & 1) & ((idx >> q2) & 1)).astype(bool)


def apply_cz(state: QuantumState, q1: int, q2: int) -> QuantumState:
    _check_qubit(state.n, q1)
    _check_qubit(state.n, q2)
    if q1 == q2:
        raise InvalidInputError(f"CZ needs two distinct qubits, got {q1} twice")
    amps = state.amps.copy()
    amps[_cz_mask(state.n, q1, q2)] *= -1
    return QuantumState(state.n, amps)


def _edge_phase(graph: CouplingGraph) -> np.ndarray:
    """Diagonal of ∏_{(k,t)∈E} CZ_{k,t} as a ±1 vector."""
    idx = np.arange(2 ** graph.n)
    parity = np.zeros(2 ** graph.n, dtype=np.int64)
    for a, b in graph.edges:
        parity ^= ((idx >> a) & 1) & ((idx >> b) & 1)
    return 1 - 2 * parity


def _lambda_vector(lam: Union[float, Sequence[float]], n: int) -> np.ndarray:
    vec = np.atleast_1d(np.asarray(lam, dtype=float))
    if vec.size == 1:
        return np.full(n, float(vec[0]))
    if vec.size != n:
        raise InvalidInputError(f"λ must be a scalar or have {n} entries, got {vec.size}")
    return vec


def prepare_fiducial(graph: CouplingGraph, lam: Union[float, Sequence[float]]) -> QuantumState:
    """|ψ_λ⟩ = ∏_{(k,t)∈E} CZ_{k,t} ∏_k R_Y(λ_k)|0^n⟩.

    A scalar λ is shared by every qubit; a length-n vector sets one angle per qubit.
    """
    state = zero_state(graph.n)
    amps = apply_product_gates(state.amps, graph.n, [ry(a) for a in _lambda_vector(lam, graph.n)])
    if graph.edges:
        amps = amps * _edge_phase(graph)
    return QuantumState(graph.n, amps)


def unprepare_fiducial(state: QuantumState, graph: CouplingGraph,
                       lam: Union[float, Sequence[float]]) -> QuantumState:
    """Apply V_λ† = ∏ R_Y(−λ_k) ∏ CZ (CZ is self-inverse)."""
    amps = state.amps
    if graph.edges:
        amps = amps * _edge_phase(graph)
    amps = apply_product_gates(amps, graph.n, [ry(-a) for a in _lambda_vector(lam, graph.n)])
    return QuantumState(graph.n, amps)


def overlap(a: QuantumState, b: QuantumState) -> complex:
    """⟨a|b⟩."""
    if a.n != b.n:
        raise InvalidInputError(f"overlap of {a.n}- and {b.n}-qubit states")
    return complex(np.vdot(a.amps, b.amps))


def outcome_distribution(state: QuantumState) -> np.ndarray:
    return np.abs(state.amps) ** 2


def popcounts(n: int) -> np.ndarray:
    idx = np.arange(2 ** n)
    weights = np.zeros(2 ** n, dtype=np.int64)
    for k in range(n):
        weights += (idx >> k) & 1
    return weights


def hamming_weight_distribution(p: np.ndarray, n: int) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (2 ** n,):
        raise InvalidInputError(f"distribution length {p.shape} does not match 2^{n}")
    if abs(p.sum() - 1.0) > 1e-8:
        raise InvalidInputError(f"distribution sums to {p.sum()}, expected 1")
    return np.bincount(popcounts(n), weights=p, minlength=n + 1)
