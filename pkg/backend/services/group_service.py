"""
Group Machinery
- SU(2) Euler parametrization D(θ1,θ2,θ3) = R_X(θ1) R_Z(θ2) R_X(θ3) and the
  per-qubit product representation D_θ of an angle vector θ ∈ ℝ^{2n}
- Pauli strings with phase tracking (powers of i), graph stabilizer groups,
  uniform sampling of stabilizer elements
- Coset composition rules: D(θ1,θ2,0)·P rewritten as D(θ1′,θ2′,0)
- Z*_p with a subset fiducial: brute-force DLOG and the closed-form kernel
"""

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from models.errors import InvalidInputError
from services.statevector_service import (
    PAULI,
    CouplingGraph,
    Gate1Q,
    QuantumState,
    apply_product_gates,
    dagger,
    rx,
    rz,
)

logger = logging.getLogger(__name__)

FOUR_PI = 4 * math.pi
LETTERS = ("I", "X", "Y", "Z")
# (x, z) symplectic bits per letter
_BITS = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}
_LETTER = {v: k for k, v in _BITS.items()}


# ── SU(2) Euler Angles ───────────────────────────────────────

def canonical_angle(x):
    """Map into (−2π, 2π]; in-range values pass through untouched.

    The kernel is 4π-periodic in every angle.
    """
    x = np.asarray(x, dtype=float)
    wrapped = 2 * math.pi - np.mod(2 * math.pi - x, FOUR_PI)
    return np.where((x > -2 * math.pi) & (x <= 2 * math.pi), x, wrapped)


@dataclass(frozen=True)
class EulerTriple:
    theta1: float
    theta2: float
    theta3: float = 0.0

    def normalized(self) -> "EulerTriple":
        return EulerTriple(*(float(canonical_angle(t)) for t in (self.theta1, self.theta2, self.theta3)))


def euler_to_unitary(e: EulerTriple) -> Gate1Q:
    angles = (e.theta1, e.theta2, e.theta3)
    if not all(math.isfinite(t) for t in angles):
        raise InvalidInputError(f"non-finite Euler angles {angles}")
    return rx(e.theta1) @ rz(e.theta2) @ rx(e.theta3)


def _check_datum(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 1 or theta.size % 2:
        raise InvalidInputError(f"angle vector must have even length, got shape {theta.shape}")
    if not np.all(np.isfinite(theta)):
        raise InvalidInputError("angle vector has non-finite entries")
    return theta


def datum_to_unitaries(theta: Sequence[float]) -> list[Gate1Q]:
    """D_θ = ⊗_k R_X(θ_{2k}) R_Z(θ_{2k+1}) (θ3 ≡ 0), one gate per qubit."""
    theta = _check_datum(theta)
    return [rx(theta[2 * k]) @ rz(theta[2 * k + 1]) for k in range(theta.size // 2)]


def phase_equal(a: Gate1Q, b: Gate1Q, tol: float = 1e-9) -> bool:
    """True when a = e^{iφ} b for 2x2 unitaries (|tr(a†b)| = 2)."""
    return abs(abs(np.trace(dagger(a) @ b)) - 2.0) <= tol


# ── Pauli Algebra ────────────────────────────────────────────

@dataclass(frozen=True)
class PauliString:
    """i^phase · P_0 ⊗ … ⊗ P_{n-1}; letters[k] acts on qubit k."""
    letters: str
    phase: int = 0

    def __post_init__(self):
        if any(ch not in _BITS for ch in self.letters):
            raise InvalidInputError(f"invalid Pauli letters {self.letters!r}")
        object.__setattr__(self, "phase", int(self.phase) % 4)

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls("I" * n)

    @classmethod
    def single(cls, n: int, assignments: dict[int, str]) -> "PauliString":
        letters = ["I"] * n
        for k, ch in assignments.items():
            letters[k] = ch
        return cls("".join(letters))

    @property
    def n(self) -> int:
        return len(self.letters)

    def symplectic(self) -> tuple[np.ndarray, np.ndarray]:
        x = np.array([_BITS[ch][0] for ch in self.letters], dtype=np.int64)
        z = np.array([_BITS[ch][1] for ch in self.letters], dtype=np.int64)
        return x, z

    def commutes(self, other: "PauliString") -> bool:
        x1, z1 = self.symplectic()
        x2, z2 = other.symplectic()
        return int(np.sum(x1 * z2 + z1 * x2)) % 2 == 0

    def coefficient(self) -> complex:
        return 1j ** self.phase

    def to_matrix(self) -> np.ndarray:
        """Dense 2^n x 2^n matrix in the little-endian convention (small n only)."""
        out = np.array([[1.0 + 0j]])
        for ch in reversed(self.letters):
            out = np.kron(out, PAULI[ch])
        return self.coefficient() * out

    def __str__(self) -> str:
        sign = ("+", "+i", "-", "-i")[self.phase]
        return f"{sign}{self.letters}"


def _letter_phase(x1: int, z1: int, x2: int, z2: int) -> int:
    """Exponent of i picked up by P(x1,z1)·P(x2,z2), with (1,1) meaning Y."""
    if x1 == 0 and z1 == 0:
        return 0
    if x1 == 1 and z1 == 1:
        return z2 - x2
    if x1 == 1:
        return z2 * (2 * x2 - 1)
    return x2 * (1 - 2 * z2)


def pauli_multiply(a: PauliString, b: PauliString) -> PauliString:
    if a.n != b.n:
        raise InvalidInputError(f"Pauli length mismatch: {a.n} vs {b.n}")
    phase = a.phase + b.phase
    letters = []
    for ca, cb in zip(a.letters, b.letters):
        x1, z1 = _BITS[ca]
        x2, z2 = _BITS[cb]
        phase += _letter_phase(x1, z1, x2, z2)
        letters.append(_LETTER[(x1 ^ x2, z1 ^ z2)])
    return PauliString("".join(letters), phase % 4)


def gf2_rank(rows: np.ndarray) -> int:
    m = np.array(rows, dtype=np.uint8) % 2
    rank = 0
    for col in range(m.shape[1]):
        pivot = next((r for r in range(rank, m.shape[0]) if m[r, col]), None)
        if pivot is None:
            continue
        m[[rank, pivot]] = m[[pivot, rank]]
        for r in range(m.shape[0]):
            if r != rank and m[r, col]:
                m[r] ^= m[rank]
        rank += 1
    return rank


@dataclass(frozen=True)
class StabilizerGroup:
    generators: tuple[PauliString, ...]
    graph: Optional[CouplingGraph] = None

    def __post_init__(self):
        gens = self.generators
        n = gens[0].n if gens else 0
        if len(gens) != n or any(g.n != n for g in gens):
            raise InvalidInputError("stabilizer needs n generators on n qubits")
        for a, b in itertools.combinations(gens, 2):
            if not a.commutes(b):
                raise InvalidInputError(f"generators {a} and {b} anticommute")
        rows = [np.concatenate(g.symplectic()) for g in gens]
        if gf2_rank(np.array(rows)) != n:
            raise InvalidInputError("stabilizer generators are not independent")

    @property
    def n(self) -> int:
        return len(self.generators)

    def element(self, bits: Sequence[int]) -> PauliString:
        out = PauliString.identity(self.n)
        for bit, gen in zip(bits, self.generators):
            if bit:
                out = pauli_multiply(out, gen)
        return out

    def elements(self):
        """All 2^n group elements (small n only)."""
        for bits in itertools.product((0, 1), repeat=self.n):
            yield self.element(bits)


def graph_stabilizer_generators(graph: CouplingGraph) -> StabilizerGroup:
    """s_i = X_i ⊗_{k:(k,i)∈E} Z_k."""
    gens = []
    for i in range(graph.n):
        assignment = {k: "Z" for k in graph.neighbors(i)}
        assignment[i] = "X"
        gens.append(PauliString.single(graph.n, assignment))
    return StabilizerGroup(tuple(gens), graph)


def sample_stabilizer_element(s: StabilizerGroup, rng: np.random.Generator) -> PauliString:
    """Product of a uniformly random generator subset: uniform over the 2^n elements."""
    return s.element(rng.integers(0, 2, size=s.n))


def apply_pauli_string(state: QuantumState, p: PauliString) -> QuantumState:
    if p.n != state.n:
        raise InvalidInputError(f"{p.n}-qubit Pauli on {state.n}-qubit state")
    amps = apply_product_gates(state.amps, state.n, [PAULI[ch] for ch in p.letters])
    return QuantumState(state.n, p.coefficient() * amps)


# ── Coset Composition ────────────────────────────────────────

def compose_euler_with_pauli(c: tuple[float, float], letter: str) -> tuple[float, float]:
    """Angles (θ1′, θ2′) with D(θ1′,θ2′,0) ∝ D(θ1,θ2,0)·P."""
    t1, t2 = c
    if letter == "I":
        return t1, t2
    if letter == "X":
        return t1 + math.pi, -t2
    if letter == "Z":
        return t1, t2 + math.pi
    if letter == "Y":
        return t1 + math.pi, -t2 - math.pi
    raise InvalidInputError(f"invalid Pauli letter {letter!r}")


def compose_datum_with_element(theta: Sequence[float], element: PauliString) -> np.ndarray:
    """Per-qubit composition of an angle vector with a stabilizer element, canonicalized."""
    theta = _check_datum(theta)
    if element.n != theta.size // 2:
        raise InvalidInputError(f"{element.n}-qubit element for {theta.size // 2}-qubit datum")
    out = np.empty_like(theta)
    for k, letter in enumerate(element.letters):
        out[2 * k], out[2 * k + 1] = compose_euler_with_pauli((theta[2 * k], theta[2 * k + 1]), letter)
    return canonical_angle(out)


# ── Z*_p and the DLOG Kernel ─────────────────────────────────

def is_prime(p: int) -> bool:
    if p < 2:
        return False
    return all(p % d for d in range(2, math.isqrt(p) + 1))


def multiplicative_order(g: int, p: int) -> int:
    x, order = g % p, 1
    while x != 1:
        x = (x * g) % p
        order += 1
        if order > p:
            return 0
    return order


@dataclass(frozen=True)
class ZpStarGroup:
    p: int
    g: int
    k: int = 1

    def __post_init__(self):
        if not is_prime(self.p):
            raise InvalidInputError(f"{self.p} is not prime")
        if self.p > 2 ** 20:
            raise InvalidInputError(f"p = {self.p} too large for brute force")
        if self.g % self.p == 0 or multiplicative_order(self.g, self.p) != self.p - 1:
            raise InvalidInputError(f"{self.g} does not generate Z*_{self.p}")
        if self.k < 0 or 2 ** self.k >= self.p - 1:
            raise InvalidInputError(f"need 2^k < p−1, got k={self.k}, p={self.p}")

    @property
    def order(self) -> int:
        return self.p - 1

    def subset(self) -> frozenset[int]:
        """S = {g^v mod p : 0 ≤ v < 2^k}."""
        return frozenset(pow(self.g, v, self.p) for v in range(2 ** self.k))

    def coset(self, x: int) -> frozenset[int]:
        return frozenset((x * s) % self.p for s in self.subset())

    def check_element(self, x: int):
        if x % self.p == 0:
            raise InvalidInputError(f"{x} is not an element of Z*_{self.p}")


def dlog_kernel_entry(grp: ZpStarGroup, x: int, z: int) -> float:
    """(|xS ∩ zS| / 2^k)² for the uniform superposition over S."""
    grp.check_element(x)
    grp.check_element(z)
    shared = len(grp.coset(x) & grp.coset(z))
    return (shared / 2 ** grp.k) ** 2


def dlog_kernel_matrix(grp: ZpStarGroup, xs: Sequence[int], zs: Optional[Sequence[int]] = None) -> np.ndarray:
    zs = xs if zs is None else zs
    cosets = {x: grp.coset(x) for x in set(xs) | set(zs)}
    for x in cosets:
        grp.check_element(x)
    scale = 2 ** grp.k
    return np.array(
        [[(len(cosets[x] & cosets[z]) / scale) ** 2 for z in zs] for x in xs],
        dtype=float,
    )


def dlog_brute(grp: ZpStarGroup, x: int) -> int:
    grp.check_element(x)
    target = x % grp.p
    value = 1
    for v in range(grp.order):
        if value == target:
            return v
        value = (value * grp.g) % grp.p
    raise InvalidInputError(f"{x} not reached by powers of {grp.g} mod {grp.p}")
