"""
Labeling Cosets With Error (LCE)
Benchmark generator:
- coupling graphs: path, ring, heavy-hex fragment, or a user JSON file
- new_problem: draws coset representatives c± ∈ [−π/2, π/2]^{2n}
- sample_datum: c_label composed with a uniform stabilizer element, plus
  Normal noise of VARIANCE ε (standard deviation √ε) on every angle
- generate_dataset: −1 block first, then +1 block; each point seeded from
  (seed, index) so generation order never changes the result
- representation_distance: ‖D_x − D_y‖_F without forming 2^n matrices
"""

import json
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional

import numpy as np

from models.errors import InvalidInputError
from services.group_service import (
    PauliString,
    StabilizerGroup,
    compose_datum_with_element,
    datum_to_unitaries,
    graph_stabilizer_generators,
    sample_stabilizer_element,
)
from services.statevector_service import HADAMARD, CouplingGraph, dagger, rx

logger = logging.getLogger(__name__)

HALF_PI = math.pi / 2


# ── Coupling Graphs ──────────────────────────────────────────

def path_graph(n: int) -> CouplingGraph:
    return CouplingGraph(n, tuple((k, k + 1) for k in range(n - 1)))


def ring_graph(n: int) -> CouplingGraph:
    if n < 3:
        raise InvalidInputError(f"ring needs at least 3 vertices, got {n}")
    return CouplingGraph(n, tuple((k, (k + 1) % n) for k in range(n)))


def _heavy_hex_lattice(rows: int, cols: int) -> dict[tuple, list[tuple]]:
    """Brick-wall honeycomb with every edge subdivided by one extra vertex."""
    adj: dict[tuple, list[tuple]] = {}

    def link(a, b):
        mid = ("m", a, b)
        adj.setdefault(a, []).append(mid)
        adj.setdefault(b, []).append(mid)
        adj[mid] = [a, b]

    for r in range(rows + 1):
        for c in range(cols + 1):
            if c < cols:
                link((r, c), (r, c + 1))
            if r < rows and (r + c) % 2 == 0:
                link((r, c), (r + 1, c))
    return adj


def heavy_hex_graph(n: int) -> CouplingGraph:
    """Connected n-vertex fragment of a heavy-hex lattice, grown breadth-first from a corner."""
    size = 2
    while True:
        adj = _heavy_hex_lattice(size, 2 * size)
        if len(adj) >= n:
            break
        size += 1
    start = (0, 0)
    order, seen, queue = [], {start}, deque([start])
    while queue and len(order) < n:
        v = queue.popleft()
        order.append(v)
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    index = {v: i for i, v in enumerate(order)}
    edges = {
        (min(index[v], index[w]), max(index[v], index[w]))
        for v in order for w in adj[v] if w in index
    }
    return CouplingGraph(n, tuple(sorted(edges)))


def load_graph_file(path: str | Path) -> CouplingGraph:
    """JSON file: {"n": 27, "edges": [[0, 1], [1, 2], ...]}."""
    try:
        raw = json.loads(Path(path).read_text())
        return CouplingGraph(int(raw["n"]), tuple(tuple(e) for e in raw["edges"]))
    except (OSError, KeyError, TypeError, ValueError) as e:
        if isinstance(e, InvalidInputError):
            raise
        raise InvalidInputError(f"cannot read graph file {path}: {e}") from e


GRAPH_BUILDERS = {
    "path": path_graph,
    "ring": ring_graph,
    "heavy-hex": heavy_hex_graph,
}


def build_graph(name: str, n: int, graph_file: Optional[str] = None) -> CouplingGraph:
    if name == "file":
        if not graph_file:
            raise InvalidInputError("graph 'file' needs graph_file")
        return load_graph_file(graph_file)
    builder = GRAPH_BUILDERS.get(name)
    if builder is None:
        raise InvalidInputError(f"unknown graph {name!r}; choose from {sorted(GRAPH_BUILDERS)} or 'file'")
    return builder(n)


# ── Types ────────────────────────────────────────────────────

@dataclass
class LceProblem:
    graph: CouplingGraph
    stabilizer: StabilizerGroup
    c_plus: np.ndarray
    c_minus: np.ndarray
    seed: int

    def __post_init__(self):
        for c in (self.c_plus, self.c_minus):
            if c.shape != (2 * self.graph.n,):
                raise InvalidInputError(f"representative must have {2 * self.graph.n} angles")
            if np.any(np.abs(c) > HALF_PI):
                raise InvalidInputError("representative angles must lie in [−π/2, π/2]")

    @property
    def n(self) -> int:
        return self.graph.n

    def representative(self, label: int) -> np.ndarray:
        if label == 1:
            return self.c_plus
        if label == -1:
            return self.c_minus
        raise InvalidInputError(f"label must be ±1, got {label}")


@dataclass
class DataPoint:
    theta: np.ndarray
    y: int


@dataclass
class Dataset:
    thetas: np.ndarray          # (m, 2n)
    labels: np.ndarray          # (m,) in {−1, +1}
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.thetas = np.atleast_2d(np.asarray(self.thetas, dtype=float))
        self.labels = np.asarray(self.labels, dtype=int)
        if self.thetas.shape[0] != self.labels.shape[0]:
            raise InvalidInputError("one label per data point required")
        if self.thetas.shape[1] % 2:
            raise InvalidInputError("angle vectors must have even length")
        if not np.all(np.isin(self.labels, (-1, 1))):
            raise InvalidInputError("labels must be ±1")
        if not np.all(np.isfinite(self.thetas)):
            raise InvalidInputError("non-finite angles in dataset")

    @property
    def n(self) -> int:
        return self.thetas.shape[1] // 2

    def __len__(self) -> int:
        return self.labels.shape[0]

    def __getitem__(self, i: int) -> DataPoint:
        return DataPoint(self.thetas[i], int(self.labels[i]))

    def __iter__(self) -> Iterator[DataPoint]:
        return (self[i] for i in range(len(self)))

    def counts(self) -> dict[int, int]:
        return {-1: int(np.sum(self.labels == -1)), 1: int(np.sum(self.labels == 1))}

    @classmethod
    def from_points(cls, points: list[DataPoint], provenance: Optional[dict] = None) -> "Dataset":
        return cls(
            np.array([p.theta for p in points]),
            np.array([p.y for p in points]),
            provenance or {},
        )


# ── Operations ───────────────────────────────────────────────

def new_problem(graph: CouplingGraph, seed: int) -> LceProblem:
    rng = np.random.default_rng(seed)
    c_plus = rng.uniform(-HALF_PI, HALF_PI, size=2 * graph.n)
    c_minus = rng.uniform(-HALF_PI, HALF_PI, size=2 * graph.n)
    return LceProblem(graph, graph_stabilizer_generators(graph), c_plus, c_minus, seed)


def sample_datum(
    p: LceProblem,
    label: int,
    epsilon: float,
    rng: np.random.Generator,
    element: Optional[PauliString] = None,
) -> DataPoint:
    """c_label·s with s uniform over S, then θ += Normal(0, variance ε) per angle."""
    if epsilon < 0:
        raise InvalidInputError(f"epsilon must be >= 0, got {epsilon}")
    base = p.representative(label)
    s = element if element is not None else sample_stabilizer_element(p.stabilizer, rng)
    theta = compose_datum_with_element(base, s)
    if epsilon > 0:
        theta = theta + rng.normal(0.0, math.sqrt(epsilon), size=theta.size)
    return DataPoint(theta, label)


def datum_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, index])


def generate_dataset(p: LceProblem, m_per_label: int, epsilon: float, seed: int) -> Dataset:
    if m_per_label < 1:
        raise InvalidInputError(f"m_per_label must be >= 1, got {m_per_label}")
    points = []
    for index in range(2 * m_per_label):
        label = -1 if index < m_per_label else 1
        points.append(sample_datum(p, label, epsilon, datum_rng(seed, index)))
    provenance = {
        "problem_seed": p.seed,
        "seed": seed,
        "epsilon": epsilon,
        "counts": {"-1": m_per_label, "1": m_per_label},
    }
    logger.info("Generated LCE dataset: n=%d m=%d eps=%g seed=%d", p.n, 2 * m_per_label, epsilon, seed)
    return Dataset.from_points(points, provenance)


def representation_distance(a: DataPoint, b: DataPoint) -> float:
    """‖D_a − D_b‖_F via ‖A−B‖² = 2·2^n − 2·Re ∏_k tr(A_k†B_k)."""
    if a.theta.shape != b.theta.shape:
        raise InvalidInputError(f"dimension mismatch {a.theta.shape} vs {b.theta.shape}")
    traces = [np.trace(dagger(ga) @ gb) for ga, gb in zip(datum_to_unitaries(a.theta), datum_to_unitaries(b.theta))]
    n = len(traces)
    sq = 2.0 * 2 ** n - 2.0 * float(np.prod(traces).real)
    return math.sqrt(max(sq, 0.0))


# ── Single-Qubit Coset Example ───────────────────────────────

def single_qubit_coset_example() -> dict:
    """S = {1, A, A²} with A = exp(i(2π/3)X); C₊ = S, C₋ = H·S.

    Returns per-label lists of 2x2 unitaries (one-qubit data points).
    """
    a = rx(-4 * math.pi / 3)
    subgroup = [np.eye(2, dtype=np.complex128), a, a @ a]
    return {
        1: [s.copy() for s in subgroup],
        -1: [HADAMARD @ s for s in subgroup],
    }
