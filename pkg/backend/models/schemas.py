import math
from enum import Enum
from pathlib import Path
from typing import Optional, Union

from pydantic import BaseModel, Field, field_validator, model_validator

import config


# ── Kernel Models ────────────────────────────────────────────

class KernelMode(str, Enum):
    EXACT = "exact"
    SHOTS = "shots"
    NOISY_SHOTS = "noisy-shots"
    MITIGATED = "mitigated"


class InvarianceSide(str, Enum):
    LEFT = "left"
    RIGHT = "right"


class PsdPolicy(str, Enum):
    CLIP = "clip"
    JITTER = "jitter"


Lambda = Union[float, list[float]]


class KernelConfig(BaseModel):
    mode: KernelMode = KernelMode.EXACT
    shots: Optional[int] = config.DEFAULT_SHOTS   # None = infinite shots
    p_dep: float = 0.0
    stretches: list[float] = Field(default_factory=lambda: list(config.DEFAULT_STRETCHES))
    side: InvarianceSide = InvarianceSide.LEFT
    lam: Lambda = math.pi / 2
    seed: int = 0
    psd_policy: PsdPolicy = PsdPolicy.CLIP
    threads: int = config.KERNEL_THREADS

    @field_validator("shots")
    @classmethod
    def _shots_positive(cls, v):
        if v is not None and v < 1:
            raise ValueError("shots must be >= 1")
        return v

    @field_validator("p_dep")
    @classmethod
    def _rate_in_range(cls, v):
        if not 0.0 <= v < 1.0:
            raise ValueError("p_dep must satisfy 0 <= p_dep < 1")
        return v

    @field_validator("stretches")
    @classmethod
    def _stretches_increasing(cls, v):
        if not v or any(c <= 0 for c in v):
            raise ValueError("stretches must be positive")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("stretches must be strictly increasing")
        return v

    @field_validator("threads")
    @classmethod
    def _threads_positive(cls, v):
        return max(1, v)

    @property
    def samples(self) -> bool:
        return self.mode != KernelMode.EXACT and self.shots is not None


class KernelProvenance(BaseModel):
    """Sidecar JSON written next to every kernel matrix CSV."""
    mode: KernelMode
    shots: Optional[int] = None
    p_dep: float = 0.0
    stretches: list[float] = []
    side: InvarianceSide = InvarianceSide.LEFT
    lam: Lambda = 0.0
    seed: int = 0
    n: int = 0
    shape: tuple[int, int] = (0, 0)
    symmetrized: bool = False
    psd_repaired: bool = False
    psd_policy: Optional[PsdPolicy] = None
    min_eigenvalue: Optional[float] = None
    clamped_entries: int = 0
    row_checksum: Optional[str] = None
    col_checksum: Optional[str] = None
    elapsed_seconds: float = 0.0


# ── SVM Models ───────────────────────────────────────────────

class QpReport(BaseModel):
    objective: float
    iterations: int
    kkt_violation: float
    converged: bool
    degenerate: bool = False
    objective_history: list[float] = Field(default=[], exclude=True)


class SvmModelRecord(BaseModel):
    alpha: list[float]
    b: float
    C: float
    labels: list[int]
    support: list[int]
    kernel_checksum: Optional[str] = None
    dataset_checksum: Optional[str] = None
    degenerate: bool = False


# ── Alignment Models ─────────────────────────────────────────

class AlignmentObjective(str, Enum):
    WEIGHTED = "weighted"
    UNWEIGHTED = "unweighted"
    CENTERED = "centered"


class SpsaConfig(BaseModel):
    steps: int = 21
    a: float = 0.1
    c: float = 0.1
    A: float = 0.0
    sigma: float = 0.602
    gamma: float = 0.101
    lam0: Lambda = 0.1
    seed: int = 0
    objective: AlignmentObjective = AlignmentObjective.WEIGHTED

    @field_validator("steps")
    @classmethod
    def _steps_nonnegative(cls, v):
        if v < 0:
            raise ValueError("steps must be >= 0")
        return v

    @field_validator("a", "c")
    @classmethod
    def _gain_positive(cls, v):
        if v <= 0:
            raise ValueError("gain constants a, c must be > 0")
        return v

    @field_validator("sigma", "gamma")
    @classmethod
    def _exponent_range(cls, v):
        if not 0.0 < v <= 1.0:
            raise ValueError("decay exponents must lie in (0, 1]")
        return v


class TraceRecord(BaseModel):
    """One line of the alignment trace (JSON lines)."""
    step: int
    lam: list[float]
    lam_plus: Optional[list[float]] = None
    lam_minus: Optional[list[float]] = None
    delta: Optional[list[int]] = None
    f_plus: Optional[float] = None
    f_minus: Optional[float] = None
    cost: float
    a_i: Optional[float] = None
    c_i: Optional[float] = None
    wall_time: float = 0.0
    test_accuracy: Optional[float] = None


# ── Data Models ──────────────────────────────────────────────

class ProblemRecord(BaseModel):
    n: int
    edges: list[tuple[int, int]]
    c_plus: list[float]
    c_minus: list[float]
    seed: int


class MetricsReport(BaseModel):
    accuracy: float
    decision_values: list[float]
    misclassified: list[int]
    hs_distance: Optional[float] = None
    variance_plus: Optional[float] = None
    variance_minus: Optional[float] = None
    tvd: dict[str, float] = {}


# ── Experiment Config ────────────────────────────────────────

class ExperimentConfig(BaseModel):
    """Flat experiment record; one JSON file per run."""
    graph: str = "path"                  # path | ring | heavy-hex | file
    n: int = 5
    graph_file: Optional[str] = None
    epsilon: float = config.DEFAULT_EPSILON
    train_per_label: int = 10
    test_per_label: int = 50
    data_seed: int = 0
    # kernel
    mode: KernelMode = KernelMode.EXACT
    shots: Optional[int] = config.DEFAULT_SHOTS
    p_dep: float = 0.0
    stretches: list[float] = Field(default_factory=lambda: list(config.DEFAULT_STRETCHES))
    side: InvarianceSide = InvarianceSide.LEFT
    lam: Lambda = math.pi / 2
    shot_seed: int = 0
    psd_policy: PsdPolicy = PsdPolicy.CLIP
    threads: int = config.KERNEL_THREADS
    # alignment
    spsa_steps: int = 21
    spsa_a: float = 0.1
    spsa_c: float = 0.1
    spsa_A: float = 0.0
    spsa_sigma: float = 0.602
    spsa_gamma: float = 0.101
    lam0: Lambda = 0.1
    spsa_seed: int = 0
    objective: AlignmentObjective = AlignmentObjective.WEIGHTED
    # svm
    C: float = config.DEFAULT_C
    out: str = config.OUTPUT_DIR

    @field_validator("epsilon")
    @classmethod
    def _epsilon_nonnegative(cls, v):
        if v < 0:
            raise ValueError("epsilon must be >= 0")
        return v

    @field_validator("train_per_label", "test_per_label", "n")
    @classmethod
    def _count_positive(cls, v):
        if v < 1:
            raise ValueError("counts must be >= 1")
        return v

    @field_validator("C")
    @classmethod
    def _box_positive(cls, v):
        if v <= 0:
            raise ValueError("C must be > 0")
        return v

    @model_validator(mode="after")
    def _files_exist(self):
        if self.graph == "file":
            if not self.graph_file or not Path(self.graph_file).exists():
                raise ValueError(f"graph_file not found: {self.graph_file}")
        return self

    def kernel_config(self, **overrides) -> KernelConfig:
        cfg = KernelConfig(
            mode=self.mode,
            shots=self.shots,
            p_dep=self.p_dep,
            stretches=self.stretches,
            side=self.side,
            lam=self.lam,
            seed=self.shot_seed,
            psd_policy=self.psd_policy,
            threads=self.threads,
        )
        return cfg.model_copy(update=overrides) if overrides else cfg

    def spsa_config(self) -> SpsaConfig:
        return SpsaConfig(
            steps=self.spsa_steps,
            a=self.spsa_a,
            c=self.spsa_c,
            A=self.spsa_A,
            sigma=self.spsa_sigma,
            gamma=self.spsa_gamma,
            lam0=self.lam0,
            seed=self.spsa_seed,
            objective=self.objective,
        )


# ── HTTP Request Models ──────────────────────────────────────

class LceRequest(BaseModel):
    graph: str = "path"
    n: int = 5
    epsilon: float = config.DEFAULT_EPSILON
    per_label: int = 10
    seed: int = 0


class KernelRequest(BaseModel):
    lce: LceRequest = LceRequest()
    mode: KernelMode = KernelMode.EXACT
    shots: Optional[int] = config.DEFAULT_SHOTS
    p_dep: float = 0.0
    lam: Lambda = math.pi / 2
    seed: int = 0


class DlogDemoRequest(BaseModel):
    p: int = 7
    g: int = 3
    k: int = 1
    s: int = 0
    m: Optional[int] = None    # None = full group
    seed: int = 0
    C: float = config.DEFAULT_C


class FourierCheckRequest(BaseModel):
    group: str = "Z5"
    fiducial: str = "uniform"
