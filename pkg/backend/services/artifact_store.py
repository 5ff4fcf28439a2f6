"""
Artifact Store
File formats for every pipeline stage. Writes go to a temp file in the target
directory and are moved into place with os.replace.

- dataset      CSV  label,theta_0,…,theta_{2n−1}   (sha256 of the bytes = dataset checksum)
- problem      JSON graph edges, c_±, seed
- kernel       CSV of entries + sidecar JSON (KernelProvenance) with the same stem
- model        JSON SvmModelRecord
- trace        JSON lines, one TraceRecord per line
- plot data    CSVs with a header row
"""

import csv
import hashlib
import io
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ValidationError

from models.errors import InvalidInputError
from models.schemas import KernelProvenance, ProblemRecord, SvmModelRecord, TraceRecord
from services.kernel_service import KernelMatrix
from services.lce_service import Dataset, LceProblem
from services.svm_service import SvmModel

logger = logging.getLogger(__name__)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def file_checksum(path: str | Path) -> str:
    return sha256_bytes(Path(path).read_bytes())


def atomic_write_bytes(path: str | Path, data: bytes) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def atomic_write_text(path: str | Path, text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))


def write_json(path: str | Path, payload) -> Path:
    if isinstance(payload, BaseModel):
        text = payload.model_dump_json(indent=2)
    else:
        text = json.dumps(payload, indent=2, sort_keys=True)
    return atomic_write_text(path, text + "\n")


def _read_json(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise InvalidInputError(f"file not found: {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise InvalidInputError(f"{path}: invalid JSON ({e})") from e


def _read_model(path: str | Path, model: type[BaseModel]):
    try:
        return model.model_validate(_read_json(path))
    except ValidationError as e:
        raise InvalidInputError(f"{path}: {e}") from e


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    return atomic_write_text(path, csv_text(header, rows))


def _read_csv(path: str | Path) -> tuple[list[str], list[list[str]]]:
    path = Path(path)
    if not path.exists():
        raise InvalidInputError(f"file not found: {path}")
    rows = list(csv.reader(io.StringIO(path.read_text())))
    if not rows:
        raise InvalidInputError(f"{path}: empty file")
    return rows[0], rows[1:]


# ── Datasets and Problems ────────────────────────────────────

def dataset_csv(ds: Dataset) -> str:
    header = ["label"] + [f"theta_{k}" for k in range(ds.thetas.shape[1])]
    return csv_text(header, ([int(y)] + [float(t) for t in theta] for theta, y in zip(ds.thetas, ds.labels)))


def write_dataset(path: str | Path, ds: Dataset) -> str:
    """Returns the dataset checksum."""
    text = dataset_csv(ds)
    atomic_write_text(path, text)
    checksum = sha256_bytes(text.encode("utf-8"))
    logger.info("Wrote dataset %s (%d points, sha256 %s)", path, len(ds), checksum[:12])
    return checksum


def read_dataset(path: str | Path) -> Dataset:
    header, rows = _read_csv(path)
    if not header or header[0] != "label" or any(h != f"theta_{k}" for k, h in enumerate(header[1:])):
        raise InvalidInputError(f"{path}: expected header label,theta_0,…")
    try:
        labels = [int(r[0]) for r in rows]
        thetas = [[float(v) for v in r[1:]] for r in rows]
    except (ValueError, IndexError) as e:
        raise InvalidInputError(f"{path}: malformed row ({e})") from e
    if any(len(t) != len(header) - 1 for t in thetas):
        raise InvalidInputError(f"{path}: ragged rows")
    return Dataset(
        np.array(thetas).reshape(len(rows), len(header) - 1),
        np.array(labels, dtype=int),
        {"path": str(path), "checksum": file_checksum(path)},
    )


def write_problem(path: str | Path, problem: LceProblem) -> Path:
    record = ProblemRecord(
        n=problem.n,
        edges=list(problem.graph.edges),
        c_plus=[float(v) for v in problem.c_plus],
        c_minus=[float(v) for v in problem.c_minus],
        seed=problem.seed,
    )
    return write_json(path, record)


def read_problem(path: str | Path) -> ProblemRecord:
    return _read_model(path, ProblemRecord)


# ── Kernels and Models ───────────────────────────────────────

def sidecar_path(path: str | Path) -> Path:
    return Path(path).with_suffix(".json")


def write_kernel(path: str | Path, K: KernelMatrix) -> str:
    """Matrix CSV plus provenance sidecar; returns the matrix checksum."""
    cols = K.values.shape[1]
    text = csv_text([f"col_{j}" for j in range(cols)], ([float(v) for v in row] for row in K.values))
    atomic_write_text(path, text)
    write_json(sidecar_path(path), K.provenance)
    checksum = sha256_bytes(text.encode("utf-8"))
    logger.info("Wrote kernel %s %s (sha256 %s)", path, K.values.shape, checksum[:12])
    return checksum


def read_kernel(path: str | Path) -> tuple[KernelMatrix, str]:
    """Returns the matrix and the checksum of its CSV bytes."""
    header, rows = _read_csv(path)
    try:
        values = np.array([[float(v) for v in r] for r in rows], dtype=float)
    except ValueError as e:
        raise InvalidInputError(f"{path}: malformed kernel entry ({e})") from e
    values = values.reshape(len(rows), len(header))
    provenance = _read_model(sidecar_path(path), KernelProvenance)
    if tuple(provenance.shape) != values.shape:
        raise InvalidInputError(f"{path}: sidecar shape {provenance.shape} != matrix {values.shape}")
    return KernelMatrix(values, provenance), file_checksum(path)


def write_model(path: str | Path, model: SvmModel) -> Path:
    return write_json(path, model.to_record())


def read_model(path: str | Path) -> SvmModel:
    return SvmModel.from_record(_read_model(path, SvmModelRecord))


# ── Alignment Traces ─────────────────────────────────────────

class TraceWriter:
    """Appends JSON-lines records to `<path>.partial`; close() moves it into place."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.partial = self.path.with_name(self.path.name + ".partial")
        self._f = open(self.partial, "w", encoding="utf-8")

    def write(self, record: TraceRecord):
        self._f.write(record.model_dump_json() + "\n")
        self._f.flush()

    def close(self, keep_partial: bool = False):
        if self._f.closed:
            return
        self._f.close()
        if not keep_partial:
            os.replace(self.partial, self.path)

    def __enter__(self) -> "TraceWriter":
        return self

    def __exit__(self, exc_type, exc, tb):
        # a failed run leaves its partial trace for inspection
        self.close(keep_partial=exc_type is not None)


def read_trace(path: str | Path) -> list[TraceRecord]:
    path = Path(path)
    if not path.exists():
        raise InvalidInputError(f"file not found: {path}")
    records = []
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        if not line.strip():
            continue
        try:
            records.append(TraceRecord.model_validate_json(line))
        except ValidationError as e:
            raise InvalidInputError(f"{path}:{lineno}: {e}") from e
    return records


# ── Plot Data ────────────────────────────────────────────────

def write_cost_vs_step(out: Path, records: Sequence[TraceRecord]) -> Path:
    return write_csv(out / "cost_vs_step.csv", ["step", "lambda", "F_plus", "F_minus", "cost"], (
        [r.step, " ".join(_fmt(v) for v in r.lam),
         "" if r.f_plus is None else r.f_plus,
         "" if r.f_minus is None else r.f_minus,
         r.cost]
        for r in records
    ))


def write_accuracy_vs_step(out: Path, records: Sequence[TraceRecord]) -> Optional[Path]:
    rows = [[r.step, r.test_accuracy] for r in records if r.test_accuracy is not None]
    if not rows:
        return None
    return write_csv(out / "accuracy_vs_step.csv", ["step", "accuracy"], rows)


def write_gram(out: Path, name: str, values: np.ndarray) -> Path:
    """Long format (i, j, value) for heatmaps."""
    values = np.asarray(values, dtype=float)
    return write_csv(out / f"gram_{name}.csv", ["i", "j", "value"], (
        [i, j, float(values[i, j])] for i in range(values.shape[0]) for j in range(values.shape[1])
    ))


def write_hamming(out: Path, comparison: dict) -> Path:
    series = list(comparison["hamming"])
    return write_csv(out / "hamming.csv", ["weight"] + series, (
        [w] + [float(comparison["hamming"][s][w]) for s in series] for w in comparison["weights"]
    ))


def write_decision_values(out: Path, values: Sequence[float], labels: Sequence[int],
                          filename: str = "decision_values.csv") -> Path:
    return write_csv(out / filename, ["index", "decision_value", "label"], (
        [i, float(d), int(y)] for i, (d, y) in enumerate(zip(values, labels))
    ))
