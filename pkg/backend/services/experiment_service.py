"""
Experiment Commands
Bodies of the `cokern` subcommands; the HTTP routes and the sweep worker
call the same functions. Every command reads and writes under cfg.out:

  gen-lce        train.csv, test.csv, problem.json, config.json
  kernel         kernel_<name>.csv + kernel_<name>.json, gram_<name>.csv
  align          trace.jsonl, lambda_star.json, model.json, kernel_aligned.csv,
                 cost_vs_step.csv, accuracy_vs_step.csv
  train          model.json
  predict        predictions.csv
  diagnose       metrics.json, decision_report.json, decision_values.csv, hamming.csv
  dlog-demo      dlog_demo.json
  fourier-check  fourier_check.json
"""

import logging
from pathlib import Path
from typing import Optional

import numpy as np

from models.errors import InvalidInputError
from models.schemas import ExperimentConfig
from services import artifact_store as store
from services import svm_service
from services.alignment_service import align
from services.analysis_service import decision_report, hamming_comparison, metrics_report
from services.fourier_service import build_fiducial, build_group, fourier_check
from services.group_service import ZpStarGroup, datum_to_unitaries, dlog_brute, dlog_kernel_matrix
from services.kernel_service import build_kernel_matrix
from services.lce_service import Dataset, build_graph, generate_dataset, new_problem
from services.statevector_service import CouplingGraph

logger = logging.getLogger(__name__)

TEST_SEED_OFFSET = 1_000_003
FOURIER_TOL = 1e-9


def _out(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _graph(cfg: ExperimentConfig) -> CouplingGraph:
    return build_graph(cfg.graph, cfg.n, cfg.graph_file)


def _path(value: Optional[str | Path], default: Path) -> Path:
    return Path(value) if value else default


def _require_checksum(kind: str, expected: Optional[str], actual: Optional[str]):
    if expected is None or actual is None or expected != actual:
        raise InvalidInputError(
            f"{kind} checksum mismatch: expected {(expected or 'none')[:12]}, got {(actual or 'none')[:12]}"
        )


# ── LCE Data ─────────────────────────────────────────────────

def lce_datasets(cfg: ExperimentConfig):
    """(problem, train, test) for the configured graph and seeds."""
    graph = _graph(cfg)
    problem = new_problem(graph, cfg.data_seed)
    train = generate_dataset(problem, cfg.train_per_label, cfg.epsilon, cfg.data_seed)
    test = generate_dataset(problem, cfg.test_per_label, cfg.epsilon, cfg.data_seed + TEST_SEED_OFFSET)
    return problem, train, test


def cmd_gen_lce(cfg: ExperimentConfig) -> dict:
    out = _out(cfg)
    problem, train, test = lce_datasets(cfg)
    summary = {
        "n": problem.n,
        "edges": len(problem.graph.edges),
        "epsilon": cfg.epsilon,
        "seed": cfg.data_seed,
        "train": len(train),
        "test": len(test),
        "train_checksum": store.write_dataset(out / "train.csv", train),
        "test_checksum": store.write_dataset(out / "test.csv", test),
    }
    store.write_problem(out / "problem.json", problem)
    store.write_json(out / "config.json", cfg)
    logger.info("gen-lce: n=%d, %d train / %d test points, eps=%g, seed=%d",
                problem.n, len(train), len(test), cfg.epsilon, cfg.data_seed)
    return summary


# ── Kernels ──────────────────────────────────────────────────

def cmd_kernel(
    cfg: ExperimentConfig,
    rows_path: Optional[str] = None,
    cols_path: Optional[str] = None,
    name: Optional[str] = None,
) -> dict:
    out = _out(cfg)
    rows_path = _path(rows_path, out / "train.csv")
    cols_path = _path(cols_path, rows_path)
    rows = store.read_dataset(rows_path)
    same = rows_path.resolve() == cols_path.resolve()
    cols = rows if same else store.read_dataset(cols_path)
    if name is None:
        name = rows_path.stem if same else f"{rows_path.stem}_{cols_path.stem}"

    K = build_kernel_matrix(rows, cols, _graph(cfg), cfg.kernel_config(), symmetric=same)
    K.provenance = K.provenance.model_copy(update={
        "row_checksum": rows.provenance["checksum"],
        "col_checksum": cols.provenance["checksum"],
    })
    path = out / f"kernel_{name}.csv"
    checksum = store.write_kernel(path, K)
    store.write_gram(out, name, K.values)
    return {
        "path": str(path),
        "shape": list(K.values.shape),
        "checksum": checksum,
        "provenance": K.provenance.model_dump(mode="json"),
    }


# ── Alignment ────────────────────────────────────────────────

def _load_or_generate(cfg: ExperimentConfig) -> tuple[Dataset, Dataset]:
    out = _out(cfg)
    train_path, test_path = out / "train.csv", out / "test.csv"
    if not train_path.exists():
        cmd_gen_lce(cfg)
    train = store.read_dataset(train_path)
    test = store.read_dataset(test_path) if test_path.exists() else None
    return train, test


def cmd_align(cfg: ExperimentConfig) -> dict:
    out = _out(cfg)
    train, test = _load_or_generate(cfg)
    graph = _graph(cfg)
    scfg = cfg.spsa_config()
    kcfg = cfg.kernel_config()

    with store.TraceWriter(out / "trace.jsonl") as writer:
        trace = align(train, graph, kcfg, scfg, cfg.C, test=test, on_record=writer.write)

    lam_star = [float(v) for v in trace.lam_star]
    trace.kernel.provenance = trace.kernel.provenance.model_copy(update={
        "row_checksum": train.provenance["checksum"],
        "col_checksum": train.provenance["checksum"],
    })
    kernel_checksum = store.write_kernel(out / "kernel_aligned.csv", trace.kernel)
    trace.model.kernel_checksum = kernel_checksum
    trace.model.dataset_checksum = train.provenance["checksum"]
    store.write_model(out / "model.json", trace.model)
    store.write_json(out / "lambda_star.json", {"lambda_star": lam_star, "steps": scfg.steps})
    store.write_cost_vs_step(out, trace.records)
    store.write_accuracy_vs_step(out, trace.records)

    final = trace.records[-1]
    logger.info("align: λ* = %s, final cost %.6f", [round(v, 6) for v in lam_star], final.cost)
    return {
        "lambda_star": lam_star,
        "records": len(trace.records),
        "initial_cost": trace.records[0].cost,
        "final_cost": final.cost,
        "test_accuracy": final.test_accuracy,
    }


# ── Training and Prediction ──────────────────────────────────

def cmd_train(cfg: ExperimentConfig, kernel_path: Optional[str] = None, data_path: Optional[str] = None) -> dict:
    out = _out(cfg)
    K, kernel_checksum = store.read_kernel(_path(kernel_path, out / "kernel_train.csv"))
    data = store.read_dataset(_path(data_path, out / "train.csv"))
    if not K.is_square:
        raise InvalidInputError(f"training kernel must be square, got {K.shape}")
    _require_checksum("training kernel rows", data.provenance["checksum"], K.provenance.row_checksum)
    _require_checksum("training kernel cols", data.provenance["checksum"], K.provenance.col_checksum)

    model, report = svm_service.solve_dual(K.values, data.labels, cfg.C)
    model.kernel_checksum = kernel_checksum
    model.dataset_checksum = data.provenance["checksum"]
    store.write_model(out / "model.json", model)
    accuracy = float(np.mean(svm_service.predict(model, K.values) == data.labels))
    logger.info("train: F*=%.6f, %d support vectors, training accuracy %.3f",
                report.objective, model.support.size, accuracy)
    return {
        "objective": report.objective,
        "iterations": report.iterations,
        "kkt_violation": report.kkt_violation,
        "converged": report.converged,
        "support": model.support.size,
        "train_accuracy": accuracy,
    }


def _checked_model_and_kernel(out: Path, model_path, kernel_path):
    model = store.read_model(_path(model_path, out / "model.json"))
    K, _ = store.read_kernel(_path(kernel_path, out / "kernel_test_train.csv"))
    _require_checksum("kernel columns vs model", model.dataset_checksum, K.provenance.col_checksum)
    return model, K


def cmd_predict(cfg: ExperimentConfig, model_path: Optional[str] = None, kernel_path: Optional[str] = None) -> dict:
    out = _out(cfg)
    model, K = _checked_model_and_kernel(out, model_path, kernel_path)
    values = svm_service.decision_values(model, K.values)
    labels = np.where(values >= 0, 1, -1)
    path = store.write_decision_values(out, values, labels, filename="predictions.csv")
    logger.info("predict: %d points -> %s", labels.size, path)
    return {"path": str(path), "labels": labels.tolist(), "decision_values": values.tolist()}


def cmd_diagnose(
    cfg: ExperimentConfig,
    model_path: Optional[str] = None,
    kernel_path: Optional[str] = None,
    data_path: Optional[str] = None,
    train_kernel_path: Optional[str] = None,
    train_path: Optional[str] = None,
) -> dict:
    out = _out(cfg)
    model, K_test = _checked_model_and_kernel(out, model_path, kernel_path)
    test = store.read_dataset(_path(data_path, out / "test.csv"))
    _require_checksum("kernel rows vs test data", test.provenance["checksum"], K_test.provenance.row_checksum)

    K_train = None
    train_kernel = _path(train_kernel_path, out / "kernel_train.csv")
    if train_kernel.exists():
        K, _ = store.read_kernel(train_kernel)
        _require_checksum("training kernel vs model", model.dataset_checksum, K.provenance.row_checksum)
        K_train = K.values

    report = metrics_report(model, K_test.values, test.labels, K_train)

    train_file = _path(train_path, out / "train.csv")
    if train_file.exists() and len(test):
        train = store.read_dataset(train_file)
        kcfg = cfg.kernel_config()
        stretches = kcfg.stretches if len(kcfg.stretches) >= 2 else [1.0, 1.3]
        comparison = hamming_comparison(
            datum_to_unitaries(test.thetas[0]),
            datum_to_unitaries(train.thetas[0]),
            _graph(cfg),
            kcfg.lam,
            kcfg.p_dep,
            stretches,
            side=kcfg.side,
            shots=kcfg.shots if kcfg.samples else None,
            rng=np.random.default_rng([kcfg.seed, 0]),
        )
        report.tvd = comparison["tvd"]
        store.write_hamming(out, comparison)

    store.write_json(out / "metrics.json", report)
    store.write_json(out / "decision_report.json", decision_report(model, K_test.values, test.labels))
    store.write_decision_values(out, report.decision_values, test.labels)
    logger.info("diagnose: accuracy %.4f (%d misclassified)", report.accuracy, len(report.misclassified))
    return report.model_dump(mode="json")


# ── Demonstrations ───────────────────────────────────────────

def dlog_label(grp: ZpStarGroup, x: int, s: int) -> int:
    """+1 iff DLOG_g(x) ∈ [s, s + (p−3)/2]."""
    return 1 if s <= dlog_brute(grp, x) <= s + (grp.p - 3) // 2 else -1


def cmd_dlog_demo(
    p: int = 7,
    g: int = 3,
    k: int = 1,
    s: int = 0,
    m: Optional[int] = None,
    seed: int = 0,
    C: float = 1.0,
    out: Optional[str] = None,
) -> dict:
    """Train on the DLOG kernel over Z*_p.

    With m unset the whole group is both training and evaluation set; with m
    set, m random elements train and the rest are held out.
    """
    grp = ZpStarGroup(p, g, k)
    if not 0 <= s <= grp.order - 1 - (p - 3) // 2:
        raise InvalidInputError(f"interval start s={s} leaves [s, s+(p−3)/2] outside [0, {grp.order})")
    if k == 0:
        logger.warning("k=0 fiducial: the DLOG kernel is the identity matrix; expect chance-level test accuracy")

    elements = np.arange(1, p)
    labels = np.array([dlog_label(grp, int(x), s) for x in elements])
    rng = np.random.default_rng(seed)
    if m is None:
        train_idx = test_idx = np.arange(elements.size)
    else:
        if not 2 <= m < elements.size:
            raise InvalidInputError(f"m must lie in [2, {elements.size}), got {m}")
        order = rng.permutation(elements.size)
        train_idx, test_idx = np.sort(order[:m]), np.sort(order[m:])

    x_train = elements[train_idx].tolist()
    x_test = elements[test_idx].tolist()
    K_train = dlog_kernel_matrix(grp, x_train)
    K_test = dlog_kernel_matrix(grp, x_test, x_train)
    model, report = svm_service.solve_dual(K_train, labels[train_idx], C)
    result = {
        "p": p, "g": g, "k": k, "s": s, "m": m, "seed": seed,
        "train_elements": x_train,
        "test_elements": x_test,
        "train_accuracy": float(np.mean(svm_service.predict(model, K_train) == labels[train_idx])),
        "test_accuracy": float(np.mean(svm_service.predict(model, K_test) == labels[test_idx])),
        "objective": report.objective,
        "identity_kernel": bool(np.allclose(K_train, np.eye(len(x_train)))),
    }
    logger.info("dlog-demo p=%d k=%d: train %.3f, test %.3f",
                p, k, result["train_accuracy"], result["test_accuracy"])
    if out:
        store.write_json(Path(out) / "dlog_demo.json", result)
    return result


def cmd_fourier_check(group: str = "Z5", fiducial: str = "uniform", out: Optional[str] = None) -> dict:
    gm = build_group(group)
    report = fourier_check(gm, build_fiducial(gm, fiducial))
    report["fiducial"] = fiducial
    report["tolerance"] = FOURIER_TOL
    report["passed"] = bool(report["max_error"] <= FOURIER_TOL and report["completeness_error"] <= FOURIER_TOL)
    if not report["passed"]:
        logger.error("Fourier round-trip error %.3e exceeds %.0e", report["max_error"], FOURIER_TOL)
    if out:
        store.write_json(Path(out) / "fourier_check.json", report)
    return report
