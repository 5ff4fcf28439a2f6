"""
cokern LCE Sweep
Runs the end-to-end benchmark at λ = π/2 with exact kernels for every
configured (graph, n) instance over SWEEP_SEEDS seeds.

Per seed:
1. Generate the LCE problem and train/test data
2. Build the training and test-vs-train kernels
3. Solve the SVM dual and score the test set
Per instance: mean test accuracy, number of perfect seeds, runtime.

Usage: python -m worker.sweep
"""

import logging
import math
import os
import sys
import time

# Add parent directory to path so imports work
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from dotenv import load_dotenv
load_dotenv()

import numpy as np

import config
from models.schemas import ExperimentConfig, KernelMode
from services import artifact_store, experiment_service, svm_service
from services.kernel_service import build_kernel_matrix

logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s %(levelname)s %(name)s: %(message)s",
)
logger = logging.getLogger("cokern.sweep")


def parse_instances(spec: str) -> list[tuple[str, int]]:
    """`path:5,heavy-hex:7` -> [("path", 5), ("heavy-hex", 7)]."""
    instances = []
    for item in spec.split(","):
        if not item.strip():
            continue
        name, _, n = item.strip().rpartition(":")
        instances.append((name, int(n)))
    return instances


def run_seed(graph: str, n: int, seed: int, **overrides) -> float:
    cfg = ExperimentConfig(graph=graph, n=n, data_seed=seed, mode=KernelMode.EXACT, lam=math.pi / 2, **overrides)
    problem, train, test = experiment_service.lce_datasets(cfg)
    kcfg = cfg.kernel_config()
    K_train = build_kernel_matrix(train, train, problem.graph, kcfg)
    K_test = build_kernel_matrix(test, train, problem.graph, kcfg)
    model, _ = svm_service.solve_dual(K_train.values, train.labels, cfg.C)
    return float(np.mean(svm_service.predict(model, K_test.values) == test.labels))


def run_instance(graph: str, n: int, seeds: int, **overrides) -> dict:
    started = time.time()
    accuracies = []
    for seed in range(seeds):
        seed_start = time.time()
        acc = run_seed(graph, n, seed, **overrides)
        accuracies.append(acc)
        logger.info("%s n=%d seed=%d: accuracy %.4f (%.1fs)", graph, n, seed, acc, time.time() - seed_start)
    summary = {
        "graph": graph,
        "n": n,
        "seeds": seeds,
        "accuracies": accuracies,
        "mean_accuracy": float(np.mean(accuracies)),
        "perfect_seeds": int(sum(a == 1.0 for a in accuracies)),
        "elapsed_seconds": time.time() - started,
    }
    logger.info(
        "%s n=%d: mean accuracy %.4f, %d/%d perfect",
        graph, n, summary["mean_accuracy"], summary["perfect_seeds"], seeds,
    )
    return summary


def main():
    instances = parse_instances(config.SWEEP_INSTANCES)
    logger.info("cokern sweep starting: %d instances x %d seeds", len(instances), config.SWEEP_SEEDS)
    results = []
    for graph, n in instances:
        try:
            results.append(run_instance(graph, n, config.SWEEP_SEEDS))
        except Exception as e:
            logger.error("Instance %s n=%d failed: %s", graph, n, e)
    path = artifact_store.write_json(os.path.join(config.OUTPUT_DIR, "sweep.json"), {"instances": results})
    logger.info("Sweep complete: %s", path)


if __name__ == "__main__":
    main()
