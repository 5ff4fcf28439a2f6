"""
cokern command line.

Usage: python cokern.py <command> [--config FILE] [--seed N] [--threads N] [--out DIR] [options]

Commands: gen-lce, kernel, align, train, predict, diagnose, dlog-demo, fourier-check.
Exit codes: 0 success, 1 validation error, 2 numerical failure.
"""

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from pydantic import ValidationError

import config
from models.errors import CokernError
from models.schemas import ExperimentConfig
from services import experiment_service

logger = logging.getLogger("cokern")

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2


class CliParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def load_config(path: Optional[str], seed: Optional[int] = None, threads: Optional[int] = None,
                out: Optional[str] = None) -> ExperimentConfig:
    """JSON file (flat keys) with CLI overrides; validated before any compute."""
    data = {}
    if path:
        file = Path(path)
        if not file.exists():
            raise CokernError(f"config file not found: {path}")
        try:
            data = json.loads(file.read_text())
        except json.JSONDecodeError as e:
            raise CokernError(f"{path}: invalid JSON ({e})") from e
    if seed is not None:
        data.update(data_seed=seed, shot_seed=seed, spsa_seed=seed)
    if threads is not None:
        data["threads"] = threads
    if out is not None:
        data["out"] = out
    return ExperimentConfig.model_validate(data)


def build_parser() -> argparse.ArgumentParser:
    base = argparse.ArgumentParser(add_help=False)
    base.add_argument("--out", help="output directory")
    base.add_argument("--log-level", default=config.LOG_LEVEL)

    common = argparse.ArgumentParser(add_help=False, parents=[base])
    common.add_argument("--config", help="experiment JSON file")
    common.add_argument("--seed", type=int, help="overrides data, shot and SPSA seeds")
    common.add_argument("--threads", type=int, help="worker threads for kernel assembly")

    parser = CliParser(prog="cokern", description="Covariant quantum kernel workbench")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("gen-lce", parents=[common], help="generate LCE train/test data")

    p = sub.add_parser("kernel", parents=[common], help="build a kernel matrix")
    p.add_argument("--rows", help="row dataset CSV (default <out>/train.csv)")
    p.add_argument("--cols", help="column dataset CSV (default: same as rows)")
    p.add_argument("--name", help="output name, kernel_<name>.csv")

    sub.add_parser("align", parents=[common], help="SPSA kernel alignment")

    p = sub.add_parser("train", parents=[common], help="solve the SVM dual")
    p.add_argument("--kernel", help="training kernel CSV (default <out>/kernel_train.csv)")
    p.add_argument("--data", help="training dataset CSV (default <out>/train.csv)")

    p = sub.add_parser("predict", parents=[common], help="classify with a trained model")
    p.add_argument("--model", help="model JSON (default <out>/model.json)")
    p.add_argument("--kernel", help="test-vs-train kernel CSV (default <out>/kernel_test_train.csv)")

    p = sub.add_parser("diagnose", parents=[common], help="metrics, geometry and Hamming data")
    p.add_argument("--model")
    p.add_argument("--kernel")
    p.add_argument("--data", help="test dataset CSV (default <out>/test.csv)")
    p.add_argument("--train-kernel")
    p.add_argument("--train-data")

    p = sub.add_parser("dlog-demo", parents=[common], help="DLOG kernel on Z*_p")
    p.add_argument("--p", type=int, default=7)
    p.add_argument("--g", type=int, default=3)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--s", type=int, default=0)
    p.add_argument("--m", type=int, default=None, help="training elements (default: whole group)")
    p.add_argument("--C", type=float, help="SVM regularization (default: config C)")

    p = sub.add_parser("fourier-check", parents=[base], help="Fourier round-trip of a covariant kernel")
    p.add_argument("--group", default="Z5", help="Z<m>, Z*<p> or Z*<p>:<g>")
    p.add_argument("--fiducial", default="uniform", help="uniform, basis or subset[:k]")
    return parser


def run(args: argparse.Namespace) -> int:
    if args.command == "dlog-demo":
        cfg = load_config(args.config, args.seed, args.threads, args.out)
        result = experiment_service.cmd_dlog_demo(
            args.p, args.g, args.k, args.s, args.m,
            seed=cfg.data_seed,
            C=cfg.C if args.C is None else args.C,
            out=cfg.out if (args.config or args.out) else None,
        )
        print(json.dumps(result, indent=2))
        return EXIT_OK
    if args.command == "fourier-check":
        report = experiment_service.cmd_fourier_check(args.group, args.fiducial, out=args.out)
        print(f"{report['group']} / {report['fiducial']}: max reconstruction error "
              f"{report['max_error']:.3e}, completeness {report['completeness_error']:.3e}")
        return EXIT_OK if report["passed"] else EXIT_NUMERICAL

    cfg = load_config(args.config, args.seed, args.threads, args.out)
    if args.command == "gen-lce":
        result = experiment_service.cmd_gen_lce(cfg)
    elif args.command == "kernel":
        result = experiment_service.cmd_kernel(cfg, args.rows, args.cols, args.name)
    elif args.command == "align":
        result = experiment_service.cmd_align(cfg)
    elif args.command == "train":
        result = experiment_service.cmd_train(cfg, args.kernel, args.data)
    elif args.command == "predict":
        result = experiment_service.cmd_predict(cfg, args.model, args.kernel)
    else:
        result = experiment_service.cmd_diagnose(
            cfg, args.model, args.kernel, args.data, args.train_kernel, args.train_data,
        )
    print(json.dumps(result, indent=2, default=str))
    return EXIT_OK


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return run(args)
    except ValidationError as e:
        logger.error("Invalid configuration: %s", e)
        return EXIT_INVALID
    except CokernError as e:
        logger.error("%s failed: %s", args.command, e)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
