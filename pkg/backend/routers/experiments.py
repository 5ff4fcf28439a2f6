"""
Experiment API
- POST /api/lce           : Generate an LCE dataset (returned inline)
- POST /api/kernel        : Exact or sampled Gram matrix of an LCE training set
- POST /api/dlog-demo     : DLOG kernel classification on Z*_p
- POST /api/fourier-check : Fourier round-trip of a covariant kernel
"""

import logging

from fastapi import APIRouter

from models.schemas import DlogDemoRequest, FourierCheckRequest, KernelConfig, KernelRequest, LceRequest
from services import experiment_service
from services.kernel_service import build_kernel_matrix
from services.lce_service import build_graph, generate_dataset, new_problem

logger = logging.getLogger(__name__)
router = APIRouter()


def _lce(req: LceRequest):
    graph = build_graph(req.graph, req.n)
    problem = new_problem(graph, req.seed)
    return problem, generate_dataset(problem, req.per_label, req.epsilon, req.seed)


@router.post("/api/lce")
def create_lce(req: LceRequest):
    problem, ds = _lce(req)
    return {
        "n": problem.n,
        "edges": [list(e) for e in problem.graph.edges],
        "c_plus": problem.c_plus.tolist(),
        "c_minus": problem.c_minus.tolist(),
        "labels": ds.labels.tolist(),
        "thetas": ds.thetas.tolist(),
    }


@router.post("/api/kernel")
def create_kernel(req: KernelRequest):
    problem, ds = _lce(req.lce)
    cfg = KernelConfig(mode=req.mode, shots=req.shots, p_dep=req.p_dep, lam=req.lam, seed=req.seed)
    K = build_kernel_matrix(ds, ds, problem.graph, cfg)
    logger.info("API kernel: %s on n=%d, %d points", cfg.mode.value, problem.n, len(ds))
    return {
        "labels": ds.labels.tolist(),
        "values": K.values.tolist(),
        "provenance": K.provenance.model_dump(mode="json"),
    }


@router.post("/api/dlog-demo")
def dlog_demo(req: DlogDemoRequest):
    return experiment_service.cmd_dlog_demo(req.p, req.g, req.k, req.s, req.m, seed=req.seed, C=req.C)


@router.post("/api/fourier-check")
def fourier_check(req: FourierCheckRequest):
    return experiment_service.cmd_fourier_check(req.group, req.fiducial)
