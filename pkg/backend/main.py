import logging
from contextlib import asynccontextmanager

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

import config
from models.errors import InvalidInputError, NumericalError
from routers import experiments

logging.basicConfig(
    level=getattr(logging, config.LOG_LEVEL.upper(), logging.INFO),
    format="%(asctime)s %(levelname)s %(name)s: %(message)s",
)
logger = logging.getLogger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI):
    logger.info("cokern backend starting up (qubit cap %d, %d kernel threads)",
                config.QUBIT_CAP, config.KERNEL_THREADS)
    yield
    logger.info("cokern backend shut down")


app = FastAPI(
    title="cokern",
    description="Covariant quantum kernel workbench: LCE data, kernels, DLOG and Fourier demos.",
    version="1.0.0",
    lifespan=lifespan,
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_methods=["*"],
    allow_headers=["*"],
)


@app.exception_handler(InvalidInputError)
async def invalid_input(request: Request, exc: InvalidInputError):
    return JSONResponse(status_code=400, content={"error": str(exc)})


@app.exception_handler(NumericalError)
async def numerical_failure(request: Request, exc: NumericalError):
    logger.error("Numerical failure on %s: %s", request.url.path, exc)
    return JSONResponse(status_code=500, content={"error": str(exc)})


app.include_router(experiments.router, tags=["Experiments"])


@app.get("/api/status")
async def api_status():
    return {
        "service": "cokern",
        "status": "running",
        "qubit_cap": config.QUBIT_CAP,
        "kernel_threads": config.KERNEL_THREADS,
        "default_shots": config.DEFAULT_SHOTS,
        "stretches": config.DEFAULT_STRETCHES,
    }


@app.get("/health")
async def health():
    return {"status": "ok"}
