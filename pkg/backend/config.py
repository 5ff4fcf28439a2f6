import os
from dotenv import load_dotenv

load_dotenv()

# Statevector simulation
QUBIT_CAP = int(os.getenv("COKERN_QUBIT_CAP", "24"))   # 2^24 amplitudes ~ 256 MiB
# Unitarity check of caller-supplied gates (1e-9). Set to 0 in hot loops.
VALIDATE_GATES = os.getenv("COKERN_VALIDATE_GATES", "1") not in ("0", "false", "False", "")

# Kernel estimation
KERNEL_THREADS = int(os.getenv("COKERN_THREADS", "1"))
DEFAULT_SHOTS = int(os.getenv("COKERN_SHOTS", "8192"))
DEFAULT_STRETCHES = [
    float(s) for s in os.getenv("COKERN_STRETCHES", "1.0,1.3").split(",") if s.strip()
]

# LCE benchmark
DEFAULT_EPSILON = float(os.getenv("COKERN_EPSILON", "0.01"))   # variance, not std

# SVM dual
DEFAULT_C = float(os.getenv("COKERN_SVM_C", "1.0"))
SVM_TOL = float(os.getenv("COKERN_SVM_TOL", "1e-8"))
SVM_MAX_ITER = int(os.getenv("COKERN_SVM_MAX_ITER", "1000000"))
SUPPORT_TOL = 1e-8

# Outputs
OUTPUT_DIR = os.getenv("COKERN_OUT", "runs")
LOG_LEVEL = os.getenv("COKERN_LOG_LEVEL", "INFO")

# Sweep worker
SWEEP_SEEDS = int(os.getenv("COKERN_SWEEP_SEEDS", "10"))
SWEEP_INSTANCES = os.getenv("COKERN_SWEEP_INSTANCES", "path:5,heavy-hex:5,path:7")
