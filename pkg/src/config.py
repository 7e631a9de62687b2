import os
from dotenv import load_dotenv

load_dotenv()


def _float(name: str, default: float) -> float:
    return float(os.getenv(name, default))


def _int(name: str, default: int) -> int:
    return int(os.getenv(name, default))


class Config:
    # Sampling / reproducibility
    SEED = _int("FASTDIFF_SEED", 20240501)
    DEFAULT_SAMPLES = _int("FASTDIFF_SAMPLES", 1000)
    SAMPLE_CHUNK = _int("FASTDIFF_SAMPLE_CHUNK", 4096)

    # Verification thresholds
    RESIDUAL_THRESHOLD = _float("FASTDIFF_THRESHOLD", 1e-6)
    SINGULAR_MARGIN = _float("FASTDIFF_SINGULAR_MARGIN", 1e-3)
    POSITIVITY_FLOOR = _float("FASTDIFF_POSITIVITY_FLOOR", 1e-12)
    GRADIENT_FLOOR = _float("FASTDIFF_GRADIENT_FLOOR", 1e-2)
    T_MIN = _float("FASTDIFF_T_MIN", 1e-3)
    PAIR_TOLERANCE = _float("FASTDIFF_PAIR_TOLERANCE", 1e-8)
    PAIR_SAMPLES = _int("FASTDIFF_PAIR_SAMPLES", 64)
    PRECONDITION_SAMPLES = 50

    # Solver
    NEWTON_TOL = _float("FASTDIFF_NEWTON_TOL", 1e-10)
    NEWTON_MAX_ITER = _int("FASTDIFF_NEWTON_MAX_ITER", 25)
    BLOW_UP = 1e10
    EXPECTED_ORDER_BAND = (1.5, 2.5)

    LOG_LEVEL = os.getenv("FASTDIFF_LOG_LEVEL", "INFO").upper()
    DEBUG = os.getenv("FASTDIFF_DEBUG", "False").lower() == "true"


config = Config()
