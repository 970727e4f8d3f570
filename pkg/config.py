import os
from dotenv import load_dotenv

load_dotenv()


def _float_list(raw: str) -> list:
    return [float(item) for item in raw.split(",") if item.strip()]


def _int_list(raw: str) -> list:
    return [int(float(item)) for item in raw.split(",") if item.strip()]


class Config:
    CHEB_N = int(os.getenv("WKB_CHEB_N", "20"))
    REFINE = int(os.getenv("WKB_REFINE", "64"))
    RK_TOL = float(os.getenv("WKB_RK_TOL", "1e-12"))

    ADMISSIBILITY_SAMPLES = int(os.getenv("WKB_ADMISSIBILITY_SAMPLES", "257"))
    ACCURACY_SAMPLES = int(os.getenv("WKB_ACCURACY_SAMPLES", "1000"))

    CHUNK_SIZE = int(os.getenv("WKB_CHUNK_SIZE", "65536"))
    N_JOBS = int(os.getenv("WKB_N_JOBS", "1"))
    MAX_REFERENCE_STEPS = int(float(os.getenv("WKB_MAX_REFERENCE_STEPS", "2e8")))

    OUTPUT_DIR = os.getenv("WKB_OUTPUT_DIR", "results")
    COEFFICIENT = os.getenv("WKB_COEFFICIENT", "gauss")

    EPSILONS = _float_list(os.getenv("WKB_EPSILONS", "1e-1,1e-2,1e-3,1e-4,1e-5"))
    GRID_SIZES = _int_list(os.getenv(
        "WKB_GRID_SIZES",
        "1,4,10,40,100,400,1000,4000,1e4,4e4,1e5,1e6"
    ))
    # epsilons below this stop at SMALL_EPS_MAX_GRID intervals
    FULL_GRID_EPS = float(os.getenv("WKB_FULL_GRID_EPS", "1e-2"))
    SMALL_EPS_MAX_GRID = int(float(os.getenv("WKB_SMALL_EPS_MAX_GRID", "1e4")))

    @classmethod
    def validate(cls):
        if cls.CHEB_N < 8:
            raise ValueError("WKB_CHEB_N must be >= 8")
        if cls.REFINE < 1:
            raise ValueError("WKB_REFINE must be >= 1")
        if cls.RK_TOL < 1e-13:
            raise ValueError("WKB_RK_TOL must be >= 1e-13")
        if cls.ADMISSIBILITY_SAMPLES < 32:
            raise ValueError("WKB_ADMISSIBILITY_SAMPLES must be >= 32")
        if cls.CHUNK_SIZE < 1:
            raise ValueError("WKB_CHUNK_SIZE must be >= 1")
        if not cls.EPSILONS:
            raise ValueError("WKB_EPSILONS must not be empty")
        if not cls.GRID_SIZES or min(cls.GRID_SIZES) < 1:
            raise ValueError("WKB_GRID_SIZES must list positive interval counts")
        return True


config = Config()
