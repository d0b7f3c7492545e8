import os

class Config:
    LOG_LEVEL = os.getenv("DOBS_LOG_LEVEL", "INFO")

    RANK_TOL = float(os.getenv("DOBS_RANK_TOL", 1e-9))
    RESIDUAL_TOL = float(os.getenv("DOBS_RESIDUAL_TOL", 1e-9))
    PLACEMENT_TOL = float(os.getenv("DOBS_PLACEMENT_TOL", 1e-6))
    PSD_TOL = float(os.getenv("DOBS_PSD_TOL", 1e-8))
    Q_MARGIN = float(os.getenv("DOBS_Q_MARGIN", 0.1))
    GAIN_MARGIN = float(os.getenv("DOBS_GAIN_MARGIN", 1.1))

    DIVERGENCE_LIMIT = float(os.getenv("DOBS_DIVERGENCE_LIMIT", 1e12))
    DEFAULT_HORIZON = float(os.getenv("DOBS_DEFAULT_HORIZON", 40.0))
    DEFAULT_STEP = float(os.getenv("DOBS_DEFAULT_STEP", 0.004))
    SAMPLE_DECIMATION = int(os.getenv("DOBS_SAMPLE_DECIMATION", 10))
    RK4_STABILITY = float(os.getenv("DOBS_RK4_STABILITY", 2.5))
    ADAPTIVE_RHO_GROWTH = float(os.getenv("DOBS_ADAPTIVE_RHO_GROWTH", 1.05))
    CONVERGENCE_RATIO = float(os.getenv("DOBS_CONVERGENCE_RATIO", 1e-2))

    OUTPUT_DIR = os.getenv("DOBS_OUTPUT_DIR", "results")
