"""
Configuration settings for the FD-MIMO Elevation Beamforming Simulator
"""

from pydantic_settings import BaseSettings
from typing import List
import os


class Settings(BaseSettings):
    """Process-level settings (experiment files are parsed separately)"""

    # Project information
    PROJECT_NAME: str = "FD-MIMO Elevation Beamforming Simulator"
    VERSION: str = "1.0.0"
    DESCRIPTION: str = "Array patterns, 3D channels, spatial correlation and downtilt optimization for FD-MIMO"

    # Environment
    ENVIRONMENT: str = os.getenv("ENVIRONMENT", "development")
    DEBUG: bool = os.getenv("DEBUG", "false").lower() == "true"

    # Server configuration
    HOST: str = os.getenv("HOST", "0.0.0.0")
    PORT: int = int(os.getenv("PORT", 8000))

    # CORS settings
    ALLOWED_HOSTS: List[str] = [
        "http://localhost:3000",
        "http://127.0.0.1:3000",
    ]

    # Experiment service limits
    MAX_EXPERIMENTS: int = int(os.getenv("MAX_EXPERIMENTS", 50))
    MAX_CONCURRENT_EXPERIMENTS: int = int(os.getenv("MAX_CONCURRENT_EXPERIMENTS", 2))

    # Logging settings
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")
    LOG_FORMAT: str = os.getenv("LOG_FORMAT", "text")  # json or text

    # Monte-Carlo defaults
    DEFAULT_SEED: int = int(os.getenv("DEFAULT_SEED", 20170101))
    DEFAULT_TRIALS: int = int(os.getenv("DEFAULT_TRIALS", 5000))
    DEFAULT_THREADS: int = int(os.getenv("DEFAULT_THREADS", 1))

    # Quadrature (nested Gauss-Legendre refinement)
    QUAD_ABS_TOL: float = float(os.getenv("QUAD_ABS_TOL", 1e-6))
    QUAD_MIN_NODES: int = int(os.getenv("QUAD_MIN_NODES", 32))
    QUAD_MAX_NODES: int = int(os.getenv("QUAD_MAX_NODES", 1024))

    # Statistical downtilt beamforming
    SDB_TOLERANCE: float = float(os.getenv("SDB_TOLERANCE", 1e-6))
    SDB_MAX_ITERATIONS: int = int(os.getenv("SDB_MAX_ITERATIONS", 50))
    SDB_RANDOMIZATIONS: int = int(os.getenv("SDB_RANDOMIZATIONS", 200))
    SDB_SOLVER: str = os.getenv("SDB_SOLVER", "CLARABEL")

    # Numerical tolerances for covariance matrices
    PSD_CLAMP_TOL: float = float(os.getenv("PSD_CLAMP_TOL", 1e-10))
    HERMITIAN_TOL: float = float(os.getenv("HERMITIAN_TOL", 1e-8))

    class Config:
        env_file = ".env"
        env_file_encoding = "utf-8"
        case_sensitive = True
        extra = "ignore"


# Create settings instance
settings = Settings()

# Environment-specific overrides
if settings.ENVIRONMENT == "production":
    settings.DEBUG = False
    settings.LOG_LEVEL = "WARNING"
elif settings.ENVIRONMENT == "testing":
    settings.DEFAULT_TRIALS = 200
    settings.LOG_FORMAT = "text"
