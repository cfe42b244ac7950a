"""
Options of the statistical downtilt beamforming optimizer
"""

from pydantic import BaseModel, Field

from app.config import settings


class SdbOptions(BaseModel):
    """Dinkelbach, relaxation and randomization controls"""
    tolerance: float = Field(default_factory=lambda: settings.SDB_TOLERANCE, gt=0,
                             description="Stop once |F(lambda)| falls below this")
    max_iterations: int = Field(default_factory=lambda: settings.SDB_MAX_ITERATIONS, ge=1)
    randomizations: int = Field(default_factory=lambda: settings.SDB_RANDOMIZATIONS, ge=0,
                                description="Gaussian candidates drawn from the relaxed solution")
    refine_starts: int = Field(4, ge=0, description="Best randomized candidates polished by a local search")
    solver: str = Field(default_factory=lambda: settings.SDB_SOLVER, description="cvxpy solver name")
    fallback_solver: str = "SCS"
    seed: int = Field(0, ge=0, description="Seed of the randomization candidate stream")

    class Config:
        frozen = True
        extra = "forbid"
