"""
Service probes
"""

from datetime import datetime
from typing import Dict, List

import cvxpy as cp
from fastapi import APIRouter, Depends
from fastapi.responses import JSONResponse

from app.config import settings
from app.api.deps import get_experiment_manager
from app.core.experiment_manager import ExperimentManager
from app.models.experiment import ExperimentStatus

router = APIRouter()


def _sdb_solvers() -> List[str]:
    """Configured SDB solver and fallback, restricted to those cvxpy can load"""
    installed = set(cp.installed_solvers())
    return [name for name in (settings.SDB_SOLVER, "SCS") if name in installed]


@router.get("/api/health")
async def health_check(
    experiment_manager: ExperimentManager = Depends(get_experiment_manager)
) -> Dict:
    """
    Liveness plus experiment counts

    Returns:
        Status, version and the number of running and registered experiments
    """
    counts = experiment_manager.get_manager_stats()["experiments"]
    return {
        "status": "healthy",
        "timestamp": datetime.now().isoformat(),
        "version": settings.VERSION,
        "environment": settings.ENVIRONMENT,
        "experiments_running": counts[ExperimentStatus.RUNNING.value],
        "experiments_total": counts["total"],
    }


@router.get("/api/health/detailed")
async def detailed_health_check(
    experiment_manager: ExperimentManager = Depends(get_experiment_manager)
) -> Dict:
    """Service limits, numerical defaults and per-status experiment counts"""
    return {
        "status": "healthy",
        "timestamp": datetime.now().isoformat(),
        "version": settings.VERSION,
        "environment": settings.ENVIRONMENT,
        "config": {
            "max_experiments": settings.MAX_EXPERIMENTS,
            "max_concurrent_experiments": settings.MAX_CONCURRENT_EXPERIMENTS,
            "default_seed": settings.DEFAULT_SEED,
            "default_trials": settings.DEFAULT_TRIALS,
            "quad_abs_tol": settings.QUAD_ABS_TOL,
            "sdb_solver": settings.SDB_SOLVER,
            "sdb_solvers_available": _sdb_solvers(),
        },
        "statistics": experiment_manager.get_manager_stats(),
    }


@router.get("/api/health/ready")
async def readiness_check():
    """Ready once at least one SDB solver can be loaded"""
    solvers = _sdb_solvers()
    if not solvers:
        return JSONResponse(
            status_code=503,
            content={"status": "unavailable", "detail": "no semidefinite solver installed"},
        )
    return {"status": "ready", "solvers": solvers, "timestamp": datetime.now().isoformat()}


@router.get("/api/health/live")
async def liveness_check() -> Dict:
    return {"status": "alive", "timestamp": datetime.now().isoformat()}
