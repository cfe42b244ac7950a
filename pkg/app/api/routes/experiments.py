"""
Experiment API endpoints
"""

from fastapi import APIRouter, Depends

from app.models.experiment import (
    ExperimentListResponse,
    ExperimentRequest,
    ExperimentResponse,
    ExperimentResultsResponse,
)
from app.core.experiment_manager import ExperimentManager
from app.api.deps import get_experiment_manager

router = APIRouter()


@router.post("/experiments", response_model=ExperimentResponse, status_code=202)
async def create_experiment(
    request: ExperimentRequest,
    experiment_manager: ExperimentManager = Depends(get_experiment_manager)
) -> ExperimentResponse:
    """
    Submit an experiment; it starts running in the background

    Args:
        request: Experiment configuration and optional id

    Returns:
        Initial experiment state
    """
    experiment_id = experiment_manager.create_experiment(request)
    return experiment_manager.get_experiment(experiment_id)


@router.get("/experiments", response_model=ExperimentListResponse)
async def list_experiments(
    experiment_manager: ExperimentManager = Depends(get_experiment_manager)
) -> ExperimentListResponse:
    return experiment_manager.list_experiments()


@router.get("/experiments/{experiment_id}", response_model=ExperimentResponse)
async def get_experiment(
    experiment_id: str,
    experiment_manager: ExperimentManager = Depends(get_experiment_manager)
) -> ExperimentResponse:
    """Status and progress of one experiment"""
    return experiment_manager.get_experiment(experiment_id)


@router.get("/experiments/{experiment_id}/results", response_model=ExperimentResultsResponse)
async def get_experiment_results(
    experiment_id: str,
    experiment_manager: ExperimentManager = Depends(get_experiment_manager)
) -> ExperimentResultsResponse:
    """
    Result rows of a completed experiment

    Returns 409 while the experiment is still running or failed.
    """
    return experiment_manager.get_results(experiment_id)


@router.post("/experiments/{experiment_id}/cancel", response_model=ExperimentResponse)
async def cancel_experiment(
    experiment_id: str,
    experiment_manager: ExperimentManager = Depends(get_experiment_manager)
) -> ExperimentResponse:
    experiment_manager.cancel_experiment(experiment_id)
    return experiment_manager.get_experiment(experiment_id)


@router.delete("/experiments/{experiment_id}")
async def delete_experiment(
    experiment_id: str,
    experiment_manager: ExperimentManager = Depends(get_experiment_manager)
):
    experiment_manager.delete_experiment(experiment_id)
    return {"message": f"Experiment {experiment_id} deleted"}
