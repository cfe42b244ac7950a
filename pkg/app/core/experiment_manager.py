"""
Experiment Manager
Runs submitted experiments in the background and keeps their results
"""

import asyncio
import threading
import uuid
from datetime import datetime
from typing import Dict, Optional
from fastapi import HTTPException
import logging

from pydantic import ValidationError

from app.models.experiment import (
    ExperimentListResponse,
    ExperimentRequest,
    ExperimentResponse,
    ExperimentResultsResponse,
    ExperimentStatus,
)
from app.core.errors import ExperimentCancelledError, SimulatorError
from app.core.experiment_engine import ExperimentEngine
from app.config import settings

logger = logging.getLogger(__name__)


class _Record:
    """Engine plus bookkeeping the API reports"""

    def __init__(self, engine: ExperimentEngine, cancel_event: threading.Event):
        self.engine = engine
        self.cancel_event = cancel_event
        self.created_at = datetime.now()
        self.completed_at: Optional[datetime] = None


class ExperimentManager:
    """
    Manages submitted experiments and their lifecycle

    Each experiment runs on a worker thread (asyncio.to_thread) owned by an
    asyncio task; cancellation sets the engine's cancel event, which is
    checked between drops.
    """

    def __init__(self):
        self.experiments: Dict[str, _Record] = {}
        self.tasks: Dict[str, asyncio.Task] = {}
        self.is_shutdown = False

        logger.info("ExperimentManager initialized")

    async def shutdown(self):
        """Cancel running experiments and wait for their workers"""
        logger.info("Shutting down ExperimentManager...")
        self.is_shutdown = True

        for experiment_id, task in list(self.tasks.items()):
            logger.info(f"Cancelling experiment {experiment_id}")
            record = self.experiments.get(experiment_id)
            if record is not None:
                record.cancel_event.set()
            try:
                await task
            except asyncio.CancelledError:
                pass

        self.experiments.clear()
        self.tasks.clear()
        logger.info("ExperimentManager shutdown complete")

    def _running_count(self) -> int:
        return sum(1 for r in self.experiments.values() if r.engine.status == ExperimentStatus.RUNNING)

    def create_experiment(self, request: ExperimentRequest) -> str:
        """
        Register an experiment and start it in the background

        Raises:
            HTTPException: 429 when a limit is reached, 409 on a duplicate id
        """
        if self.is_shutdown:
            raise HTTPException(status_code=503, detail="Experiment service is shutting down")

        if len(self.experiments) >= settings.MAX_EXPERIMENTS:
            raise HTTPException(
                status_code=429,
                detail=f"Maximum number of experiments ({settings.MAX_EXPERIMENTS}) reached"
            )
        if len(self.tasks) >= settings.MAX_CONCURRENT_EXPERIMENTS:
            raise HTTPException(
                status_code=429,
                detail=f"Maximum concurrent experiments ({settings.MAX_CONCURRENT_EXPERIMENTS}) reached"
            )

        experiment_id = request.experimentId or str(uuid.uuid4())
        if experiment_id in self.experiments:
            raise HTTPException(status_code=409, detail=f"Experiment with ID {experiment_id} already exists")

        cancel_event = threading.Event()
        try:
            engine = ExperimentEngine(experiment_id, request.config, cancel_event)
        except (SimulatorError, ValidationError, ValueError) as e:
            raise HTTPException(status_code=400, detail=f"Invalid experiment: {e}")

        self.experiments[experiment_id] = _Record(engine, cancel_event)
        self.tasks[experiment_id] = asyncio.create_task(self._run(experiment_id))
        logger.info(f"Created experiment {experiment_id} ({request.config.general.scenario.value})")
        return experiment_id

    async def _run(self, experiment_id: str):
        record = self.experiments[experiment_id]
        try:
            await asyncio.to_thread(record.engine.run)
        except ExperimentCancelledError:
            logger.info(f"Experiment {experiment_id} cancelled")
        except Exception as e:
            # the engine already set ERROR and logged the traceback
            logger.warning(f"Experiment {experiment_id} failed: {e}")
        finally:
            record.completed_at = datetime.now()
            self.tasks.pop(experiment_id, None)

    async def wait(self, experiment_id: str) -> ExperimentResponse:
        """Wait for a background experiment to finish"""
        task = self.tasks.get(experiment_id)
        if task is not None:
            await task
        return self.get_experiment(experiment_id)

    def _record(self, experiment_id: str) -> _Record:
        if experiment_id not in self.experiments:
            raise HTTPException(status_code=404, detail="Experiment not found")
        return self.experiments[experiment_id]

    def get_experiment(self, experiment_id: str) -> ExperimentResponse:
        record = self._record(experiment_id)
        engine = record.engine
        return ExperimentResponse(
            experimentId=experiment_id,
            status=engine.status,
            scenario=engine.scenario,
            createdAt=record.created_at,
            completedAt=record.completed_at,
            progress=engine.progress,
            rowCount=len(engine.table),
            error=engine.error,
        )

    def get_results(self, experiment_id: str) -> ExperimentResultsResponse:
        """
        Raises:
            HTTPException: 409 while the experiment has not completed
        """
        record = self._record(experiment_id)
        engine = record.engine
        if engine.status != ExperimentStatus.COMPLETED:
            raise HTTPException(
                status_code=409,
                detail=f"Results unavailable in {engine.status.value} state"
            )
        return ExperimentResultsResponse(
            experimentId=experiment_id,
            rows=list(engine.table.rows),
            metadata={
                "scenario": engine.scenario.value,
                "seed": engine.config.general.seed,
                "trials": engine.config.general.trials,
                "strategies": [s.name for s in engine.strategies],
            },
        )

    def list_experiments(self) -> ExperimentListResponse:
        return ExperimentListResponse(
            experiments=[self.get_experiment(i) for i in self.experiments],
            total=len(self.experiments),
            running=self._running_count(),
        )

    def cancel_experiment(self, experiment_id: str):
        record = self._record(experiment_id)
        record.cancel_event.set()
        logger.info(f"Cancellation requested for experiment {experiment_id}")

    def delete_experiment(self, experiment_id: str):
        """Cancel if still running, then forget the experiment"""
        record = self._record(experiment_id)
        record.cancel_event.set()
        del self.experiments[experiment_id]
        logger.info(f"Deleted experiment {experiment_id}")

    def get_manager_stats(self) -> Dict:
        by_status = {status.value: 0 for status in ExperimentStatus}
        for record in self.experiments.values():
            by_status[record.engine.status.value] += 1
        return {
            "experiments": {"total": len(self.experiments), **by_status},
            "background_tasks": len(self.tasks),
        }
