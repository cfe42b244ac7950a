import pytest
from fastapi import HTTPException

from app.config import settings
from app.models.experiment import ExperimentConfig, ExperimentRequest, ExperimentStatus
from app.core.experiment_manager import ExperimentManager


def _request(experiment_id=None, **general):
    config = ExperimentConfig.model_validate({
        "general": {"scenario": "single-user", "trials": 2, "channels_per_drop": 2, **general},
        "aaa": {"m_per_port": 4, "n_ports": 2},
        "strategies": [{"kind": "cst", "theta_deg": 90}],
    })
    return ExperimentRequest(config=config, experimentId=experiment_id)


@pytest.fixture
async def manager():
    m = ExperimentManager()
    yield m
    await m.shutdown()


async def test_experiment_runs_to_completion(manager):
    experiment_id = manager.create_experiment(_request("su-1"))
    assert experiment_id == "su-1"

    state = await manager.wait(experiment_id)
    assert state.status == ExperimentStatus.COMPLETED
    assert state.progress == 1.0
    assert state.completedAt is not None

    results = manager.get_results(experiment_id)
    assert results.metadata["strategies"] == ["CST90"]
    assert {r.metric for r in results.rows} == {"rate", "snr_db"}


async def test_duplicate_id_rejected(manager):
    manager.create_experiment(_request("dup"))
    with pytest.raises(HTTPException) as info:
        manager.create_experiment(_request("dup"))
    assert info.value.status_code == 409
    await manager.wait("dup")


async def test_experiment_limit(manager, monkeypatch):
    monkeypatch.setattr(settings, "MAX_EXPERIMENTS", 1)
    manager.create_experiment(_request())
    with pytest.raises(HTTPException) as info:
        manager.create_experiment(_request())
    assert info.value.status_code == 429


async def test_cancel_before_first_drop(manager):
    experiment_id = manager.create_experiment(_request(trials=1000))
    manager.cancel_experiment(experiment_id)
    state = await manager.wait(experiment_id)
    assert state.status == ExperimentStatus.CANCELLED

    with pytest.raises(HTTPException) as info:
        manager.get_results(experiment_id)
    assert info.value.status_code == 409


async def test_failed_experiment_reports_error(manager):
    config = ExperimentConfig.model_validate({
        "general": {"scenario": "multi-user", "trials": 1},
        "aaa": {"m_per_port": 2, "n_ports": 2},
        "users": {"n_users": 2},
        "strategies": [{"kind": "los"}],
    })
    experiment_id = manager.create_experiment(ExperimentRequest(config=config))
    state = await manager.wait(experiment_id)
    assert state.status == ExperimentStatus.ERROR
    assert "trial 0" in state.error


async def test_unknown_experiment(manager):
    with pytest.raises(HTTPException) as info:
        manager.get_experiment("nope")
    assert info.value.status_code == 404


async def test_stats_and_delete(manager):
    experiment_id = manager.create_experiment(_request("stats"))
    await manager.wait(experiment_id)
    stats = manager.get_manager_stats()
    assert stats["experiments"]["total"] == 1
    assert stats["experiments"]["completed"] == 1
    assert stats["background_tasks"] == 0

    manager.delete_experiment(experiment_id)
    assert manager.list_experiments().total == 0


async def test_shutdown_rejects_new_experiments():
    m = ExperimentManager()
    await m.shutdown()
    with pytest.raises(HTTPException) as info:
        m.create_experiment(_request())
    assert info.value.status_code == 503
