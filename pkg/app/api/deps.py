"""
FastAPI dependencies
"""

from app.core.experiment_manager import ExperimentManager

# Global experiment manager instance
_experiment_manager: ExperimentManager = None


def get_experiment_manager() -> ExperimentManager:
    """
    Dependency to get the global experiment manager instance

    Returns:
        ExperimentManager instance
    """
    global _experiment_manager
    if _experiment_manager is None:
        _experiment_manager = ExperimentManager()
    return _experiment_manager
