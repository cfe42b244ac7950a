"""
Numerical core and experiment harness
"""

from .experiment_engine import ExperimentEngine, run_experiment
from .experiment_manager import ExperimentManager

__all__ = [
    "ExperimentEngine",
    "run_experiment",
    "ExperimentManager"
]
