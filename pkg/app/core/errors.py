"""
Exception hierarchy for the simulator core
"""

from typing import Optional, Sequence

import numpy as np


class SimulatorError(Exception):
    """Base class for every error raised by the numerical core"""


class BeamwidthDomainError(SimulatorError, ValueError):
    """Raised when the port HPBW formula leaves the arccos domain"""

    def __init__(self, k: int, d_v: float):
        self.k = k
        self.d_v = d_v
        super().__init__(
            f"beamwidth formula invalid for electrically small aperture (K={k}, d_V={d_v})"
        )


class DimensionMismatchError(SimulatorError, ValueError):
    pass


class IndexOutOfRangeError(SimulatorError, IndexError):
    pass


class EmptyInputError(SimulatorError, ValueError):
    pass


class ZeroChannelError(SimulatorError, ValueError):
    pass


class RankDeficiencyError(SimulatorError, np.linalg.LinAlgError):
    pass


class NotHermitianError(SimulatorError, ValueError):
    pass


class NotPsdError(SimulatorError, ValueError):
    def __init__(self, min_eigenvalue: float, tolerance: float):
        self.min_eigenvalue = min_eigenvalue
        super().__init__(
            f"matrix is not positive semidefinite: min eigenvalue {min_eigenvalue:.3e} < -{tolerance:.1e}"
        )


class ZeroTraceError(SimulatorError, ValueError):
    pass


class QuadratureError(SimulatorError):
    """Quadrature did not meet its tolerance at the finest refinement level"""

    def __init__(self, nodes: int, achieved: float, tolerance: float):
        self.nodes = nodes
        self.achieved = achieved
        super().__init__(
            f"quadrature not converged at {nodes} nodes per axis: "
            f"change {achieved:.3e} > tolerance {tolerance:.1e}"
        )


class SolverError(SimulatorError):
    pass


class ConvergenceError(SimulatorError):
    """Iterative optimizer stopped without meeting its tolerance"""

    def __init__(self, message: str, best_weights: Optional[np.ndarray] = None,
                 best_objective: float = float("nan")):
        self.best_weights = best_weights
        self.best_objective = best_objective
        super().__init__(message)


class InfeasibleLeakageError(SimulatorError):
    def __init__(self, cells: Sequence[int]):
        self.cells = list(cells)
        super().__init__(f"leakage caps infeasible for cell(s) {self.cells}")


class TrialError(SimulatorError):
    """A module error raised inside a Monte-Carlo trial, tagged for replay"""

    def __init__(self, trial: int, seed: int, cause: Exception):
        self.trial = trial
        self.seed = seed
        self.cause = cause
        super().__init__(f"trial {trial} (seed {seed}) failed: {type(cause).__name__}: {cause}")


class InvalidParameterError(SimulatorError, ValueError):
    """A numeric argument is outside the domain of an operation"""


class ExperimentCancelledError(SimulatorError):
    """Raised inside a running experiment once cancellation was requested"""
