"""
Pydantic models for the FD-MIMO simulator
"""

from .antenna import (
    ElementPatternParams,
    ItuPortPatternParams,
    ArrayGeometry,
    PatternMode
)

from .propagation import (
    VonMises,
    UniformAzimuth,
    WrappedGaussian,
    Laplacian,
    UniformElevation,
    FixedElevation,
    AzimuthSpectrum,
    ElevationSpectrum,
    ClusterConfig,
    IntraClusterSpread,
    PathLossModel
)

from .optimization import SdbOptions

from .experiment import (
    ScenarioType,
    StrategyKind,
    StrategySpec,
    ExperimentConfig,
    ExperimentStatus,
    ResultRow,
    ExperimentRequest,
    ExperimentResponse,
    ExperimentListResponse,
    ExperimentResultsResponse,
    ErrorResponse
)

__all__ = [
    # Antenna models
    "ElementPatternParams",
    "ItuPortPatternParams",
    "ArrayGeometry",
    "PatternMode",
    # Propagation models
    "VonMises",
    "UniformAzimuth",
    "WrappedGaussian",
    "Laplacian",
    "UniformElevation",
    "FixedElevation",
    "AzimuthSpectrum",
    "ElevationSpectrum",
    "ClusterConfig",
    "IntraClusterSpread",
    "PathLossModel",
    # Optimizer options
    "SdbOptions",
    # Experiment models
    "ScenarioType",
    "StrategyKind",
    "StrategySpec",
    "ExperimentConfig",
    "ExperimentStatus",
    "ResultRow",
    "ExperimentRequest",
    "ExperimentResponse",
    "ExperimentListResponse",
    "ExperimentResultsResponse",
    "ErrorResponse"
]
