"""
Pydantic models for experiment configuration, result rows and the REST API
"""

import json
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from pydantic import BaseModel, Field, model_validator

from app.config import settings
from app.models.antenna import ArrayGeometry, ItuPortPatternParams, PatternMode
from app.models.optimization import SdbOptions
from app.models.propagation import (
    AzimuthSpectrum,
    ClusterConfig,
    ElevationSpectrum,
    Laplacian,
    PathLossModel,
    VonMises,
)


class ScenarioType(str, Enum):
    PATTERN_COMPARE = "pattern-compare"
    CORR_COMPARE = "corr-compare"
    SINGLE_USER = "single-user"
    MULTI_USER = "multi-user"
    MULTI_CELL = "multi-cell"


class SweepParameter(str, Enum):
    N_USERS = "n_users"
    N_PORTS = "n_ports"
    TX_POWER_DBM = "tx_power_dbm"
    ELEVATION_SPREAD_DEG = "elevation_spread_deg"
    DISTANCE_M = "distance_m"


class SweepSpec(BaseModel):
    """One swept variable; every value runs the whole scenario"""
    parameter: SweepParameter
    values: List[float] = Field(..., min_length=1)

    class Config:
        frozen = True
        extra = "forbid"


class GeneralSection(BaseModel):
    scenario: ScenarioType = ScenarioType.SINGLE_USER
    seed: int = Field(default_factory=lambda: settings.DEFAULT_SEED, ge=0)
    trials: int = Field(default_factory=lambda: settings.DEFAULT_TRIALS, ge=1,
                        description="Channel realizations per sweep point")
    channels_per_drop: int = Field(1, ge=1, description="Channel draws per user drop")
    threads: int = Field(default_factory=lambda: settings.DEFAULT_THREADS, ge=1)
    output: Optional[str] = Field(None, description="CSV output path")
    theta_tilt_deg: float = Field(90.0, gt=0, lt=180, description="Tilt of pattern and correlation studies")
    carrier_frequency_hz: float = Field(2.0e9, gt=0)
    sweep: Optional[SweepSpec] = None

    class Config:
        extra = "forbid"


class UserPlacement(BaseModel):
    """Drop geometry; distances are horizontal"""
    n_users: int = Field(1, ge=1, description="Users per cell")
    cell_radius_m: float = Field(250.0, gt=0)
    min_distance_m: float = Field(30.0, gt=0)
    bs_height_m: float = Field(30.0, gt=0)
    ue_height_m: float = Field(1.5, ge=0)
    sector_half_width_deg: float = Field(60.0, gt=0, le=180)
    distance_m: Optional[float] = Field(None, gt=0, description="Fixed distance instead of random placement")
    los_elevation_deg: Optional[float] = Field(None, gt=0, lt=180, description="Override of the LoS elevation")
    rx_elements: int = Field(1, ge=1)
    rx_spacing: float = Field(0.5, gt=0)
    speed_mps: float = Field(0.0, ge=0)

    class Config:
        extra = "forbid"

    @model_validator(mode="after")
    def _annulus(self):
        if not self.cell_radius_m > self.min_distance_m:
            raise ValueError("cell radius must exceed the minimum distance")
        return self


class PrecoderKind(str, Enum):
    MRT = "mrt"
    ZF = "zf"
    RZF = "rzf"


class LinkSection(BaseModel):
    tx_power_dbm: float = 56.0
    noise_dbm: float = -100.0
    precoder: PrecoderKind = PrecoderKind.MRT
    rzf_regularizer: Optional[float] = Field(None, gt=0, description="Defaults to K sigma^2 / P")

    class Config:
        extra = "forbid"

    @property
    def tx_power_w(self) -> float:
        return 10.0 ** ((self.tx_power_dbm - 30.0) / 10.0)

    @property
    def noise_w(self) -> float:
        return 10.0 ** ((self.noise_dbm - 30.0) / 10.0)


class CorrSection(BaseModel):
    method: str = Field("quad", pattern="^(quad|mc)$")
    n_samples: int = Field(100_000, ge=1)
    elevation_spreads_deg: List[float] = Field(default_factory=lambda: [8.0, 15.0, 25.0])
    pattern_mode: PatternMode = PatternMode.FULL
    compare_2d: bool = True

    class Config:
        extra = "forbid"


class PatternSection(BaseModel):
    phi_deg: float = 0.0
    theta_min_deg: float = Field(0.0, ge=0, le=180)
    theta_max_deg: float = Field(180.0, ge=0, le=180)
    theta_points: int = Field(3601, ge=11)
    matched_itu: bool = Field(True, description="Use element-matched ITU port parameters")

    class Config:
        extra = "forbid"


class MulticellSection(BaseModel):
    n_cells: int = Field(3, ge=2, le=3)
    leakage_cap_ratio: float = Field(1.0, gt=0, description="Caps as a multiple of the CoM leakage")

    class Config:
        extra = "forbid"


class StrategyKind(str, Enum):
    CST = "cst"
    LOS = "los"
    COM = "com"
    MUAB = "muab"
    EIGEN = "eigen"
    SDB = "sdb"


class StrategySpec(BaseModel):
    """A downtilt strategy to compare"""
    kind: StrategyKind
    theta_deg: Optional[float] = Field(None, gt=0, lt=180, description="Fixed tilt (CST)")
    weights: Optional[List[float]] = Field(None, description="Per-user weights (MUAB)")
    label: Optional[str] = None

    class Config:
        frozen = True
        extra = "forbid"

    @model_validator(mode="after")
    def _cst_angle(self):
        if self.kind == StrategyKind.CST and self.theta_deg is None:
            raise ValueError("CST needs theta_deg")
        return self

    @property
    def name(self) -> str:
        if self.label:
            return self.label
        if self.kind == StrategyKind.CST:
            return f"CST{self.theta_deg:g}"
        return {
            StrategyKind.LOS: "LoS-tilt",
            StrategyKind.COM: "CoM",
            StrategyKind.MUAB: "MUAB",
            StrategyKind.EIGEN: "eigen",
            StrategyKind.SDB: "SDB",
        }[self.kind]


class ExperimentConfig(BaseModel):
    """
    Complete experiment description; every section has working defaults,
    so an empty document is a valid single-user configuration
    """
    general: GeneralSection = Field(default_factory=GeneralSection)
    aaa: ArrayGeometry = Field(default_factory=ArrayGeometry)
    itu: ItuPortPatternParams = Field(default_factory=ItuPortPatternParams)
    elevation: ElevationSpectrum = Field(default_factory=Laplacian)
    azimuth: AzimuthSpectrum = Field(default_factory=VonMises)
    cluster: ClusterConfig = Field(default_factory=ClusterConfig)
    users: UserPlacement = Field(default_factory=UserPlacement)
    large_scale: PathLossModel = Field(default_factory=PathLossModel)
    link: LinkSection = Field(default_factory=LinkSection)
    sdb: SdbOptions = Field(default_factory=SdbOptions)
    corr: CorrSection = Field(default_factory=CorrSection)
    pattern: PatternSection = Field(default_factory=PatternSection)
    multicell: MulticellSection = Field(default_factory=MulticellSection)
    strategies: List[StrategySpec] = Field(default_factory=list)

    class Config:
        extra = "forbid"
        json_schema_extra = {
            "example": {
                "general": {"scenario": "multi-user", "trials": 500, "seed": 7},
                "aaa": {"m_per_port": 8, "n_ports": 12},
                "users": {"n_users": 4},
                "strategies": [{"kind": "cst", "theta_deg": 90}, {"kind": "com"}, {"kind": "sdb"}],
            }
        }

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "ExperimentConfig":
        """Parse a TOML or JSON experiment file"""
        path = Path(path)
        text = path.read_text(encoding="utf-8")
        data = json.loads(text) if path.suffix.lower() == ".json" else tomllib.loads(text)
        return cls.model_validate(data)

    def with_overrides(self, **general: Any) -> "ExperimentConfig":
        """Copy with [general] fields replaced (None values are ignored)"""
        updates = {k: v for k, v in general.items() if v is not None}
        if not updates:
            return self
        section = GeneralSection.model_validate({**self.general.model_dump(), **updates})
        return self.model_copy(update={"general": section})


class ResultRow(BaseModel):
    scenario: str
    strategy: str
    sweep: str
    metric: str
    value: float
    stderr: float
    trials: int
    seed: int


class ExperimentStatus(str, Enum):
    CREATED = "created"
    RUNNING = "running"
    COMPLETED = "completed"
    ERROR = "error"
    CANCELLED = "cancelled"


class ExperimentRequest(BaseModel):
    """Request to submit an experiment"""
    config: ExperimentConfig = Field(default_factory=ExperimentConfig)
    experimentId: Optional[str] = Field(None, description="Optional custom experiment ID")

    class Config:
        json_schema_extra = {
            "example": {
                "config": {
                    "general": {"scenario": "single-user", "trials": 200},
                    "strategies": [{"kind": "cst", "theta_deg": 90}, {"kind": "eigen"}],
                }
            }
        }


class ExperimentResponse(BaseModel):
    experimentId: str = Field(..., description="Unique experiment identifier")
    status: ExperimentStatus
    scenario: ScenarioType
    createdAt: datetime
    completedAt: Optional[datetime] = None
    progress: float = Field(0.0, ge=0, le=1, description="Completed fraction of the trials")
    rowCount: int = Field(0, ge=0)
    error: Optional[str] = None


class ExperimentListResponse(BaseModel):
    experiments: List[ExperimentResponse]
    total: int
    running: int


class ExperimentResultsResponse(BaseModel):
    experimentId: str
    rows: List[ResultRow]
    metadata: Dict[str, Any] = Field(default_factory=dict)


class ErrorResponse(BaseModel):
    """Error response model"""
    error: str = Field(..., description="Error message")
    detail: Optional[str] = Field(None, description="Detailed error information")
    timestamp: str = Field(..., description="Error timestamp")
