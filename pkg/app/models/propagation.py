"""
Pydantic models for angular spectra, cluster generation and large-scale fading
"""

from enum import Enum
from typing import Annotated, List, Literal, Optional, Union

from pydantic import BaseModel, Field, field_validator, model_validator


class VonMises(BaseModel):
    """Von Mises power azimuth spectrum, density proportional to exp(kappa cos(phi - mu))"""
    kind: Literal["von_mises"] = "von_mises"
    mu_deg: float = Field(0.0, ge=-180, le=180)
    kappa: float = Field(6.0, ge=0, description="Concentration (native VM parameter)")

    class Config:
        frozen = True


class UniformAzimuth(BaseModel):
    kind: Literal["uniform"] = "uniform"
    lo_deg: float = Field(-180.0, ge=-180, le=180)
    hi_deg: float = Field(180.0, ge=-180, le=180)

    class Config:
        frozen = True

    @model_validator(mode="after")
    def _ordered(self):
        if not self.lo_deg < self.hi_deg:
            raise ValueError("uniform azimuth spectrum needs lo_deg < hi_deg")
        return self


class WrappedGaussian(BaseModel):
    kind: Literal["wrapped_gaussian"] = "wrapped_gaussian"
    mu_deg: float = Field(0.0, ge=-180, le=180)
    sigma_deg: float = Field(..., gt=0)

    class Config:
        frozen = True


class Laplacian(BaseModel):
    """Laplacian power elevation spectrum truncated to [0, 180] deg and renormalized"""
    kind: Literal["laplacian"] = "laplacian"
    theta0_deg: float = Field(90.0, ge=0, le=180)
    spread_deg: float = Field(8.0, gt=0)

    class Config:
        frozen = True


class UniformElevation(BaseModel):
    kind: Literal["uniform"] = "uniform"
    lo_deg: float = Field(0.0, ge=0, le=180)
    hi_deg: float = Field(180.0, ge=0, le=180)

    class Config:
        frozen = True

    @model_validator(mode="after")
    def _ordered(self):
        if not self.lo_deg < self.hi_deg:
            raise ValueError("uniform elevation spectrum needs lo_deg < hi_deg")
        return self


class FixedElevation(BaseModel):
    """Point mass (every ray at one elevation); used for the 2D restriction"""
    kind: Literal["fixed"] = "fixed"
    theta_deg: float = Field(90.0, ge=0, le=180)

    class Config:
        frozen = True


AzimuthSpectrum = Annotated[Union[VonMises, UniformAzimuth, WrappedGaussian], Field(discriminator="kind")]
ElevationSpectrum = Annotated[Union[Laplacian, UniformElevation, FixedElevation], Field(discriminator="kind")]


class PowerModel(str, Enum):
    UNIFORM_OVER_CLUSTERS = "uniform_over_clusters"


class IntraClusterSpread(BaseModel):
    """Scaling of the subpath offsets per angle (deg)"""
    c_theta: float = Field(3.0, ge=0, description="Elevation of departure")
    c_phi: float = Field(2.0, ge=0, description="Azimuth of departure")
    c_theta_arr: float = Field(7.0, ge=0, description="Elevation of arrival")
    c_phi_arr: float = Field(15.0, ge=0, description="Azimuth of arrival")

    class Config:
        frozen = True


class ClusterConfig(BaseModel):
    """Cluster/subpath layout of the ray-based channel"""
    n_clusters: int = Field(20, ge=1)
    subpaths_per_cluster: int = Field(1, ge=1, description="1 selects the simplified model")
    intra_cluster_spread_deg: IntraClusterSpread = Field(default_factory=IntraClusterSpread)
    subpath_offsets: List[float] = Field(default_factory=lambda: [0.0])
    power_model: PowerModel = PowerModel.UNIFORM_OVER_CLUSTERS
    xpr_db: float = Field(7.0, description="Cross-polarization power ratio (P=2)")
    rician_k_db: Optional[float] = Field(None, description="LoS K-factor; None disables the LoS ray")

    class Config:
        frozen = True
        extra = "forbid"

    @field_validator("subpath_offsets")
    @classmethod
    def _symmetric(cls, offsets: List[float]) -> List[float]:
        ordered = sorted(offsets)
        if any(abs(a + b) > 1e-9 for a, b in zip(ordered, reversed(ordered))):
            raise ValueError("subpath offsets must be symmetric about 0")
        return offsets

    @model_validator(mode="after")
    def _offset_count(self):
        if len(self.subpath_offsets) != self.subpaths_per_cluster:
            raise ValueError(
                f"expected {self.subpaths_per_cluster} subpath offsets, got {len(self.subpath_offsets)}"
            )
        return self


class PathLossModel(BaseModel):
    """Log-distance path loss PL = PL0 + 10 n log10(d / d0)"""
    pl0_db: float = Field(128.1, description="Path loss at the reference distance (dB)")
    d0_m: float = Field(1000.0, gt=0)
    exponent: float = Field(3.76, gt=0)
    shadow_std_db: float = Field(8.0, ge=0, description="Shadow fading standard deviation (dB)")

    class Config:
        frozen = True
        extra = "forbid"
