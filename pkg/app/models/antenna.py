"""
Pydantic models for antenna elements, ITU port patterns and array geometry
"""

from enum import Enum
from typing import Literal, Tuple

from pydantic import BaseModel, Field


def branch_slants(slant_deg: float, polarization: int) -> Tuple[float, ...]:
    """Slant of each polarization branch; the co-located branch sits at slant - 90 deg"""
    return (slant_deg,) if polarization == 1 else (slant_deg, slant_deg - 90.0)


class ElementPatternParams(BaseModel):
    """Combined 3D radiation pattern of an individual antenna element"""
    gain_max_dbi: float = Field(8.0, gt=0, description="Maximum directional element gain G_max,E (dBi)")
    phi_3db_deg: float = Field(65.0, gt=0, lt=180, description="Horizontal HPBW (deg)")
    theta_3db_deg: float = Field(65.0, gt=0, lt=180, description="Vertical HPBW (deg)")
    front_back_ratio_db: float = Field(30.0, gt=0, description="Front-back ratio A_m (dB)")
    sla_v_db: float = Field(30.0, gt=0, description="Vertical side-lobe attenuation SLA_v (dB)")

    class Config:
        frozen = True
        extra = "forbid"
        json_schema_extra = {
            "example": {
                "gain_max_dbi": 8,
                "phi_3db_deg": 65,
                "theta_3db_deg": 65,
                "front_back_ratio_db": 30,
                "sla_v_db": 30,
            }
        }


class ItuPortPatternParams(BaseModel):
    """Approximate 3D antenna-port pattern (main lobe only, clamped floor)"""
    gain_max_dbi: float = Field(17.0, gt=0, description="Maximum port gain G_max,P (dBi)")
    phi_3db_deg: float = Field(70.0, gt=0, lt=180, description="Horizontal port HPBW (deg)")
    theta_3db_deg: float = Field(15.0, gt=0, lt=180, description="Vertical port HPBW (deg)")
    front_back_ratio_db: float = Field(20.0, gt=0, description="Front-back ratio A_m (dB)")

    class Config:
        frozen = True
        extra = "forbid"


class ArrayGeometry(BaseModel):
    """
    Uniform planar array of N ports, each a vertical column of M elements.

    Element (m, s) sits at ((s-1) d_h) e_y + ((m-1) d_v) e_z in wavelengths,
    with the phase reference at the origin. Indices are 1-based.
    """
    m_per_port: int = Field(8, ge=1, description="Elements per port (vertical)")
    n_ports: int = Field(4, ge=1, description="Number of ports (horizontal)")
    polarization: Literal[1, 2] = Field(1, description="Polarizations per element location")
    slant_deg: float = Field(90.0, description="Slant angle beta; 90 is vertical polarization")
    d_v: float = Field(0.8, gt=0, description="Vertical spacing (wavelengths)")
    d_h: float = Field(0.5, gt=0, description="Horizontal spacing (wavelengths)")
    element_params: ElementPatternParams = Field(default_factory=ElementPatternParams)

    class Config:
        frozen = True
        extra = "forbid"
        json_schema_extra = {
            "example": {
                "m_per_port": 8,
                "n_ports": 4,
                "polarization": 1,
                "slant_deg": 90,
                "d_v": 0.8,
                "d_h": 0.5,
            }
        }

    @property
    def n_elements(self) -> int:
        return self.m_per_port * self.n_ports

    @property
    def slants_deg(self) -> Tuple[float, ...]:
        """Slant of each polarization branch"""
        return branch_slants(self.slant_deg, self.polarization)

    def element_position(self, m: int, s: int) -> Tuple[float, float, float]:
        """(x, y, z) of element (m, s) in wavelengths"""
        return (0.0, (s - 1) * self.d_h, (m - 1) * self.d_v)


class PatternMode(str, Enum):
    """Which radiation pattern weights the rays"""
    FULL = "full"
    ISOTROPIC = "isotropic"            # |g|^2 = 1
    ELEVATION_ONLY = "elevation_only"  # isotropic in azimuth
