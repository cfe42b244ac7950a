"""
Antenna array radiation patterns

Element pattern, array factor of a vertical column, the exact port pattern
(element pattern plus array factor) and the ITU approximation of a port
pattern that keeps only the main lobe.
"""

import logging
from typing import NamedTuple, Optional, Union

import numpy as np

from app.models.antenna import ArrayGeometry, ElementPatternParams, ItuPortPatternParams, PatternMode
from app.core.errors import (
    BeamwidthDomainError,
    DimensionMismatchError,
    EmptyInputError,
    InvalidParameterError,
)

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

# Constant of the uniform-array half-power beamwidth relation
HPBW_CONSTANT = 1.391


class PolarizedField(NamedTuple):
    """Field pattern split by the slant angle; beta = 90 deg is purely vertical"""
    horizontal: ArrayLike
    vertical: ArrayLike


def wrap_azimuth_deg(phi_deg: ArrayLike) -> np.ndarray:
    """Wrap azimuth into (-180, 180]"""
    phi = np.asarray(phi_deg, dtype=float)
    wrapped = np.mod(phi + 180.0, 360.0) - 180.0
    return np.where(wrapped == -180.0, 180.0, wrapped)


def element_pattern_db(params: ElementPatternParams, phi_deg: ArrayLike, theta_deg: ArrayLike) -> ArrayLike:
    """
    Combined 3D power pattern of one antenna element

    Args:
        params: Element pattern parameters
        phi_deg: Azimuth, any real value (wrapped internally)
        theta_deg: Zenith angle in [0, 180]

    Returns:
        Gain in dBi, same shape as the broadcast inputs
    """
    phi = wrap_azimuth_deg(phi_deg)
    theta = np.asarray(theta_deg, dtype=float)

    # Horizontal and vertical cuts, both <= 0 dB
    a_h = -np.minimum(12.0 * (phi / params.phi_3db_deg) ** 2, params.front_back_ratio_db)
    a_v = -np.minimum(12.0 * ((theta - 90.0) / params.theta_3db_deg) ** 2, params.sla_v_db)

    gain = params.gain_max_dbi - np.minimum(-(a_h + a_v), params.front_back_ratio_db)
    return gain[()]


def element_pattern_linear(params: ElementPatternParams, phi_deg: ArrayLike, theta_deg: ArrayLike) -> ArrayLike:
    """Element power pattern in linear scale"""
    return 10.0 ** (np.asarray(element_pattern_db(params, phi_deg, theta_deg)) / 10.0)


def itu_port_pattern_db(
    params: ItuPortPatternParams,
    phi_deg: ArrayLike,
    theta_deg: ArrayLike,
    theta_tilt_deg: float,
) -> ArrayLike:
    """
    ITU approximation of the port power pattern, steered to theta_tilt

    The vertical term is centred on the tilt and clamped at A_m, so the
    pattern has no sidelobes.
    """
    if not 0.0 < theta_tilt_deg < 180.0:
        raise InvalidParameterError(f"theta_tilt must lie in (0, 180) deg, got {theta_tilt_deg}")

    phi = wrap_azimuth_deg(phi_deg)
    theta = np.asarray(theta_deg, dtype=float)

    a_h = -np.minimum(12.0 * (phi / params.phi_3db_deg) ** 2, params.front_back_ratio_db)
    a_v = -np.minimum(12.0 * ((theta - theta_tilt_deg) / params.theta_3db_deg) ** 2, params.front_back_ratio_db)

    gain = params.gain_max_dbi - np.minimum(-(a_h + a_v), params.front_back_ratio_db)
    return gain[()]


def itu_port_pattern_linear(
    params: ItuPortPatternParams, phi_deg: ArrayLike, theta_deg: ArrayLike, theta_tilt_deg: float
) -> ArrayLike:
    return 10.0 ** (np.asarray(itu_port_pattern_db(params, phi_deg, theta_deg, theta_tilt_deg)) / 10.0)


def array_factor(weights: np.ndarray, d_v: float, theta_deg: ArrayLike) -> Union[complex, np.ndarray]:
    """
    Array factor of a vertical column of K elements

    sum_k w_k exp(+i 2 pi (k-1) d_v cos(theta))
    """
    w = np.atleast_1d(np.asarray(weights, dtype=complex))
    if w.ndim != 1 or w.size == 0:
        raise EmptyInputError("array factor needs a non-empty weight vector")

    theta = np.radians(np.asarray(theta_deg, dtype=float))
    k = np.arange(w.size)
    steering = np.exp(1j * 2.0 * np.pi * d_v * np.multiply.outer(np.cos(theta), k))
    return (steering @ w)[()]


def port_pattern_element_db(
    geometry: ArrayGeometry, weights: np.ndarray, phi_deg: ArrayLike, theta_deg: ArrayLike
) -> ArrayLike:
    """
    Exact port pattern: element pattern plus 20 log10 |array factor|
    """
    w = np.atleast_1d(np.asarray(weights, dtype=complex))
    if w.size != geometry.m_per_port:
        raise DimensionMismatchError(
            f"port of {geometry.m_per_port} elements given {w.size} weights"
        )

    af = np.abs(array_factor(w, geometry.d_v, theta_deg))
    with np.errstate(divide="ignore"):
        af_db = 20.0 * np.log10(af)
    return (np.asarray(element_pattern_db(geometry.element_params, phi_deg, theta_deg)) + af_db)[()]


def port_hpbw_deg(k: int, d_v: float) -> float:
    """
    Half-power beamwidth of a port of K uniformly weighted elements

    Raises:
        BeamwidthDomainError: when K d_v <= 1.391 / pi
    """
    if k < 1 or d_v <= 0:
        raise InvalidParameterError(f"need K >= 1 and d_v > 0, got K={k}, d_v={d_v}")

    argument = HPBW_CONSTANT / (np.pi * k * d_v)
    if argument > 1.0:
        raise BeamwidthDomainError(k, d_v)
    return float(np.degrees(2.0 * (np.pi / 2.0 - np.arccos(argument))))


def port_peak_gain_dbi(element_gain_dbi: float, k: int) -> float:
    """Maximum directional port gain, G_max,E + 20 log10 sqrt(K)"""
    if k < 1:
        raise InvalidParameterError(f"need K >= 1, got {k}")
    return float(element_gain_dbi + 20.0 * np.log10(np.sqrt(k)))


def matched_itu_params(
    k: int,
    d_v: float,
    element_params: ElementPatternParams = ElementPatternParams(),
    base: Optional[ItuPortPatternParams] = None,
) -> ItuPortPatternParams:
    """
    ITU port parameters matched to a K-element port

    Peak gain and vertical HPBW follow the port relations; the horizontal
    HPBW and the front-back ratio are taken from the element unless a base
    parameter set is given.
    """
    if base is None:
        base = ItuPortPatternParams(
            phi_3db_deg=element_params.phi_3db_deg,
            front_back_ratio_db=element_params.front_back_ratio_db,
        )
    return base.model_copy(update={
        "gain_max_dbi": port_peak_gain_dbi(element_params.gain_max_dbi, k),
        "theta_3db_deg": port_hpbw_deg(k, d_v),
    })


def field_decompose(pattern_linear: ArrayLike, slant_deg: float) -> PolarizedField:
    """
    Split a linear power pattern into its two polarization field components

    Returns (sqrt(A) cos(beta), sqrt(A) sin(beta)).
    """
    a = np.asarray(pattern_linear, dtype=float)
    if np.any(a < 0):
        raise InvalidParameterError("linear pattern values must be nonnegative")
    beta = np.radians(slant_deg)
    root = np.sqrt(a)
    return PolarizedField(horizontal=(root * np.cos(beta))[()], vertical=(root * np.sin(beta))[()])


def measure_hpbw_deg(theta_deg: np.ndarray, pattern_db: np.ndarray) -> float:
    """
    Measured 3 dB width of the main lobe of a sampled pattern

    Crossings are located by linear interpolation between grid points.
    """
    theta = np.asarray(theta_deg, dtype=float)
    values = np.asarray(pattern_db, dtype=float)
    peak = int(np.argmax(values))
    level = values[peak] - 3.0

    right = peak
    while right + 1 < values.size and values[right + 1] >= level:
        right += 1
    left = peak
    while left - 1 >= 0 and values[left - 1] >= level:
        left -= 1
    if right + 1 >= values.size or left - 1 < 0:
        raise InvalidParameterError("main lobe not contained in the sampled range")

    def _cross(inside: int, outside: int) -> float:
        frac = (values[inside] - level) / (values[inside] - values[outside])
        return theta[inside] + frac * (theta[outside] - theta[inside])

    return float(_cross(right, right + 1) - _cross(left, left - 1))


def first_sidelobe_db(theta_deg: np.ndarray, pattern_db: np.ndarray) -> float:
    """
    Level of the first sidelobe relative to the main peak (dB, negative)

    Walks from the peak towards larger theta to the first null and then to
    the next local maximum. Returns -inf when the pattern is monotone there,
    as for the clamped ITU pattern.
    """
    values = np.asarray(pattern_db, dtype=float)
    peak = int(np.argmax(values))
    i = peak
    while i + 1 < values.size and values[i + 1] < values[i]:
        i += 1
    null = i
    while i + 1 < values.size and values[i + 1] > values[i]:
        i += 1
    if i == null:
        return float("-inf")
    return float(values[i] - values[peak])


def element_power_pattern(
    params: ElementPatternParams, phi_deg: ArrayLike, theta_deg: ArrayLike, mode: PatternMode = PatternMode.FULL
) -> np.ndarray:
    """Linear element power pattern |g_E|^2 under the chosen pattern mode"""
    shape = np.broadcast(np.asarray(phi_deg), np.asarray(theta_deg)).shape
    if mode == PatternMode.ISOTROPIC:
        return np.ones(shape)
    if mode == PatternMode.ELEVATION_ONLY:
        phi_deg = np.zeros(shape)
    return np.broadcast_to(element_pattern_linear(params, phi_deg, theta_deg), shape)
