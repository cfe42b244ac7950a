"""
3D ray-traced channel coefficients and covariance-based channel draws

Element approach: every element gets its own coefficient from the element
pattern, and a port channel is the virtualization-weighted sum of the
element channels. Port approach: each port is one radiator with the ITU
port pattern steered to the tilt.

Element channel columns are ordered (polarization, port, element), i.e.
column p*NM + (s-1)M + (m-1) for 1-based (m, s).
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

import numpy as np

from app.models.antenna import ArrayGeometry, ItuPortPatternParams, PatternMode, branch_slants
from app.models.propagation import PathLossModel
from app.core.array import element_power_pattern, field_decompose, itu_port_pattern_linear
from app.core.correlation import CovarianceMatrix, psd_sqrt
from app.core.errors import DimensionMismatchError, IndexOutOfRangeError, InvalidParameterError
from app.core.spectra import PathRealization
from app.core.txru import VirtualizationMatrix

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class UserGeometry:
    """Position of a mobile station as seen from its serving base station"""
    los_azimuth_deg: float
    los_elevation_deg: float
    distance_m: float
    rx_elements: int = 1
    rx_spacing: float = 0.5
    speed_mps: float = 0.0
    velocity_azimuth_deg: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.los_elevation_deg < 180.0:
            raise InvalidParameterError(f"LoS elevation must lie in (0, 180) deg, got {self.los_elevation_deg}")
        if self.distance_m <= 0:
            raise InvalidParameterError(f"distance must be positive, got {self.distance_m}")
        if self.rx_elements < 1:
            raise InvalidParameterError(f"need at least one receive element, got {self.rx_elements}")


@dataclass(frozen=True)
class LargeScale:
    """Path loss and shadow fading draw of one link (dB)"""
    path_loss_db: float = 0.0
    shadow_fading_db: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.path_loss_db) and np.isfinite(self.shadow_fading_db)):
            raise InvalidParameterError("large-scale parameters must be finite")

    @property
    def amplitude(self) -> float:
        return float(np.sqrt(10.0 ** (-(self.path_loss_db + self.shadow_fading_db) / 10.0)))

    @property
    def power_gain(self) -> float:
        return self.amplitude ** 2


class ChannelApproach(str, Enum):
    ELEMENT = "element"
    PORT_ITU = "port-ITU"


@dataclass(frozen=True)
class ChannelSnapshot:
    """Channel matrix at time t; rows are receive elements"""
    matrix: np.ndarray
    time_s: float
    approach: ChannelApproach

    def __post_init__(self):
        h = np.atleast_2d(np.asarray(self.matrix, dtype=complex))
        h.setflags(write=False)
        object.__setattr__(self, "matrix", h)

    @property
    def shape(self):
        return self.matrix.shape


def path_loss_db(model: PathLossModel, distance_m: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """Log-distance path loss in dB"""
    d = np.asarray(distance_m, dtype=float)
    if np.any(d <= 0):
        raise InvalidParameterError("distance must be positive")
    return (model.pl0_db + 10.0 * model.exponent * np.log10(d / model.d0_m))[()]


def draw_large_scale(model: PathLossModel, distance_m: float, rng: np.random.Generator) -> LargeScale:
    shadow = float(rng.normal(0.0, model.shadow_std_db)) if model.shadow_std_db > 0 else 0.0
    return LargeScale(float(path_loss_db(model, distance_m)), shadow)


def tx_array_response_element(geometry: ArrayGeometry, s: int, m: int, phi_deg, theta_deg):
    """
    Phase of element (m, s) relative to the origin

    exp(i 2 pi [(s-1) d_h sin(phi) sin(theta) + (m-1) d_v cos(theta)])
    """
    if not (1 <= s <= geometry.n_ports and 1 <= m <= geometry.m_per_port):
        raise IndexOutOfRangeError(
            f"element (m={m}, s={s}) outside {geometry.m_per_port} x {geometry.n_ports} array"
        )
    phi = np.radians(np.asarray(phi_deg, dtype=float))
    theta = np.radians(np.asarray(theta_deg, dtype=float))
    phase = (s - 1) * geometry.d_h * np.sin(phi) * np.sin(theta) + (m - 1) * geometry.d_v * np.cos(theta)
    return np.exp(1j * 2.0 * np.pi * phase)[()]


def _tx_response_all(geometry: ArrayGeometry, phi: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """(rays, NM) element responses, angles in radians"""
    s = np.repeat(np.arange(geometry.n_ports), geometry.m_per_port)
    m = np.tile(np.arange(geometry.m_per_port), geometry.n_ports)
    phase = (
        geometry.d_h * np.multiply.outer(np.sin(phi) * np.sin(theta), s)
        + geometry.d_v * np.multiply.outer(np.cos(theta), m)
    )
    return np.exp(1j * 2.0 * np.pi * phase)


def _port_response_all(n_ports: int, d_h: float, phi: np.ndarray, theta: np.ndarray) -> np.ndarray:
    s = np.arange(n_ports)
    return np.exp(1j * 2.0 * np.pi * d_h * np.multiply.outer(np.sin(phi) * np.sin(theta), s))


def _rx_response_all(user: UserGeometry, phi: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """(rays, U) responses of the receive ULA"""
    u = np.arange(user.rx_elements)
    return np.exp(1j * 2.0 * np.pi * user.rx_spacing * np.multiply.outer(np.sin(phi) * np.sin(theta), u))


def _rays(paths: PathRealization):
    """Flattened ray arrays with the LoS ray (if any) appended last"""
    amplitude = np.repeat(np.sqrt(paths.powers / paths.subpaths_per_cluster), paths.subpaths_per_cluster)
    phi_dep, theta_dep = paths.phi_dep.ravel(), paths.theta_dep.ravel()
    phi_arr, theta_arr = paths.phi_arr.ravel(), paths.theta_arr.ravel()
    doppler = paths.doppler_hz.ravel()

    if paths.polarization == 1:
        coupling = np.exp(1j * paths.phases.reshape(-1))[:, None, None]
    else:
        cross = np.sqrt(1.0 / paths.xpr_linear)
        scale = np.array([[1.0, cross], [cross, 1.0]])
        coupling = scale * np.exp(1j * paths.phases.reshape(-1, 2, 2))

    if paths.los is not None:
        los = paths.los
        amplitude = np.append(amplitude, np.sqrt(los.power))
        phi_dep = np.append(phi_dep, los.phi_dep)
        theta_dep = np.append(theta_dep, los.theta_dep)
        phi_arr = np.append(phi_arr, los.phi_arr)
        theta_arr = np.append(theta_arr, los.theta_arr)
        doppler = np.append(doppler, los.doppler_hz)
        los_coupling = np.ones((1, 1, 1)) if paths.polarization == 1 else np.diag([1.0, -1.0])[None]
        coupling = np.concatenate([coupling, los_coupling.astype(complex)])

    return amplitude, phi_dep, theta_dep, phi_arr, theta_arr, doppler, coupling


def _ray_gains(power_pattern: np.ndarray, coupling: np.ndarray, slant_deg: float) -> np.ndarray:
    """g_r^T alpha g_t per ray for a vertically polarized isotropic receiver"""
    if coupling.shape[1] == 1:
        return np.sqrt(power_pattern) * coupling[:, 0, 0]
    field = field_decompose(power_pattern, slant_deg)
    # alpha is in the [vertical, horizontal] basis; g_r = [1, 0]
    return coupling[:, 0, 0] * field.vertical + coupling[:, 0, 1] * field.horizontal


def _assemble(gains: np.ndarray, a_rx: np.ndarray, a_tx: np.ndarray) -> np.ndarray:
    return np.einsum("r,ru,rc->uc", gains, a_rx, a_tx)


def raytrace_element_channel(
    geometry: ArrayGeometry,
    user: UserGeometry,
    paths: PathRealization,
    large_scale: Optional[LargeScale] = None,
    t: float = 0.0,
    *,
    pattern_mode: PatternMode = PatternMode.FULL,
) -> ChannelSnapshot:
    """
    Element-level channel (U x P*NM) summed over clusters and subpaths
    """
    if paths.polarization != geometry.polarization:
        raise DimensionMismatchError(
            f"paths drawn for P={paths.polarization}, array has P={geometry.polarization}"
        )
    scale = (large_scale or LargeScale()).amplitude
    amplitude, phi_dep, theta_dep, phi_arr, theta_arr, doppler, coupling = _rays(paths)

    pattern = element_power_pattern(
        geometry.element_params, np.degrees(phi_dep), np.degrees(theta_dep), pattern_mode
    )
    a_tx = _tx_response_all(geometry, phi_dep, theta_dep)
    a_rx = _rx_response_all(user, phi_arr, theta_arr)
    temporal = amplitude * np.exp(1j * 2.0 * np.pi * doppler * t)

    blocks = [
        _assemble(temporal * _ray_gains(pattern, coupling, slant), a_rx, a_tx)
        for slant in geometry.slants_deg
    ]
    return ChannelSnapshot(scale * np.concatenate(blocks, axis=1), t, ChannelApproach.ELEMENT)


def raytrace_port_channel_element_approach(
    geometry: ArrayGeometry,
    vm: VirtualizationMatrix,
    user: UserGeometry,
    paths: PathRealization,
    large_scale: Optional[LargeScale] = None,
    t: float = 0.0,
    *,
    pattern_mode: PatternMode = PatternMode.FULL,
) -> ChannelSnapshot:
    """
    Port channel (U x P*N) as the element channel right-multiplied by W~
    """
    if vm.n_ports != geometry.n_ports or vm.m_per_port != geometry.m_per_port:
        raise DimensionMismatchError(
            f"virtualization {vm.m_per_port} x {vm.n_ports} does not match array "
            f"{geometry.m_per_port} x {geometry.n_ports}"
        )
    element = raytrace_element_channel(geometry, user, paths, large_scale, t, pattern_mode=pattern_mode)
    nm = geometry.n_elements
    blocks = [element.matrix[:, p * nm:(p + 1) * nm] @ vm.dense for p in range(geometry.polarization)]
    return ChannelSnapshot(np.concatenate(blocks, axis=1), t, ChannelApproach.ELEMENT)


def raytrace_port_channel_itu(
    itu_params: ItuPortPatternParams,
    n_ports: int,
    theta_tilt_deg: float,
    user: UserGeometry,
    paths: PathRealization,
    large_scale: Optional[LargeScale] = None,
    t: float = 0.0,
    *,
    d_h: float = 0.5,
    slant_deg: float = 90.0,
    pattern_mode: PatternMode = PatternMode.FULL,
) -> ChannelSnapshot:
    """
    Port channel (U x P*N) with each port radiating the ITU port pattern

    For P=2 the second port set is slanted by -90 deg relative to the first,
    matching ArrayGeometry.slants_deg of the element channel.
    """
    if n_ports < 1:
        raise InvalidParameterError(f"need at least one port, got {n_ports}")
    scale = (large_scale or LargeScale()).amplitude
    amplitude, phi_dep, theta_dep, phi_arr, theta_arr, doppler, coupling = _rays(paths)

    phi_deg, theta_deg = np.degrees(phi_dep), np.degrees(theta_dep)
    if pattern_mode == PatternMode.ISOTROPIC:
        pattern = np.ones_like(phi_deg)
    else:
        if pattern_mode == PatternMode.ELEVATION_ONLY:
            phi_deg = np.zeros_like(phi_deg)
        pattern = np.asarray(itu_port_pattern_linear(itu_params, phi_deg, theta_deg, theta_tilt_deg))

    a_tx = _port_response_all(n_ports, d_h, phi_dep, theta_dep)
    a_rx = _rx_response_all(user, phi_arr, theta_arr)
    temporal = amplitude * np.exp(1j * 2.0 * np.pi * doppler * t)

    slants = branch_slants(slant_deg, paths.polarization)
    blocks = [_assemble(temporal * _ray_gains(pattern, coupling, slant), a_rx, a_tx) for slant in slants]
    return ChannelSnapshot(scale * np.concatenate(blocks, axis=1), t, ChannelApproach.PORT_ITU)


def _circular_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    """i.i.d. CN(0, 1) entries; real parts are drawn before imaginary parts"""
    real = rng.standard_normal(shape)
    imag = rng.standard_normal(shape)
    return (real + 1j * imag) / np.sqrt(2.0)


def draw_rayleigh_correlated(
    r_bs: Union[CovarianceMatrix, np.ndarray],
    large_scale: Optional[LargeScale],
    rng: np.random.Generator,
) -> np.ndarray:
    """Correlated Rayleigh vector h = scale R^(1/2) z"""
    root = psd_sqrt(r_bs)
    z = _circular_gaussian(rng, root.shape[0])
    return (large_scale or LargeScale()).amplitude * (root @ z)


def draw_kronecker(
    r_ms: Union[CovarianceMatrix, np.ndarray],
    r_bs: Union[CovarianceMatrix, np.ndarray],
    large_scale: Optional[LargeScale],
    rng: np.random.Generator,
) -> np.ndarray:
    """Kronecker-correlated matrix H = scale R_MS^(1/2) X R_BS^(1/2) (U x N)"""
    root_ms = psd_sqrt(r_ms)
    root_bs = psd_sqrt(r_bs)
    x = _circular_gaussian(rng, (root_ms.shape[0], root_bs.shape[0]))
    return (large_scale or LargeScale()).amplitude * (root_ms @ x @ root_bs)
