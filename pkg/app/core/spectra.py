"""
Angular power spectra and cluster/subpath realization

Densities are returned per radian; angles cross every public interface in
degrees. Azimuths live on (-180, 180], elevations (zenith angles) on [0, 180].
"""

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate, special

from app.models.propagation import (
    ClusterConfig,
    FixedElevation,
    Laplacian,
    UniformAzimuth,
    UniformElevation,
    VonMises,
    WrappedGaussian,
)
from app.core.array import wrap_azimuth_deg
from app.core.errors import InvalidParameterError

if TYPE_CHECKING:
    from app.core.channel import UserGeometry

logger = logging.getLogger(__name__)

Spectrum = Union[VonMises, UniformAzimuth, WrappedGaussian, Laplacian, UniformElevation, FixedElevation]

SPEED_OF_LIGHT = 299_792_458.0

# Documented example set of symmetric subpath offsets (20 rays)
RAY_OFFSETS_20 = tuple(sorted(
    sign * a
    for a in (0.0447, 0.1413, 0.2492, 0.3715, 0.5129, 0.6797, 0.8844, 1.1481, 1.5195, 2.1551)
    for sign in (-1.0, 1.0)
))

_DEG = np.pi / 180.0
_WRAP_TERMS = np.arange(-4, 5)


def support(spectrum: Spectrum) -> Tuple[float, float]:
    """Support interval in degrees"""
    if isinstance(spectrum, (VonMises, WrappedGaussian)):
        return (-180.0, 180.0)
    if isinstance(spectrum, (UniformAzimuth, UniformElevation)):
        return (spectrum.lo_deg, spectrum.hi_deg)
    if isinstance(spectrum, Laplacian):
        return (0.0, 180.0)
    if isinstance(spectrum, FixedElevation):
        return (spectrum.theta_deg, spectrum.theta_deg)
    raise TypeError(f"unknown spectrum {type(spectrum).__name__}")


def _laplacian_scale_deg(spectrum: Laplacian) -> float:
    return spectrum.spread_deg / np.sqrt(2.0)


def _laplacian_cdf_untruncated(spectrum: Laplacian, theta_deg: np.ndarray) -> np.ndarray:
    b = _laplacian_scale_deg(spectrum)
    x = (np.asarray(theta_deg, dtype=float) - spectrum.theta0_deg) / b
    return np.where(x < 0, 0.5 * np.exp(np.minimum(x, 0.0)), 1.0 - 0.5 * np.exp(-np.maximum(x, 0.0)))


def _laplacian_mass(spectrum: Laplacian) -> float:
    lo, hi = _laplacian_cdf_untruncated(spectrum, np.array([0.0, 180.0]))
    return float(hi - lo)


def pdf(spectrum: Spectrum, angle_deg) -> Union[float, np.ndarray]:
    """
    Normalized density of the spectrum at the given angle(s), per radian

    Points outside the support have density 0. A fixed elevation is a point
    mass and has no finite density.
    """
    angle = np.asarray(angle_deg, dtype=float)

    if isinstance(spectrum, VonMises):
        delta = np.radians(angle - spectrum.mu_deg)
        # i0e keeps large concentrations finite
        density = np.exp(spectrum.kappa * (np.cos(delta) - 1.0)) / (2.0 * np.pi * special.i0e(spectrum.kappa))
        return density[()]

    if isinstance(spectrum, WrappedGaussian):
        sigma = np.radians(spectrum.sigma_deg)
        delta = np.radians(wrap_azimuth_deg(angle - spectrum.mu_deg))
        shifted = delta[..., None] + 2.0 * np.pi * _WRAP_TERMS
        density = np.exp(-0.5 * (shifted / sigma) ** 2).sum(axis=-1) / (np.sqrt(2.0 * np.pi) * sigma)
        return density[()]

    if isinstance(spectrum, (UniformAzimuth, UniformElevation)):
        width = np.radians(spectrum.hi_deg - spectrum.lo_deg)
        inside = (angle >= spectrum.lo_deg) & (angle <= spectrum.hi_deg)
        return np.where(inside, 1.0 / width, 0.0)[()]

    if isinstance(spectrum, Laplacian):
        b = np.radians(_laplacian_scale_deg(spectrum))
        theta0 = np.radians(spectrum.theta0_deg)
        density = np.exp(-np.abs(np.radians(angle) - theta0) / b) / (2.0 * b) / _laplacian_mass(spectrum)
        inside = (angle >= 0.0) & (angle <= 180.0)
        return np.where(inside, density, 0.0)[()]

    if isinstance(spectrum, FixedElevation):
        return np.where(angle == spectrum.theta_deg, np.inf, 0.0)[()]

    raise TypeError(f"unknown spectrum {type(spectrum).__name__}")


def cdf(spectrum: Spectrum, angle_deg, grid_points: int = 200_001) -> Union[float, np.ndarray]:
    """
    Cumulative distribution by numerical integration of the density

    The density is integrated on a fine grid over the support (trapezoid
    rule) and interpolated; accurate to well below 1e-6 for the spectra here.
    """
    angle = np.asarray(angle_deg, dtype=float)
    if isinstance(spectrum, FixedElevation):
        return np.where(angle >= spectrum.theta_deg, 1.0, 0.0)[()]

    lo, hi = support(spectrum)
    grid = np.linspace(lo, hi, grid_points)
    if isinstance(spectrum, Laplacian):
        grid = np.union1d(grid, [spectrum.theta0_deg])
    density = np.asarray(pdf(spectrum, grid)) * _DEG
    cumulative = integrate.cumulative_trapezoid(density, grid, initial=0.0)
    cumulative /= cumulative[-1]
    return np.interp(angle, grid, cumulative)[()]


def quadrature_rule(
    spectrum: Spectrum, n_nodes: int, breaks: Sequence[float] = ()
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Gauss-Legendre rule for expectations over the spectrum

    Returns (nodes_deg, weights) with sum(weights * f(nodes)) ~ E[f(angle)].
    The support is split at the density's mode or kink and at any extra
    `breaks` (kinks of the integrand, in degrees) so the rule converges
    quickly under refinement.
    """
    if isinstance(spectrum, FixedElevation):
        return np.array([spectrum.theta_deg]), np.array([1.0])

    if isinstance(spectrum, (VonMises, WrappedGaussian)):
        # one full period centred on the mode
        lo, hi = spectrum.mu_deg - 180.0, spectrum.mu_deg + 180.0
        inner = [spectrum.mu_deg] + [
            spectrum.mu_deg + float(wrap_azimuth_deg(b - spectrum.mu_deg)) for b in breaks
        ]
    else:
        lo, hi = support(spectrum)
        inner = list(breaks)
        if isinstance(spectrum, Laplacian):
            inner.append(spectrum.theta0_deg)
    edges = np.unique(np.clip([lo, hi, *inner], lo, hi))

    segments = max(edges.size - 1, 1)
    per_segment = max(n_nodes // segments, 2)
    x, w = np.polynomial.legendre.leggauss(per_segment)

    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        half = 0.5 * (b - a)
        nodes.append(a + half * (x + 1.0))
        weights.append(half * w * _DEG)

    nodes_deg = np.concatenate(nodes)
    weights = np.concatenate(weights) * np.asarray(pdf(spectrum, nodes_deg))
    if isinstance(spectrum, (VonMises, WrappedGaussian)):
        nodes_deg = wrap_azimuth_deg(nodes_deg)
    return nodes_deg, weights


def sample(spectrum: Spectrum, rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw n i.i.d. angles (degrees) from the spectrum"""
    if n < 1:
        raise InvalidParameterError(f"need n >= 1 samples, got {n}")

    if isinstance(spectrum, VonMises):
        draws = rng.vonmises(np.radians(spectrum.mu_deg), spectrum.kappa, size=n)
        return wrap_azimuth_deg(np.degrees(draws))

    if isinstance(spectrum, WrappedGaussian):
        draws = rng.normal(spectrum.mu_deg, spectrum.sigma_deg, size=n)
        return wrap_azimuth_deg(draws)

    if isinstance(spectrum, (UniformAzimuth, UniformElevation)):
        return rng.uniform(spectrum.lo_deg, spectrum.hi_deg, size=n)

    if isinstance(spectrum, Laplacian):
        # inverse CDF restricted to the truncated support
        b = _laplacian_scale_deg(spectrum)
        f_lo, f_hi = _laplacian_cdf_untruncated(spectrum, np.array([0.0, 180.0]))
        u = rng.uniform(f_lo, f_hi, size=n)
        with np.errstate(divide="ignore"):
            draws = np.where(
                u < 0.5,
                spectrum.theta0_deg + b * np.log(2.0 * u),
                spectrum.theta0_deg - b * np.log(2.0 * (1.0 - u)),
            )
        return np.clip(draws, 0.0, 180.0)

    if isinstance(spectrum, FixedElevation):
        return np.full(n, spectrum.theta_deg)

    raise TypeError(f"unknown spectrum {type(spectrum).__name__}")


@dataclass(frozen=True)
class LosRay:
    """Deterministic line-of-sight ray (angles in radians)"""
    power: float
    phi_dep: float
    theta_dep: float
    phi_arr: float
    theta_arr: float
    doppler_hz: float


@dataclass(frozen=True)
class PathRealization:
    """
    One drawn set of clusters and subpaths

    Angle arrays are in radians with shape (n_clusters, subpaths_per_cluster).
    Phases have shape (n_clusters, subpaths) for P=1 and
    (n_clusters, subpaths, 2, 2) for P=2, ordered [[tt, tp], [pt, pp]].
    """
    powers: np.ndarray
    cluster_phi_dep: np.ndarray
    cluster_theta_dep: np.ndarray
    cluster_phi_arr: np.ndarray
    cluster_theta_arr: np.ndarray
    phi_dep: np.ndarray
    theta_dep: np.ndarray
    phi_arr: np.ndarray
    theta_arr: np.ndarray
    phases: np.ndarray
    doppler_hz: np.ndarray
    xpr_linear: float
    los: Optional[LosRay] = None

    @property
    def n_clusters(self) -> int:
        return self.powers.size

    @property
    def subpaths_per_cluster(self) -> int:
        return self.phi_dep.shape[1]

    @property
    def polarization(self) -> int:
        return 2 if self.phases.ndim == 4 else 1

    @property
    def total_power(self) -> float:
        return float(self.powers.sum() + (self.los.power if self.los else 0.0))


def _doppler(phi_arr: np.ndarray, theta_arr: np.ndarray, speed_mps: float,
             velocity_azimuth_deg: float, wavelength_m: float) -> np.ndarray:
    """speed / lambda times the cosine between velocity and arrival direction"""
    if speed_mps == 0.0:
        return np.zeros(np.shape(phi_arr))
    direction = np.radians(velocity_azimuth_deg)
    cos_angle = np.sin(theta_arr) * (np.cos(phi_arr) * np.cos(direction) + np.sin(phi_arr) * np.sin(direction))
    return speed_mps / wavelength_m * cos_angle


def realize_paths(
    cluster_cfg: ClusterConfig,
    az_spectrum_dep,
    el_spectrum_dep,
    az_spectrum_arr,
    el_spectrum_arr,
    rng: np.random.Generator,
    *,
    polarization: int = 1,
    user: Optional["UserGeometry"] = None,
    carrier_frequency_hz: float = 2.0e9,
) -> PathRealization:
    """
    Draw cluster angles i.i.d. from the four spectra and spread subpaths

    Subpath angle = cluster angle + c * offset for each of the four angles;
    elevations are clipped into [0, 180] and azimuths wrapped. Cluster
    powers are uniform (1/N). With a Rician K-factor configured, the NLoS
    powers are scaled by 1/(K+1) and a LoS ray towards the user carries
    K/(K+1); the user geometry is then required.

    Draw order is fixed (four angle sets, then phases) so identical
    (seed, config) pairs reproduce bit-for-bit.
    """
    n = cluster_cfg.n_clusters
    spread = cluster_cfg.intra_cluster_spread_deg
    offsets = np.asarray(cluster_cfg.subpath_offsets, dtype=float)

    phi_dep_c = sample(az_spectrum_dep, rng, n)
    theta_dep_c = sample(el_spectrum_dep, rng, n)
    phi_arr_c = sample(az_spectrum_arr, rng, n)
    theta_arr_c = sample(el_spectrum_arr, rng, n)

    phi_dep = wrap_azimuth_deg(phi_dep_c[:, None] + spread.c_phi * offsets[None, :])
    theta_dep = np.clip(theta_dep_c[:, None] + spread.c_theta * offsets[None, :], 0.0, 180.0)
    phi_arr = wrap_azimuth_deg(phi_arr_c[:, None] + spread.c_phi_arr * offsets[None, :])
    theta_arr = np.clip(theta_arr_c[:, None] + spread.c_theta_arr * offsets[None, :], 0.0, 180.0)

    shape = phi_dep.shape if polarization == 1 else phi_dep.shape + (2, 2)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=shape)

    powers = np.full(n, 1.0 / n)
    speed = user.speed_mps if user is not None else 0.0
    heading = user.velocity_azimuth_deg if user is not None else 0.0
    wavelength = SPEED_OF_LIGHT / carrier_frequency_hz
    doppler = _doppler(np.radians(phi_arr), np.radians(theta_arr), speed, heading, wavelength)

    los = None
    if cluster_cfg.rician_k_db is not None:
        if user is None:
            raise InvalidParameterError("a LoS ray needs the user geometry")
        k_factor = 10.0 ** (cluster_cfg.rician_k_db / 10.0)
        powers = powers / (k_factor + 1.0)
        phi_arr_los = np.radians(float(wrap_azimuth_deg(user.los_azimuth_deg + 180.0)))
        theta_arr_los = np.radians(180.0 - user.los_elevation_deg)
        los = LosRay(
            power=k_factor / (k_factor + 1.0),
            phi_dep=np.radians(user.los_azimuth_deg),
            theta_dep=np.radians(user.los_elevation_deg),
            phi_arr=phi_arr_los,
            theta_arr=theta_arr_los,
            doppler_hz=float(_doppler(phi_arr_los, theta_arr_los, speed, heading, wavelength)),
        )

    logger.debug(f"Realized {n} clusters x {offsets.size} subpaths (LoS: {los is not None})")

    return PathRealization(
        powers=powers,
        cluster_phi_dep=np.radians(phi_dep_c),
        cluster_theta_dep=np.radians(theta_dep_c),
        cluster_phi_arr=np.radians(phi_arr_c),
        cluster_theta_arr=np.radians(theta_arr_c),
        phi_dep=np.radians(phi_dep),
        theta_dep=np.radians(theta_dep),
        phi_arr=np.radians(phi_arr),
        theta_arr=np.radians(theta_arr),
        phases=phases,
        doppler_hz=doppler,
        xpr_linear=10.0 ** (cluster_cfg.xpr_db / 10.0),
        los=los,
    )
