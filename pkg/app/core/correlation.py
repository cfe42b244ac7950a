"""
Spatial correlation and covariance assembly

Spatial correlation functions (SCF) of element pairs and ITU ports are
evaluated by nested Gauss-Legendre quadrature over the angular densities,
with Monte-Carlo estimators as an independent check. Element covariances
are Toeplitz-block in (s - s', m - m'), so the quadrature evaluates one lag
table and the matrix is filled from it.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, NamedTuple, Optional, Tuple, Union

import numpy as np

from app.config import settings
from app.models.antenna import ArrayGeometry, ItuPortPatternParams, PatternMode
from app.models.propagation import FixedElevation
from app.core.array import element_power_pattern, itu_port_pattern_linear
from app.core.errors import (
    DimensionMismatchError,
    IndexOutOfRangeError,
    InvalidParameterError,
    NotHermitianError,
    NotPsdError,
    QuadratureError,
)
from app.core.spectra import quadrature_rule, sample
from app.core.txru import VirtualizationMatrix

logger = logging.getLogger(__name__)

_MC_CHUNK = 20_000


class CovarianceLevel(str, Enum):
    ELEMENT = "element"
    PORT = "port"


class McEstimate(NamedTuple):
    """Monte-Carlo mean of a complex quantity and its standard error"""
    value: complex
    stderr: float


def _validated_hermitian(matrix: np.ndarray, psd_tol: float) -> np.ndarray:
    """Hermitize, check the spectrum and clamp small negative eigenvalues to 0"""
    r = np.atleast_2d(np.asarray(matrix, dtype=complex))
    if r.ndim != 2 or r.shape[0] != r.shape[1]:
        raise DimensionMismatchError(f"covariance must be square, got shape {r.shape}")

    scale = max(1.0, float(np.max(np.abs(r))) if r.size else 1.0)
    asymmetry = float(np.max(np.abs(r - r.conj().T))) if r.size else 0.0
    if asymmetry > settings.HERMITIAN_TOL * scale:
        raise NotHermitianError(f"matrix asymmetry {asymmetry:.3e} exceeds tolerance")

    r = 0.5 * (r + r.conj().T)
    eigenvalues, vectors = np.linalg.eigh(r)
    smallest = float(eigenvalues[0])
    if smallest < -psd_tol * scale:
        raise NotPsdError(smallest, psd_tol)
    if smallest < 0.0:
        r = (vectors * np.clip(eigenvalues, 0.0, None)) @ vectors.conj().T
        r = 0.5 * (r + r.conj().T)
    np.fill_diagonal(r, np.real(np.diag(r)))
    return r


@dataclass(frozen=True)
class CovarianceMatrix:
    """
    Hermitian PSD spatial covariance, element level (NM x NM) or port level (N x N)

    The stored matrix is Hermitian to machine precision with a real
    diagonal; eigenvalues in [-tol, 0) are clamped on construction.
    """
    matrix: np.ndarray
    level: CovarianceLevel = CovarianceLevel.PORT
    metadata: Dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        r = _validated_hermitian(self.matrix, settings.PSD_CLAMP_TOL)
        r.setflags(write=False)
        object.__setattr__(self, "matrix", r)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))

    def block(self, s: int, s_prime: int, m_per_port: int) -> np.ndarray:
        """M x M block (rows of port s', columns of port s), 1-based ports"""
        n = self.size // m_per_port
        if not (1 <= s <= n and 1 <= s_prime <= n) or self.size % m_per_port:
            raise IndexOutOfRangeError(f"port block ({s}, {s_prime}) outside {n} ports of {m_per_port}")
        rows = slice((s_prime - 1) * m_per_port, s_prime * m_per_port)
        cols = slice((s - 1) * m_per_port, s * m_per_port)
        return self.matrix[rows, cols]

    def scaled(self, factor: float) -> "CovarianceMatrix":
        return CovarianceMatrix(self.matrix * factor, self.level, dict(self.metadata))


def as_matrix(r: Union[CovarianceMatrix, np.ndarray]) -> np.ndarray:
    return r.matrix if isinstance(r, CovarianceMatrix) else np.asarray(r, dtype=complex)


def psd_sqrt(r: Union[CovarianceMatrix, np.ndarray], tol: Optional[float] = None) -> np.ndarray:
    """
    Hermitian square root through the eigendecomposition

    Eigenvalues above -tol (relative to max(1, |R|max)) are clamped to 0;
    anything more negative is rejected.
    """
    tol = settings.PSD_CLAMP_TOL if tol is None else tol
    hermitian = _validated_hermitian(as_matrix(r), tol)
    eigenvalues, vectors = np.linalg.eigh(hermitian)
    return (vectors * np.sqrt(np.clip(eigenvalues, 0.0, None))) @ vectors.conj().T


def _refine(compute: Callable[[int], np.ndarray], label: str) -> np.ndarray:
    """
    Nested refinement: double the node count until successive results agree

    The tolerance is absolute on the unit-radiated-power scale, i.e. it is
    multiplied by max(1, largest magnitude in the result).
    """
    tol = settings.QUAD_ABS_TOL
    n = settings.QUAD_MIN_NODES
    previous = compute(n)
    change = np.inf
    while 2 * n <= settings.QUAD_MAX_NODES:
        n *= 2
        current = compute(n)
        change = float(np.max(np.abs(current - previous)))
        scale = max(1.0, float(np.max(np.abs(current))))
        logger.debug(f"{label}: {n} nodes, change {change:.3e}")
        if change < tol * scale:
            return current
        previous = current
    raise QuadratureError(n, change, tol)


def _element_kinks(geometry: ArrayGeometry, mode: PatternMode) -> Tuple[Tuple[float, ...], Tuple[float, ...]]:
    """Azimuth and elevation kinks of the element pattern clamps (deg)"""
    if mode == PatternMode.ISOTROPIC:
        return (), ()
    p = geometry.element_params
    phi_clamp = p.phi_3db_deg * np.sqrt(p.front_back_ratio_db / 12.0)
    theta_clamp = p.theta_3db_deg * np.sqrt(p.sla_v_db / 12.0)
    phi_breaks = () if mode == PatternMode.ELEVATION_ONLY else (-phi_clamp, phi_clamp)
    return phi_breaks, (90.0 - theta_clamp, 90.0 + theta_clamp)


def _element_lag_table(
    geometry: ArrayGeometry,
    phi_deg: np.ndarray,
    phi_w: np.ndarray,
    theta_deg: np.ndarray,
    theta_w: np.ndarray,
    mode: PatternMode,
) -> np.ndarray:
    """
    Tensor-rule table rho[ds, dm + M - 1] for ds in 0..N-1, dm in -(M-1)..M-1
    """
    m, n = geometry.m_per_port, geometry.n_ports
    phi = np.radians(phi_deg)
    theta = np.radians(theta_deg)

    gain = element_power_pattern(geometry.element_params, phi_deg[None, :], theta_deg[:, None], mode)
    weighted = gain * phi_w[None, :]
    u = np.sin(theta)[:, None] * np.sin(phi)[None, :]

    dm = np.arange(-(m - 1), m)
    vertical = np.exp(1j * 2.0 * np.pi * geometry.d_v * np.multiply.outer(dm, np.cos(theta)))

    table = np.empty((n, dm.size), dtype=complex)
    for ds in range(n):
        inner = (weighted * np.exp(1j * 2.0 * np.pi * geometry.d_h * ds * u)).sum(axis=1)
        table[ds] = vertical @ (theta_w * inner)
    return table


def _element_lag_table_quad(geometry: ArrayGeometry, az_spectrum, el_spectrum, mode: PatternMode) -> np.ndarray:
    phi_breaks, theta_breaks = _element_kinks(geometry, mode)

    def compute(nodes: int) -> np.ndarray:
        phi, phi_w = quadrature_rule(az_spectrum, nodes, phi_breaks)
        theta, theta_w = quadrature_rule(el_spectrum, nodes, theta_breaks)
        return _element_lag_table(geometry, phi, phi_w, theta, theta_w, mode)

    return _refine(compute, "element SCF")


def _check_pair(geometry: ArrayGeometry, pair: Tuple[int, int]) -> Tuple[int, int]:
    m, s = pair
    if not (1 <= m <= geometry.m_per_port and 1 <= s <= geometry.n_ports):
        raise IndexOutOfRangeError(
            f"element (m={m}, s={s}) outside {geometry.m_per_port} x {geometry.n_ports} array"
        )
    return m, s


def _lookup(table: np.ndarray, geometry: ArrayGeometry, ds: int, dm: int) -> complex:
    """rho at (s - s', m - m') from a table holding ds >= 0"""
    offset = geometry.m_per_port - 1
    if ds >= 0:
        return complex(table[ds, dm + offset])
    return complex(np.conj(table[-ds, -dm + offset]))


def scf_element_quad(
    geometry: ArrayGeometry,
    az_spectrum,
    el_spectrum,
    pair: Tuple[int, int],
    pair_prime: Tuple[int, int],
    *,
    pattern_mode: PatternMode = PatternMode.FULL,
) -> complex:
    """
    SCF of the channels from elements (m, s) and (m', s') by quadrature

    E[|g_E|^2 exp(i 2 pi [d_h (s - s') sin(phi) sin(theta) + d_v (m - m') cos(theta)])]

    Raises:
        QuadratureError: tolerance not met at the finest refinement level
    """
    m, s = _check_pair(geometry, pair)
    m_p, s_p = _check_pair(geometry, pair_prime)
    table = _element_lag_table_quad(geometry, az_spectrum, el_spectrum, pattern_mode)
    return _lookup(table, geometry, s - s_p, m - m_p)


def _mc_moments(values_fn: Callable[[np.ndarray, np.ndarray], np.ndarray],
                phi: np.ndarray, theta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Streaming mean and complex standard error over sample chunks"""
    total = 0.0
    total_sq = 0.0
    count = phi.size
    for start in range(0, count, _MC_CHUNK):
        values = values_fn(phi[start:start + _MC_CHUNK], theta[start:start + _MC_CHUNK])
        total = total + values.sum(axis=0)
        total_sq = total_sq + (np.abs(values) ** 2).sum(axis=0)
    mean = total / count
    variance = np.maximum(total_sq / count - np.abs(mean) ** 2, 0.0) * count / max(count - 1, 1)
    return mean, np.sqrt(variance / count)


def _element_mc_values(geometry: ArrayGeometry, ds: np.ndarray, dm: np.ndarray, mode: PatternMode):
    def values(phi_deg: np.ndarray, theta_deg: np.ndarray) -> np.ndarray:
        phi, theta = np.radians(phi_deg), np.radians(theta_deg)
        gain = element_power_pattern(geometry.element_params, phi_deg, theta_deg, mode)
        phase = (
            geometry.d_h * np.multiply.outer(np.sin(phi) * np.sin(theta), ds)
            + geometry.d_v * np.multiply.outer(np.cos(theta), dm)
        )
        return gain[:, None] * np.exp(1j * 2.0 * np.pi * phase)
    return values


def scf_element_mc_estimate(
    geometry: ArrayGeometry,
    az_spectrum,
    el_spectrum,
    pair: Tuple[int, int],
    pair_prime: Tuple[int, int],
    n_samples: int,
    rng: np.random.Generator,
    *,
    pattern_mode: PatternMode = PatternMode.FULL,
) -> McEstimate:
    """Sample mean of the element SCF integrand with its standard error"""
    m, s = _check_pair(geometry, pair)
    m_p, s_p = _check_pair(geometry, pair_prime)
    phi = sample(az_spectrum, rng, n_samples)
    theta = sample(el_spectrum, rng, n_samples)
    mean, stderr = _mc_moments(
        _element_mc_values(geometry, np.array([s - s_p]), np.array([m - m_p]), pattern_mode), phi, theta
    )
    return McEstimate(complex(mean[0]), float(stderr[0]))


def scf_element_mc(
    geometry: ArrayGeometry,
    az_spectrum,
    el_spectrum,
    pair: Tuple[int, int],
    pair_prime: Tuple[int, int],
    n_samples: int,
    rng: np.random.Generator,
    *,
    pattern_mode: PatternMode = PatternMode.FULL,
) -> complex:
    """Monte-Carlo element SCF"""
    return scf_element_mc_estimate(
        geometry, az_spectrum, el_spectrum, pair, pair_prime, n_samples, rng, pattern_mode=pattern_mode
    ).value


def _itu_kinks(params: ItuPortPatternParams, theta_tilt_deg: float) -> Tuple[Tuple[float, ...], Tuple[float, ...]]:
    phi_clamp = params.phi_3db_deg * np.sqrt(params.front_back_ratio_db / 12.0)
    theta_clamp = params.theta_3db_deg * np.sqrt(params.front_back_ratio_db / 12.0)
    return (-phi_clamp, phi_clamp), (theta_tilt_deg - theta_clamp, theta_tilt_deg + theta_clamp)


def scf_port_itu_estimate(
    itu_params: ItuPortPatternParams,
    az_spectrum,
    el_spectrum,
    theta_tilt_deg: float,
    s: int,
    s_prime: int,
    method: str = "quad",
    *,
    d_h: float = 0.5,
    n_samples: int = 100_000,
    rng: Optional[np.random.Generator] = None,
) -> McEstimate:
    """
    ITU port SCF E[|g_P|^2 exp(i 2 pi d_h (s - s') sin(phi) sin(theta))]

    The standard error is 0 for the quadrature method.
    """
    if s < 1 or s_prime < 1:
        raise IndexOutOfRangeError(f"port indices are 1-based, got ({s}, {s_prime})")
    ds = s - s_prime

    if method == "quad":
        phi_breaks, theta_breaks = _itu_kinks(itu_params, theta_tilt_deg)

        def compute(nodes: int) -> np.ndarray:
            phi, phi_w = quadrature_rule(az_spectrum, nodes, phi_breaks)
            theta, theta_w = quadrature_rule(el_spectrum, nodes, theta_breaks)
            gain = itu_port_pattern_linear(itu_params, phi[None, :], theta[:, None], theta_tilt_deg)
            u = np.sin(np.radians(theta))[:, None] * np.sin(np.radians(phi))[None, :]
            integrand = gain * np.exp(1j * 2.0 * np.pi * d_h * ds * u)
            return np.array([theta_w @ integrand @ phi_w])

        return McEstimate(complex(_refine(compute, "ITU port SCF")[0]), 0.0)

    if method == "mc":
        if rng is None:
            raise InvalidParameterError("the Monte-Carlo SCF needs an rng")
        phi = sample(az_spectrum, rng, n_samples)
        theta = sample(el_spectrum, rng, n_samples)

        def values(phi_deg: np.ndarray, theta_deg: np.ndarray) -> np.ndarray:
            gain = itu_port_pattern_linear(itu_params, phi_deg, theta_deg, theta_tilt_deg)
            u = np.sin(np.radians(theta_deg)) * np.sin(np.radians(phi_deg))
            return (gain * np.exp(1j * 2.0 * np.pi * d_h * ds * u))[:, None]

        mean, stderr = _mc_moments(values, phi, theta)
        return McEstimate(complex(mean[0]), float(stderr[0]))

    raise InvalidParameterError(f"unknown SCF method {method!r}; use 'quad' or 'mc'")


def scf_port_itu(
    itu_params: ItuPortPatternParams,
    az_spectrum,
    el_spectrum,
    theta_tilt_deg: float,
    s: int,
    s_prime: int,
    method: str = "quad",
    **kwargs,
) -> complex:
    """ITU port SCF value (see scf_port_itu_estimate)"""
    return scf_port_itu_estimate(
        itu_params, az_spectrum, el_spectrum, theta_tilt_deg, s, s_prime, method, **kwargs
    ).value


def _fill_from_table(geometry: ArrayGeometry, table: np.ndarray) -> np.ndarray:
    """[R]_{(s'-1)M+m', (s-1)M+m} = rho(s - s', m - m')"""
    m, n = geometry.m_per_port, geometry.n_ports
    index_s = np.repeat(np.arange(n), m)
    index_m = np.tile(np.arange(m), n)
    ds = index_s[None, :] - index_s[:, None]
    dm = index_m[None, :] - index_m[:, None]
    offset = m - 1
    forward = table[np.abs(ds), np.where(ds >= 0, dm, -dm) + offset]
    return np.where(ds >= 0, forward, np.conj(forward))


def element_covariance(
    geometry: ArrayGeometry,
    az_spectrum,
    el_spectrum,
    method: str = "quad",
    *,
    pattern_mode: PatternMode = PatternMode.FULL,
    n_samples: int = 100_000,
    rng: Optional[np.random.Generator] = None,
) -> CovarianceMatrix:
    """
    Element-level covariance R^E (NM x NM) of the whole array

    Entries follow the element SCF and are indexed [(s'-1)M+m', (s-1)M+m].
    """
    if method == "quad":
        table = _element_lag_table_quad(geometry, az_spectrum, el_spectrum, pattern_mode)
    elif method == "mc":
        if rng is None:
            raise InvalidParameterError("the Monte-Carlo covariance needs an rng")
        m, n = geometry.m_per_port, geometry.n_ports
        ds, dm = np.meshgrid(np.arange(n), np.arange(-(m - 1), m), indexing="ij")
        phi = sample(az_spectrum, rng, n_samples)
        theta = sample(el_spectrum, rng, n_samples)
        mean, _ = _mc_moments(_element_mc_values(geometry, ds.ravel(), dm.ravel(), pattern_mode), phi, theta)
        table = mean.reshape(ds.shape)
    else:
        raise InvalidParameterError(f"unknown covariance method {method!r}; use 'quad' or 'mc'")

    metadata = {
        "azimuth": az_spectrum.model_dump(),
        "elevation": el_spectrum.model_dump(),
        "method": method,
        "pattern_mode": pattern_mode.value,
    }
    return CovarianceMatrix(_fill_from_table(geometry, table), CovarianceLevel.ELEMENT, metadata)


def port_covariance(r_element: Union[CovarianceMatrix, np.ndarray], vm: VirtualizationMatrix) -> CovarianceMatrix:
    """Port-level covariance R_BS = W~^H R^E W~"""
    r = as_matrix(r_element)
    w = vm.dense
    if r.shape[0] != w.shape[0]:
        raise DimensionMismatchError(
            f"element covariance of size {r.shape[0]} vs virtualization with {w.shape[0]} rows"
        )
    metadata = dict(r_element.metadata) if isinstance(r_element, CovarianceMatrix) else {}
    return CovarianceMatrix(w.conj().T @ r @ w, CovarianceLevel.PORT, metadata)


def covariance_2d_restricted(
    geometry: ArrayGeometry,
    az_spectrum,
    s: int,
    s_prime: int,
    *,
    itu_params: ItuPortPatternParams = ItuPortPatternParams(),
) -> complex:
    """
    Port SCF of the 2D model: every ray and the tilt at theta = 90 deg
    """
    return scf_port_itu(
        itu_params, az_spectrum, FixedElevation(theta_deg=90.0), 90.0, s, s_prime, "quad", d_h=geometry.d_h
    )
