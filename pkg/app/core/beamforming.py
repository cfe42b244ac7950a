"""
Digital precoders, link metrics and downtilt selection

Channel matrices follow the convention that row k is h_k^H, so entry (k, j)
of H @ G is h_k^H g_j.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from app.config import settings
from app.core.channel import UserGeometry
from app.core.correlation import CovarianceMatrix, as_matrix, psd_sqrt
from app.core.errors import (
    DimensionMismatchError,
    EmptyInputError,
    InvalidParameterError,
    NotHermitianError,
    RankDeficiencyError,
    ZeroChannelError,
    ZeroTraceError,
)
from app.core.txru import TiltWeights

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class PowerAllocation:
    """Per-user transmit powers under a total budget"""
    powers: np.ndarray
    total: float

    def __post_init__(self):
        p = np.atleast_1d(np.asarray(self.powers, dtype=float))
        if np.any(p < 0):
            raise InvalidParameterError("powers must be nonnegative")
        if p.sum() > self.total * (1.0 + 1e-12):
            raise InvalidParameterError(f"powers sum to {p.sum():.6g} above the budget {self.total:.6g}")
        p.setflags(write=False)
        object.__setattr__(self, "powers", p)

    @property
    def n_users(self) -> int:
        return self.powers.size


@dataclass(frozen=True)
class PrecodingMatrix:
    """
    N x K precoder stored as unit-norm directions and per-user powers
    """
    directions: np.ndarray
    powers: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.directions, dtype=complex)
        if g.ndim == 1:
            g = g[:, None]
        p = np.atleast_1d(np.asarray(self.powers, dtype=float))
        if p.size != g.shape[1]:
            raise DimensionMismatchError(f"{g.shape[1]} precoding columns but {p.size} powers")
        g.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "directions", g)
        object.__setattr__(self, "powers", p)

    @property
    def matrix(self) -> np.ndarray:
        return self.directions * np.sqrt(self.powers)[None, :]

    @property
    def n_ports(self) -> int:
        return self.directions.shape[0]

    @property
    def n_users(self) -> int:
        return self.directions.shape[1]


@dataclass(frozen=True)
class LinkMetrics:
    """Per-user SINR and SIR (linear); SNR is set for single-user links"""
    sinr: np.ndarray
    sir: np.ndarray
    snr: Optional[np.ndarray] = None

    @property
    def rate(self) -> np.ndarray:
        return rate_from_sinr(self.sinr)

    @property
    def min_rate(self) -> float:
        return float(np.min(self.rate))

    @property
    def min_sir(self) -> float:
        return float(np.min(self.sir))


def rate_from_sinr(sinr: ArrayLike) -> ArrayLike:
    """Spectral efficiency log2(1 + SINR) in bit/s/Hz"""
    return np.log2(1.0 + np.asarray(sinr, dtype=float))[()]


def equal_power(total: float, n_users: int) -> PowerAllocation:
    if n_users < 1:
        raise EmptyInputError("power allocation needs at least one user")
    return PowerAllocation(np.full(n_users, total / n_users), total)


def _unit_columns(g: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(g, axis=0)
    if np.any(norms == 0):
        raise ZeroChannelError("precoder has an all-zero column")
    return g / norms[None, :]


def _powers(p, n_users: int) -> np.ndarray:
    if isinstance(p, PowerAllocation):
        p = p.powers
    powers = np.broadcast_to(np.asarray(p, dtype=float), (n_users,))
    if powers.size != n_users:
        raise DimensionMismatchError(f"{n_users} users but {powers.size} powers")
    return powers


def mrt(h: np.ndarray, p_tx: float) -> np.ndarray:
    """Maximum ratio transmission vector sqrt(P) h / ||h||"""
    h = np.asarray(h, dtype=complex).ravel()
    norm = np.linalg.norm(h)
    if norm == 0:
        raise ZeroChannelError("MRT needs a nonzero channel")
    return np.sqrt(p_tx) * h / norm


def mrt_multiuser(H: np.ndarray, p) -> PrecodingMatrix:
    """Per-user MRT directions h_k / ||h_k|| for a K x N channel"""
    H = np.atleast_2d(np.asarray(H, dtype=complex))
    return PrecodingMatrix(_unit_columns(H.conj().T), _powers(p, H.shape[0]))


def zf(H: np.ndarray, p) -> PrecodingMatrix:
    """
    Zero-forcing directions proportional to H^H (H H^H)^-1

    Raises:
        RankDeficiencyError: K > N or H without full row rank
    """
    H = np.atleast_2d(np.asarray(H, dtype=complex))
    k, n = H.shape
    if k > n or np.linalg.matrix_rank(H) < k:
        raise RankDeficiencyError(f"zero-forcing needs a full-row-rank {k} x {n} channel")
    g = H.conj().T @ np.linalg.inv(H @ H.conj().T)
    return PrecodingMatrix(_unit_columns(g), _powers(p, k))


def rzf(H: np.ndarray, p, regularizer: float) -> PrecodingMatrix:
    """Regularized zero-forcing directions proportional to H^H (H H^H + delta I)^-1"""
    if regularizer <= 0:
        raise InvalidParameterError(f"RZF regularizer must be positive, got {regularizer}")
    H = np.atleast_2d(np.asarray(H, dtype=complex))
    k = H.shape[0]
    g = H.conj().T @ np.linalg.inv(H @ H.conj().T + regularizer * np.eye(k))
    return PrecodingMatrix(_unit_columns(g), _powers(p, k))


def metrics(
    H: np.ndarray,
    G: Union[PrecodingMatrix, np.ndarray],
    p=None,
    noise_vars: ArrayLike = 0.0,
) -> LinkMetrics:
    """
    SINR_k = p_k |h_k^H g_k|^2 / (sum_{j != k} p_j |h_k^H g_j|^2 + sigma_k^2)

    G holds the precoding directions; powers default to those stored in a
    PrecodingMatrix. A zero denominator yields +inf.
    """
    H = np.atleast_2d(np.asarray(H, dtype=complex))
    if isinstance(G, PrecodingMatrix):
        directions = G.directions
        p = G.powers if p is None else p
    else:
        directions = np.asarray(G, dtype=complex)
        if directions.ndim == 1:
            directions = directions[:, None]
    k = H.shape[0]
    if directions.shape != (H.shape[1], k):
        raise DimensionMismatchError(
            f"channel {H.shape} does not match precoder {directions.shape}"
        )
    if p is None:
        raise InvalidParameterError("powers are required with a bare precoding matrix")
    powers = _powers(p, k)
    noise = np.broadcast_to(np.asarray(noise_vars, dtype=float), (k,))

    gains = np.abs(H @ directions) ** 2 * powers[None, :]
    signal = np.diag(gains).copy()
    interference = gains.sum(axis=1) - signal

    def _ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(den > 0, num / np.where(den > 0, den, 1.0), np.inf)

    sir = _ratio(signal, interference)
    sinr = _ratio(signal, interference + noise)
    snr = _ratio(signal, noise) if k == 1 else None
    return LinkMetrics(sinr=sinr, sir=sir, snr=snr)


def snr_single_user(h: np.ndarray, p_tx: float, noise_var: float) -> float:
    """Received SNR of single-user MRT, (P / sigma^2) ||h||^2"""
    if noise_var <= 0:
        raise InvalidParameterError(f"noise variance must be positive, got {noise_var}")
    return float(p_tx / noise_var * np.linalg.norm(np.asarray(h)) ** 2)


def _check_tilt(theta_deg: float) -> float:
    if not 0.0 < theta_deg < 180.0:
        raise InvalidParameterError(f"tilt must lie in (0, 180) deg, got {theta_deg}")
    return float(theta_deg)


def tilt_cst(theta_fixed_deg: float) -> float:
    """Cell-specific tilting: one fixed angle for everyone"""
    return _check_tilt(theta_fixed_deg)


def tilt_los(user: UserGeometry) -> float:
    return _check_tilt(user.los_elevation_deg)


def tilt_com(users: Sequence[UserGeometry]) -> float:
    """Center of means: arithmetic mean of the users' LoS elevations"""
    if len(users) == 0:
        raise EmptyInputError("tilt selection needs at least one user")
    return _check_tilt(float(np.mean([u.los_elevation_deg for u in users])))


def tilt_muab(users: Sequence[UserGeometry], weights: Optional[Sequence[float]] = None) -> float:
    """Weighted mean of the LoS elevations; uniform weights reduce to CoM"""
    if len(users) == 0:
        raise EmptyInputError("tilt selection needs at least one user")
    if weights is None:
        return tilt_com(users)
    w = np.asarray(weights, dtype=float)
    if w.shape != (len(users),):
        raise DimensionMismatchError(f"{len(users)} users but {w.size} weights")
    if np.any(w < 0) or w.sum() == 0:
        raise InvalidParameterError("MUAB weights must be nonnegative and not all zero")
    elevations = np.array([u.los_elevation_deg for u in users])
    return _check_tilt(float(w @ elevations / w.sum()))


def phase_fixed(w: np.ndarray) -> np.ndarray:
    """Rotate w so its first nonzero entry is real and positive"""
    w = np.asarray(w, dtype=complex)
    nonzero = np.flatnonzero(np.abs(w) > 1e-12)
    if nonzero.size == 0:
        return w
    lead = w[nonzero[0]]
    return w * (np.abs(lead) / lead)


def weights_eigen_single_user(r_block: Union[CovarianceMatrix, np.ndarray]) -> TiltWeights:
    """
    Principal eigenvector of the M x M diagonal block R^E_ss

    Ties among equal top eigenvalues resolve to the lowest-index standard
    basis vector with a component in that eigenspace.
    """
    r = as_matrix(r_block)
    if r.ndim != 2 or r.shape[0] != r.shape[1] or r.size == 0:
        raise DimensionMismatchError(f"expected a square block, got shape {r.shape}")
    scale = max(1.0, float(np.max(np.abs(r))))
    if np.max(np.abs(r - r.conj().T)) > settings.HERMITIAN_TOL * scale:
        raise NotHermitianError("covariance block is not Hermitian")

    eigenvalues, vectors = np.linalg.eigh(0.5 * (r + r.conj().T))
    top = eigenvalues[-1]
    space = vectors[:, eigenvalues >= top - 1e-10 * max(1.0, abs(top))]
    if space.shape[1] == 1:
        w = space[:, 0]
    else:
        projector = space @ space.conj().T
        column = int(np.argmax(np.linalg.norm(projector, axis=0) > 1e-8))
        w = projector[:, column]
    w = phase_fixed(w / np.linalg.norm(w))
    return TiltWeights(w)


def _validated_traces(covariances: Sequence) -> np.ndarray:
    if len(covariances) < 2:
        raise EmptyInputError("the SIR surrogate needs at least two users")
    mats = np.stack([as_matrix(r) for r in covariances])
    traces = np.real(np.trace(mats, axis1=1, axis2=2))
    if np.any(traces <= 0):
        raise ZeroTraceError("a user covariance has zero trace")
    return mats


def sir_deterministic(covariances: Sequence[Union[CovarianceMatrix, np.ndarray]]) -> np.ndarray:
    """
    Large-N SIR surrogate under equal-power MRT

    SIR_k = (tr R_k)^2 / sum_{j != k} tr(R_k R_j); +inf when the users do
    not overlap.
    """
    mats = _validated_traces(covariances)
    traces = np.real(np.trace(mats, axis1=1, axis2=2))
    cross = np.real(np.einsum("kab,jba->kj", mats, mats))
    np.fill_diagonal(cross, 0.0)
    interference = cross.sum(axis=1)
    with np.errstate(divide="ignore"):
        return np.where(interference > 0, traces ** 2 / np.where(interference > 0, interference, 1.0), np.inf)


def sir_monte_carlo(
    covariances: Sequence[Union[CovarianceMatrix, np.ndarray]],
    n_samples: int,
    rng: np.random.Generator,
    chunk: int = 2000,
) -> np.ndarray:
    """
    Ergodic SIR under unnormalized MRT (g_k = h_k) with correlated Rayleigh draws

    Ratio of the sample means of |h_k^H h_k|^2 and sum_{j != k} |h_k^H h_j|^2.
    """
    if n_samples < 1:
        raise InvalidParameterError(f"need n_samples >= 1, got {n_samples}")
    mats = _validated_traces(covariances)
    roots = np.stack([psd_sqrt(r) for r in mats])
    k, n = mats.shape[0], mats.shape[1]

    signal = np.zeros(k)
    interference = np.zeros(k)
    for start in range(0, n_samples, chunk):
        size = min(chunk, n_samples - start)
        z = (rng.standard_normal((size, k, n)) + 1j * rng.standard_normal((size, k, n))) / np.sqrt(2.0)
        h = np.einsum("kab,skb->ska", roots, z)
        gram = np.abs(np.einsum("ska,sja->skj", h.conj(), h)) ** 2
        own = np.einsum("skk->sk", gram)
        signal += own.sum(axis=0)
        interference += (gram.sum(axis=2) - own).sum(axis=0)
    with np.errstate(divide="ignore"):
        return np.where(interference > 0, signal / np.where(interference > 0, interference, 1.0), np.inf)
