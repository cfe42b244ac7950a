"""
TXRU virtualization

Sub-array partition weights (1D and 2D), the mapping from TXRU signals to
element signals, and the block-diagonal virtualization matrix.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from app.models.antenna import ArrayGeometry
from app.core.errors import DimensionMismatchError, EmptyInputError, InvalidParameterError

logger = logging.getLogger(__name__)

UNIT_NORM_TOL = 1e-10


@dataclass(frozen=True)
class TiltWeights:
    """Unit-norm weight vector of one sub-array"""
    weights: np.ndarray
    theta_tilt_deg: Optional[float] = None  # provenance only

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, dtype=complex))
        if w.ndim != 1 or w.size == 0:
            raise EmptyInputError("tilt weights must be a non-empty vector")
        norm = np.linalg.norm(w)
        if abs(norm - 1.0) > UNIT_NORM_TOL:
            raise InvalidParameterError(f"tilt weights must be unit-norm, got norm {norm:.12f}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def normalized(cls, weights: np.ndarray, theta_tilt_deg: Optional[float] = None) -> "TiltWeights":
        w = np.asarray(weights, dtype=complex)
        norm = np.linalg.norm(w)
        if norm == 0:
            raise EmptyInputError("cannot normalize an all-zero weight vector")
        return cls(w / norm, theta_tilt_deg)

    def __len__(self) -> int:
        return self.weights.size


@dataclass(frozen=True)
class VirtualizationMatrix:
    """Block-diagonal NM x N matrix; column s carries w^s on rows (s-1)M+1..sM"""
    per_port: Tuple[TiltWeights, ...]
    dense: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.per_port) == 0:
            raise EmptyInputError("virtualization needs at least one port")
        m = len(self.per_port[0])
        if any(len(w) != m for w in self.per_port):
            raise DimensionMismatchError("all per-port weight vectors must have the same length")

        n = len(self.per_port)
        dense = np.zeros((n * m, n), dtype=complex)
        for s, w in enumerate(self.per_port):
            dense[s * m:(s + 1) * m, s] = w.weights
        dense.setflags(write=False)
        object.__setattr__(self, "dense", dense)

    @property
    def n_ports(self) -> int:
        return len(self.per_port)

    @property
    def m_per_port(self) -> int:
        return len(self.per_port[0])

    @property
    def is_common(self) -> bool:
        """True when every port uses the same weight vector"""
        first = self.per_port[0].weights
        return all(np.array_equal(first, w.weights) for w in self.per_port[1:])


def weights_1d(k: int, d_v: float, theta_tilt_deg: float) -> TiltWeights:
    """
    Phase-only downtilt weights of a K-element vertical sub-array

    w_k = (1/sqrt(K)) exp(-i 2 pi (k-1) d_v cos(theta_tilt))
    """
    if k < 1 or d_v <= 0:
        raise InvalidParameterError(f"need K >= 1 and d_v > 0, got K={k}, d_v={d_v}")
    phase = -2.0 * np.pi * np.arange(k) * d_v * np.cos(np.radians(theta_tilt_deg))
    return TiltWeights(np.exp(1j * phase) / np.sqrt(k), theta_tilt_deg)


def weights_2d(
    k: int, l: int, d_v: float, d_h: float, theta_tilt_deg: float, phi_scan_deg: float
) -> Tuple[TiltWeights, TiltWeights]:
    """
    Vertical and horizontal weights of a K x L 2D sub-array

    Returns:
        (vertical, horizontal); the element weights are their Kronecker product v (x) w
    """
    if l < 1 or d_h <= 0:
        raise InvalidParameterError(f"need L >= 1 and d_h > 0, got L={l}, d_h={d_h}")
    vertical = weights_1d(k, d_v, theta_tilt_deg)
    phase = -2.0 * np.pi * np.arange(l) * d_h * np.sin(np.radians(phi_scan_deg))
    horizontal = TiltWeights(np.exp(1j * phase) / np.sqrt(l))
    return vertical, horizontal


def map_subarray_1d(txru_signals: np.ndarray, w: TiltWeights) -> np.ndarray:
    """Element signals of the 1D sub-array partition, q = x (x) w"""
    x = np.atleast_1d(np.asarray(txru_signals, dtype=complex))
    if x.ndim != 1 or x.size == 0:
        raise DimensionMismatchError("TXRU signals must be a non-empty vector")
    return np.kron(x, w.weights)


def map_subarray_2d(x: complex, v: TiltWeights, w: TiltWeights) -> np.ndarray:
    """Element signals fed by one TXRU of the 2D partition, q = x (v (x) w)"""
    if np.ndim(x) != 0:
        raise DimensionMismatchError("2D sub-array mapping takes one TXRU symbol")
    return complex(x) * np.kron(v.weights, w.weights)


def build_virtualization(geometry: ArrayGeometry, per_port_weights: Sequence[TiltWeights]) -> VirtualizationMatrix:
    """
    Assemble W~ from exactly N per-port weight vectors of length M
    """
    weights = list(per_port_weights)
    if len(weights) != geometry.n_ports:
        raise DimensionMismatchError(f"expected {geometry.n_ports} weight vectors, got {len(weights)}")
    for w in weights:
        if len(w) != geometry.m_per_port:
            raise DimensionMismatchError(
                f"weight vector of length {len(w)} for ports of {geometry.m_per_port} elements"
            )
    return VirtualizationMatrix(tuple(weights))


def common_virtualization(geometry: ArrayGeometry, w: TiltWeights) -> VirtualizationMatrix:
    """W~ of the common-tilt architecture, where every port uses the same w"""
    return build_virtualization(geometry, [w] * geometry.n_ports)
