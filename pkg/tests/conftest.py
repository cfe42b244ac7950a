"""
Shared fixtures
"""

import os

os.environ.setdefault("ENVIRONMENT", "testing")

import numpy as np
import pytest

from app.models.antenna import ArrayGeometry
from app.models.propagation import Laplacian, VonMises
from app.core.channel import UserGeometry
from app.core.correlation import element_covariance


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def geometry():
    """Default 8 x 4 array, single polarization"""
    return ArrayGeometry()


@pytest.fixture
def small_geometry():
    return ArrayGeometry(m_per_port=4, n_ports=2)


@pytest.fixture
def azimuth():
    return VonMises()


@pytest.fixture
def elevation():
    return Laplacian()


@pytest.fixture(scope="session")
def default_element_covariance():
    """Quadrature element covariance under the default spectra (computed once)"""
    return element_covariance(ArrayGeometry(), VonMises(), Laplacian())


@pytest.fixture
def cell_edge_user():
    return UserGeometry(los_azimuth_deg=0.0, los_elevation_deg=95.37, distance_m=250.0)


def random_psd(rng: np.random.Generator, n: int, rank: int = None) -> np.ndarray:
    rank = rank or n
    x = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    return x @ x.conj().T / rank
