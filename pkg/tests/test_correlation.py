import numpy as np
import pytest

from app.models.antenna import ArrayGeometry, ItuPortPatternParams, PatternMode
from app.models.propagation import ClusterConfig, FixedElevation, Laplacian, UniformAzimuth, VonMises
from app.core.array import matched_itu_params
from app.core.channel import raytrace_port_channel_element_approach
from app.core.correlation import (
    CovarianceLevel,
    CovarianceMatrix,
    covariance_2d_restricted,
    element_covariance,
    port_covariance,
    psd_sqrt,
    scf_element_mc,
    scf_element_mc_estimate,
    scf_element_quad,
    scf_port_itu,
    scf_port_itu_estimate,
)
from app.core.errors import (
    DimensionMismatchError,
    IndexOutOfRangeError,
    InvalidParameterError,
    NotHermitianError,
    NotPsdError,
)
from app.core.spectra import realize_paths
from app.core.txru import common_virtualization, weights_1d

from tests.conftest import random_psd


def test_covariance_is_hermitian_with_real_diagonal(default_element_covariance):
    r = default_element_covariance.matrix
    assert r.shape == (32, 32)
    np.testing.assert_allclose(r, r.conj().T, atol=1e-14)
    assert np.all(np.imag(np.diag(r)) == 0)
    assert np.min(np.linalg.eigvalsh(r)) > -1e-9


def test_covariance_entries_follow_lag_convention(default_element_covariance, geometry, azimuth, elevation):
    r = default_element_covariance.matrix
    m = geometry.m_per_port
    # row (s'=1, m'=1), column (s=2, m=3)
    expected = scf_element_quad(geometry, azimuth, elevation, (3, 2), (1, 1))
    assert r[0, m + 2] == pytest.approx(expected, abs=1e-9)
    # Toeplitz-block: same lags, same value
    assert r[1, m + 3] == pytest.approx(expected, abs=1e-9)


def test_scf_conjugate_symmetry(geometry, azimuth, elevation):
    forward = scf_element_quad(geometry, azimuth, elevation, (2, 1), (5, 3))
    backward = scf_element_quad(geometry, azimuth, elevation, (5, 3), (2, 1))
    assert forward == pytest.approx(np.conj(backward), abs=1e-9)


def test_scf_rejects_out_of_range_elements(geometry, azimuth, elevation):
    with pytest.raises(IndexOutOfRangeError):
        scf_element_quad(geometry, azimuth, elevation, (9, 1), (1, 1))


@pytest.mark.slow
def test_quadrature_agrees_with_monte_carlo(geometry, azimuth, elevation, rng):
    quad = scf_element_quad(geometry, azimuth, elevation, (3, 1), (1, 2))
    estimate = scf_element_mc_estimate(geometry, azimuth, elevation, (3, 1), (1, 2), 200_000, rng)
    assert abs(estimate.value - quad) < 5.0 * estimate.stderr + 1e-3


def test_mc_scf_is_seeded_point_estimate(geometry, azimuth, elevation):
    value = scf_element_mc(geometry, azimuth, elevation, (2, 1), (1, 1), 2_000, np.random.default_rng(7))
    estimate = scf_element_mc_estimate(
        geometry, azimuth, elevation, (2, 1), (1, 1), 2_000, np.random.default_rng(7)
    )
    assert value == estimate.value
    assert np.isfinite(value) and estimate.stderr > 0.0


def test_isotropic_diagonal_is_unit_power(azimuth, elevation):
    geometry = ArrayGeometry(m_per_port=4, n_ports=2)
    r = element_covariance(geometry, azimuth, elevation, pattern_mode=PatternMode.ISOTROPIC)
    np.testing.assert_allclose(np.real(np.diag(r.matrix)), 1.0, atol=1e-6)
    assert r.level == CovarianceLevel.ELEMENT
    assert r.metadata["pattern_mode"] == "isotropic"


def test_mc_covariance_needs_rng(azimuth, elevation):
    with pytest.raises(InvalidParameterError):
        element_covariance(ArrayGeometry(m_per_port=2, n_ports=2), azimuth, elevation, "mc")
    with pytest.raises(InvalidParameterError):
        element_covariance(ArrayGeometry(m_per_port=2, n_ports=2), azimuth, elevation, "simpson")


def test_port_covariance_projection(default_element_covariance, geometry):
    vm = common_virtualization(geometry, weights_1d(8, 0.8, 96.5))
    r_bs = port_covariance(default_element_covariance, vm)
    assert r_bs.size == 4
    assert r_bs.level == CovarianceLevel.PORT
    w = weights_1d(8, 0.8, 96.5).weights
    block = default_element_covariance.block(2, 2, 8)
    assert r_bs.matrix[1, 1] == pytest.approx(np.vdot(w, block @ w), abs=1e-12)


def test_port_covariance_dimension_check(default_element_covariance):
    vm = common_virtualization(ArrayGeometry(m_per_port=4), weights_1d(4, 0.8, 96.5))
    with pytest.raises(DimensionMismatchError):
        port_covariance(default_element_covariance, vm)


def test_block_indices(default_element_covariance):
    block = default_element_covariance.block(1, 2, 8)
    np.testing.assert_array_equal(block, default_element_covariance.matrix[8:16, 0:8])
    with pytest.raises(IndexOutOfRangeError):
        default_element_covariance.block(5, 1, 8)


def test_covariance_validation(rng):
    with pytest.raises(NotHermitianError):
        CovarianceMatrix(np.array([[1.0, 1.0], [0.0, 1.0]]))
    with pytest.raises(NotPsdError):
        CovarianceMatrix(np.diag([1.0, -0.5]))
    with pytest.raises(DimensionMismatchError):
        CovarianceMatrix(np.ones((2, 3)))
    # tiny negative eigenvalues are clamped
    clamped = CovarianceMatrix(np.diag([1.0, -1e-13]))
    assert np.min(np.linalg.eigvalsh(clamped.matrix)) >= 0.0


def test_psd_sqrt_squares_back(rng):
    r = random_psd(rng, 5, rank=3)
    root = psd_sqrt(r)
    np.testing.assert_allclose(root @ root.conj().T, r, atol=1e-10)
    np.testing.assert_allclose(root, root.conj().T, atol=1e-12)


def test_itu_scf_quad_and_mc_agree(rng):
    params = matched_itu_params(8, 0.8)
    quad = scf_port_itu(params, VonMises(), Laplacian(theta0_deg=96.5), 96.5, 2, 1)
    estimate = scf_port_itu_estimate(params, VonMises(), Laplacian(theta0_deg=96.5), 96.5, 2, 1, "mc",
                                     n_samples=100_000, rng=rng)
    assert abs(estimate.value - quad) < 5.0 * estimate.stderr + 1e-3
    assert scf_port_itu_estimate(params, VonMises(), Laplacian(), 90.0, 1, 1).stderr == 0.0


def test_itu_scf_rejects_bad_arguments():
    with pytest.raises(IndexOutOfRangeError):
        scf_port_itu(ItuPortPatternParams(), VonMises(), Laplacian(), 90.0, 0, 1)
    with pytest.raises(InvalidParameterError):
        scf_port_itu(ItuPortPatternParams(), VonMises(), Laplacian(), 90.0, 1, 1, "mc")


def test_point_mass_elevation_reduces_to_2d(geometry):
    params = ItuPortPatternParams()
    restricted = covariance_2d_restricted(geometry, VonMises(), 3, 1, itu_params=params)
    direct = scf_port_itu(params, VonMises(), FixedElevation(theta_deg=90.0), 90.0, 3, 1, d_h=geometry.d_h)
    assert restricted == pytest.approx(direct)


def test_elevation_spread_lowers_vertical_correlation():
    geometry = ArrayGeometry(m_per_port=4, n_ports=1)
    values = []
    for spread in (2.0, 8.0, 25.0):
        r = element_covariance(geometry, UniformAzimuth(), Laplacian(spread_deg=spread),
                               pattern_mode=PatternMode.ELEVATION_ONLY).matrix
        values.append(abs(r[0, 1]) / np.real(r[0, 0]))
    assert values[0] > values[1] > values[2]


def test_matched_itu_tracks_element_port_correlation(geometry, default_element_covariance):
    tilt = 96.5
    vm = common_virtualization(geometry, weights_1d(geometry.m_per_port, geometry.d_v, tilt))
    r_port = port_covariance(default_element_covariance, vm).matrix
    params = matched_itu_params(geometry.m_per_port, geometry.d_v)
    for s in range(2, geometry.n_ports + 1):
        itu = scf_port_itu(params, VonMises(), Laplacian(), tilt, s, 1, d_h=geometry.d_h)
        element = r_port[0, s - 1]
        assert abs(abs(itu) - abs(element)) <= 0.1 * abs(element), s


@pytest.mark.slow
def test_port_covariance_matches_raytraced_port_channels(cell_edge_user):
    geometry = ArrayGeometry(m_per_port=4, n_ports=2)
    azimuth = VonMises(mu_deg=30.0)
    vm = common_virtualization(geometry, weights_1d(4, geometry.d_v, 100.0))
    expected = port_covariance(element_covariance(geometry, azimuth, Laplacian()), vm).matrix

    rng = np.random.default_rng(2024)
    drops = 10_000
    total = np.zeros_like(expected)
    for _ in range(drops):
        paths = realize_paths(ClusterConfig(), azimuth, Laplacian(), VonMises(), Laplacian(), rng)
        h = raytrace_port_channel_element_approach(geometry, vm, cell_edge_user, paths).matrix
        total += h.conj().T @ h
    estimate = total / drops
    assert np.linalg.norm(estimate - expected) < 0.05 * np.linalg.norm(expected)
