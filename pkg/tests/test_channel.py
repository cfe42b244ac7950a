import numpy as np
import pytest

from app.models.antenna import ArrayGeometry, ItuPortPatternParams, PatternMode, branch_slants
from app.models.propagation import ClusterConfig, Laplacian, PathLossModel, VonMises
from app.core.channel import (
    ChannelApproach,
    LargeScale,
    UserGeometry,
    draw_kronecker,
    draw_large_scale,
    draw_rayleigh_correlated,
    path_loss_db,
    raytrace_element_channel,
    raytrace_port_channel_element_approach,
    raytrace_port_channel_itu,
    tx_array_response_element,
)
from app.core.errors import DimensionMismatchError, IndexOutOfRangeError, InvalidParameterError, NotPsdError
from app.core.spectra import realize_paths
from app.core.txru import common_virtualization, weights_1d

from tests.conftest import random_psd


def _paths(rng, cfg=None, polarization=1, user=None):
    return realize_paths(cfg or ClusterConfig(), VonMises(), Laplacian(), VonMises(), Laplacian(), rng,
                         polarization=polarization, user=user)


def test_path_loss_reference_point():
    model = PathLossModel()
    assert path_loss_db(model, 1000.0) == pytest.approx(128.1)
    assert path_loss_db(model, 100.0) == pytest.approx(128.1 - 37.6)
    with pytest.raises(InvalidParameterError):
        path_loss_db(model, 0.0)


def test_large_scale_amplitude():
    ls = LargeScale(path_loss_db=100.0, shadow_fading_db=-10.0)
    assert ls.power_gain == pytest.approx(1e-9)
    assert LargeScale().amplitude == 1.0


def test_large_scale_without_shadowing(rng):
    ls = draw_large_scale(PathLossModel(shadow_std_db=0.0), 250.0, rng)
    assert ls.shadow_fading_db == 0.0
    assert ls.path_loss_db == pytest.approx(path_loss_db(PathLossModel(), 250.0))


def test_user_geometry_validation():
    with pytest.raises(InvalidParameterError):
        UserGeometry(los_azimuth_deg=0.0, los_elevation_deg=180.0, distance_m=10.0)
    with pytest.raises(InvalidParameterError):
        UserGeometry(los_azimuth_deg=0.0, los_elevation_deg=95.0, distance_m=0.0)


def test_tx_response_reference_element():
    geometry = ArrayGeometry()
    assert tx_array_response_element(geometry, 1, 1, 37.0, 71.0) == pytest.approx(1.0)
    expected = np.exp(1j * 2 * np.pi * 0.8 * np.cos(np.radians(60.0)))
    assert tx_array_response_element(geometry, 1, 2, 0.0, 60.0) == pytest.approx(expected)
    with pytest.raises(IndexOutOfRangeError):
        tx_array_response_element(geometry, 5, 1, 0.0, 90.0)


def test_single_ray_isotropic_channel_has_unit_magnitude(cell_edge_user):
    geometry = ArrayGeometry(m_per_port=4, n_ports=2)
    paths = _paths(np.random.default_rng(1), ClusterConfig(n_clusters=1))
    snapshot = raytrace_element_channel(geometry, cell_edge_user, paths, pattern_mode=PatternMode.ISOTROPIC)
    assert snapshot.shape == (1, 8)
    assert snapshot.approach == ChannelApproach.ELEMENT
    np.testing.assert_allclose(np.abs(snapshot.matrix), 1.0)


def test_large_scale_scales_channel(cell_edge_user, rng):
    geometry = ArrayGeometry(m_per_port=4, n_ports=2)
    paths = _paths(rng)
    ls = LargeScale(path_loss_db=60.0)
    plain = raytrace_element_channel(geometry, cell_edge_user, paths)
    faded = raytrace_element_channel(geometry, cell_edge_user, paths, ls)
    np.testing.assert_allclose(faded.matrix, plain.matrix * 1e-3)


def test_static_user_channel_is_time_invariant(cell_edge_user, rng):
    geometry = ArrayGeometry(m_per_port=4, n_ports=2)
    paths = _paths(rng)
    a = raytrace_element_channel(geometry, cell_edge_user, paths, t=0.0)
    b = raytrace_element_channel(geometry, cell_edge_user, paths, t=0.5)
    np.testing.assert_allclose(a.matrix, b.matrix)


def test_moving_user_channel_evolves(rng):
    user = UserGeometry(los_azimuth_deg=0.0, los_elevation_deg=96.5, distance_m=250.0, speed_mps=30.0)
    geometry = ArrayGeometry(m_per_port=4, n_ports=2)
    paths = _paths(rng, user=user)
    a = raytrace_element_channel(geometry, user, paths, t=0.0)
    b = raytrace_element_channel(geometry, user, paths, t=0.01)
    assert not np.allclose(a.matrix, b.matrix)


def test_port_channel_is_element_channel_times_virtualization(cell_edge_user, rng):
    geometry = ArrayGeometry()
    vm = common_virtualization(geometry, weights_1d(8, 0.8, 100.0))
    paths = _paths(rng)
    element = raytrace_element_channel(geometry, cell_edge_user, paths)
    port = raytrace_port_channel_element_approach(geometry, vm, cell_edge_user, paths)
    assert port.shape == (1, 4)
    np.testing.assert_allclose(port.matrix, element.matrix @ vm.dense)


def test_port_channel_checks_virtualization_size(cell_edge_user, rng):
    vm = common_virtualization(ArrayGeometry(m_per_port=4), weights_1d(4, 0.8, 100.0))
    with pytest.raises(DimensionMismatchError):
        raytrace_port_channel_element_approach(ArrayGeometry(), vm, cell_edge_user, _paths(rng))


def test_dual_polarized_channels(rng):
    geometry = ArrayGeometry(m_per_port=4, n_ports=2, polarization=2, slant_deg=45.0)
    user = UserGeometry(los_azimuth_deg=0.0, los_elevation_deg=96.5, distance_m=250.0)
    paths = _paths(rng, polarization=2)
    assert raytrace_element_channel(geometry, user, paths).shape == (1, 16)
    itu = raytrace_port_channel_itu(ItuPortPatternParams(), 2, 96.5, user, paths, slant_deg=45.0)
    assert itu.shape == (1, 4)
    with pytest.raises(DimensionMismatchError):
        raytrace_element_channel(ArrayGeometry(), user, paths)


def test_element_and_itu_channels_share_slant_convention(rng):
    assert branch_slants(45.0, 2) == (45.0, -45.0)
    assert ArrayGeometry(polarization=2, slant_deg=45.0).slants_deg == branch_slants(45.0, 2)

    user = UserGeometry(los_azimuth_deg=0.0, los_elevation_deg=96.5, distance_m=250.0)
    paths = _paths(rng, polarization=2)
    # the second branch at beta must equal the first branch at beta - 90
    plus = raytrace_element_channel(ArrayGeometry(m_per_port=4, n_ports=2, polarization=2, slant_deg=45.0),
                                    user, paths)
    minus = raytrace_element_channel(ArrayGeometry(m_per_port=4, n_ports=2, polarization=2, slant_deg=-45.0),
                                     user, paths)
    np.testing.assert_allclose(plus.matrix[:, 8:], minus.matrix[:, :8])

    params = ItuPortPatternParams()
    plus = raytrace_port_channel_itu(params, 2, 96.5, user, paths, slant_deg=45.0)
    minus = raytrace_port_channel_itu(params, 2, 96.5, user, paths, slant_deg=-45.0)
    np.testing.assert_allclose(plus.matrix[:, 2:], minus.matrix[:, :2])


def test_itu_port_channel_shape_with_receive_array(rng):
    user = UserGeometry(los_azimuth_deg=10.0, los_elevation_deg=100.0, distance_m=100.0, rx_elements=2)
    snapshot = raytrace_port_channel_itu(ItuPortPatternParams(), 4, 100.0, user, _paths(rng))
    assert snapshot.shape == (2, 4)
    assert snapshot.approach == ChannelApproach.PORT_ITU


def test_correlated_rayleigh_matches_covariance(rng):
    r = random_psd(rng, 4)
    draws = np.stack([draw_rayleigh_correlated(r, None, rng) for _ in range(20_000)])
    empirical = draws.T @ draws.conj() / draws.shape[0]
    assert np.linalg.norm(empirical - r) / np.linalg.norm(r) < 0.05


def test_rayleigh_rejects_indefinite_matrix(rng):
    with pytest.raises(NotPsdError):
        draw_rayleigh_correlated(np.diag([1.0, -1.0]), None, rng)


def test_kronecker_shape_and_power(rng):
    r_bs = np.eye(4)
    r_ms = np.eye(2)
    draws = np.stack([draw_kronecker(r_ms, r_bs, LargeScale(shadow_fading_db=10.0), rng) for _ in range(5000)])
    assert draws.shape[1:] == (2, 4)
    assert np.mean(np.abs(draws) ** 2) == pytest.approx(0.1, rel=0.05)
