import numpy as np
import pytest

from app.models.antenna import ArrayGeometry
from app.models.optimization import SdbOptions
from app.models.propagation import Laplacian, VonMises
from app.core.correlation import element_covariance, port_covariance
from app.core.errors import (
    ConvergenceError,
    DimensionMismatchError,
    EmptyInputError,
    InvalidParameterError,
    NotPsdError,
)
from app.core.sdb import surrogate_min_sir, weights_sdb, weights_sdb_multicell
from app.core.txru import common_virtualization, weights_1d

from tests.conftest import random_psd

pytestmark = pytest.mark.slow

GEOMETRY = ArrayGeometry(m_per_port=4, n_ports=2)


def _covariances(*elevations):
    return [element_covariance(GEOMETRY, VonMises(mu_deg=az), Laplacian(theta0_deg=el))
            for az, el in elevations]


@pytest.fixture(scope="module")
def two_users():
    return _covariances((0.0, 96.5), (20.0, 120.0))


def test_single_user_matches_principal_eigenvector():
    (r,) = _covariances((0.0, 100.0))
    matrix = r.matrix
    summed = matrix[:4, :4] + matrix[4:, 4:]
    principal = np.linalg.eigh(summed)[1][:, -1]

    result = weights_sdb([r], GEOMETRY)
    assert result.converged
    assert result.iterations == 1
    assert abs(np.vdot(principal, result.weights.weights)) >= 0.99


def test_two_users_beat_fixed_tilts(two_users):
    result = weights_sdb(two_users, GEOMETRY)
    assert result.converged
    assert np.linalg.norm(result.weights.weights) == pytest.approx(1.0)

    for theta in (90.0, 100.0, 108.25):
        fixed = surrogate_min_sir(weights_1d(4, 0.8, theta).weights, two_users, GEOMETRY)
        assert result.relaxed_objective >= fixed * (1.0 - 1e-3)
    assert result.objective <= result.relaxed_objective * (1.0 + 1e-3)


def test_dinkelbach_levels_increase(two_users):
    result = weights_sdb(two_users, GEOMETRY)
    levels = [step.level for step in result.trace]
    assert all(b >= a - 1e-9 for a, b in zip(levels, levels[1:]))


def test_surrogate_matches_port_covariance_form(two_users):
    w = weights_1d(4, 0.8, 105.0)
    vm = common_virtualization(GEOMETRY, w)
    r1, r2 = (port_covariance(r, vm).matrix for r in two_users)
    expected = min(
        np.real(np.trace(r1)) ** 2 / np.real(np.trace(r1 @ r2)),
        np.real(np.trace(r2)) ** 2 / np.real(np.trace(r2 @ r1)),
    )
    assert surrogate_min_sir(w.weights, two_users, GEOMETRY) == pytest.approx(expected, rel=1e-9)


def test_iteration_cap_carries_incumbent(two_users):
    with pytest.raises(ConvergenceError) as info:
        weights_sdb(two_users, GEOMETRY, SdbOptions(max_iterations=1))
    assert info.value.best_weights is not None
    assert np.linalg.norm(info.value.best_weights) == pytest.approx(1.0)


def test_same_seed_same_weights(two_users):
    opts = SdbOptions(seed=11)
    a = weights_sdb(two_users, GEOMETRY, opts)
    b = weights_sdb(two_users, GEOMETRY, opts)
    np.testing.assert_allclose(a.weights.weights, b.weights.weights, atol=1e-6)


def test_input_checks(two_users):
    with pytest.raises(EmptyInputError):
        weights_sdb([], GEOMETRY)
    with pytest.raises(DimensionMismatchError):
        weights_sdb(two_users, ArrayGeometry())
    with pytest.raises(InvalidParameterError):
        weights_sdb(two_users, GEOMETRY, gains=[1.0, 0.0])


def test_multicell_with_loose_caps(two_users):
    other = _covariances((-30.0, 110.0), (40.0, 100.0))
    cross_a = _covariances((60.0, 95.0), (70.0, 97.0))
    cross_b = _covariances((-60.0, 95.0), (-70.0, 97.0))
    caps = [[10.0 * r.trace for r in cross_a], [10.0 * r.trace for r in cross_b]]

    results = weights_sdb_multicell([two_users, other], [cross_a, cross_b], GEOMETRY, caps)
    assert len(results) == 2
    for result, cross, cell_caps in zip(results, [cross_a, cross_b], caps):
        assert result.converged
        w = result.weights.weights
        vm = common_virtualization(GEOMETRY, result.weights)
        leakage = [port_covariance(r, vm).trace for r in cross]
        assert all(value <= cap * (1.0 + 1e-6) for value, cap in zip(leakage, cell_caps))
        assert np.linalg.norm(w) == pytest.approx(1.0)


def test_multicell_needs_two_cells(two_users):
    with pytest.raises(EmptyInputError):
        weights_sdb_multicell([two_users], [[]], GEOMETRY)
    with pytest.raises(DimensionMismatchError):
        weights_sdb_multicell([two_users, two_users], [[]], GEOMETRY)


SMALL = ArrayGeometry(m_per_port=3, n_ports=2)


def _random_instance(seed, users=3):
    rng = np.random.default_rng(seed)
    return [random_psd(rng, SMALL.n_elements, rank=2) for _ in range(users)]


def _phase_grid_best(covariances, steps=180):
    """Exhaustive search over unit-modulus weights (1, e^{ja}, e^{jb}) / sqrt(3)"""
    phases = np.linspace(0.0, 2.0 * np.pi, steps, endpoint=False)
    a, b = np.meshgrid(phases, phases, indexing="ij")
    grid = np.stack([np.ones(a.size), np.exp(1j * a.ravel()), np.exp(1j * b.ravel())], axis=1) / np.sqrt(3.0)
    return float(surrogate_min_sir(grid, covariances, SMALL).max())


@pytest.mark.parametrize("seed", range(10))
def test_three_element_result_near_phase_grid_optimum(seed):
    covariances = _random_instance(seed)
    result = weights_sdb(covariances, SMALL)
    assert result.objective >= 0.95 * _phase_grid_best(covariances)


def test_local_refinement_never_loses():
    covariances = _random_instance(7)
    plain = weights_sdb(covariances, SMALL, SdbOptions(refine_starts=0))
    refined = weights_sdb(covariances, SMALL)
    assert refined.objective >= plain.objective * (1.0 - 1e-9)
    assert refined.objective == pytest.approx(surrogate_min_sir(refined.weights.weights, covariances, SMALL))


def test_dinkelbach_converges_on_random_instances():
    opts = SdbOptions(randomizations=20, refine_starts=1)
    for seed in range(100):
        result = weights_sdb(_random_instance(1000 + seed), SMALL, opts)
        assert result.converged, seed
        assert result.iterations <= 50
        assert abs(result.trace[-1].value) < 1e-6, seed


def test_indefinite_interference_gram_is_rejected():
    size = GEOMETRY.n_elements
    with pytest.raises(NotPsdError):
        weights_sdb([np.eye(size), -np.eye(size)], GEOMETRY)
