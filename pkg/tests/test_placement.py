import numpy as np
import pytest

from app.models.experiment import UserPlacement
from app.core.placement import (
    los_elevation_deg,
    multicell_layout,
    place_users,
    place_users_multicell,
)
from app.core import rng as streams


def test_los_elevation_at_cell_edge_and_minimum_distance():
    assert los_elevation_deg(250.0, 30.0, 1.5) == pytest.approx(96.5, abs=0.05)
    assert los_elevation_deg(30.0, 30.0, 1.5) == pytest.approx(133.5, abs=0.05)


def test_users_stay_inside_the_sector(rng):
    placement = UserPlacement(n_users=500)
    users = place_users(placement, rng)
    distances = np.array([u.distance_m for u in users])
    azimuths = np.array([u.los_azimuth_deg for u in users])
    assert len(users) == 500
    assert np.all((distances >= 30.0) & (distances <= 250.0))
    assert np.all(np.abs(azimuths) <= 60.0)
    assert all(96.5 - 0.05 <= u.los_elevation_deg <= 133.5 + 0.05 for u in users)


def test_fixed_distance_and_elevation_override(rng):
    placement = UserPlacement(n_users=3, distance_m=250.0, los_elevation_deg=95.37)
    users = place_users(placement, rng)
    assert {u.distance_m for u in users} == {250.0}
    assert {u.los_elevation_deg for u in users} == {95.37}


def test_user_count_override(rng):
    assert len(place_users(UserPlacement(n_users=2), rng, n_users=7)) == 7


def test_invalid_annulus_rejected():
    with pytest.raises(ValueError):
        UserPlacement(cell_radius_m=20.0, min_distance_m=30.0)


def test_three_cell_layout_faces_centroid():
    layout = multicell_layout(3, 250.0)
    assert layout.n_cells == 3
    sides = [np.linalg.norm(layout.positions[i] - layout.positions[(i + 1) % 3]) for i in range(3)]
    np.testing.assert_allclose(sides, np.sqrt(3.0) * 250.0)
    for position, boresight in zip(layout.positions, layout.boresights_deg):
        heading = np.degrees(np.arctan2(-position[1], -position[0]))
        assert boresight == pytest.approx(heading, abs=1e-9)


def test_multicell_drop_links(rng):
    placement = UserPlacement(n_users=4)
    drop = place_users_multicell(placement, multicell_layout(3, 250.0), rng)
    assert drop.user_positions.shape == (3, 4, 2)
    assert len(drop.own(0)) == 4
    assert len(drop.cross(0)) == 8
    for k, user in enumerate(drop.own(1)):
        assert 30.0 <= user.distance_m <= 250.0 + 1e-9
        assert abs(user.los_azimuth_deg) <= 60.0 + 1e-9
    assert all(u.distance_m >= 30.0 for u in drop.cross(2))


def test_streams_are_reproducible_and_distinct():
    a = streams.stream(7, 3, "drop:CoM").standard_normal(4)
    b = streams.stream(7, 3, "drop:CoM").standard_normal(4)
    c = streams.stream(7, 4, "drop:CoM").standard_normal(4)
    d = streams.stream(7, 3, "channel:CoM").standard_normal(4)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)
    assert not np.allclose(a, d)
    assert streams.sub_seed(7, 3, "sdb:SDB") == streams.sub_seed(7, 3, "sdb:SDB")
    assert streams.purpose_key("drop") != streams.purpose_key("channel")
