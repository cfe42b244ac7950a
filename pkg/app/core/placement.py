"""
User drops and multi-cell site layout
"""

import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from app.models.experiment import UserPlacement
from app.core.array import wrap_azimuth_deg
from app.core.channel import UserGeometry

logger = logging.getLogger(__name__)


def los_elevation_deg(distance_m: float, bs_height_m: float, ue_height_m: float) -> float:
    """Zenith angle of the LoS direction seen from the BS, 90 + atan(dh / d)"""
    return float(90.0 + np.degrees(np.arctan2(bs_height_m - ue_height_m, distance_m)))


def _user(placement: UserPlacement, azimuth_deg: float, distance_m: float) -> UserGeometry:
    elevation = placement.los_elevation_deg
    if elevation is None:
        elevation = los_elevation_deg(distance_m, placement.bs_height_m, placement.ue_height_m)
    return UserGeometry(
        los_azimuth_deg=float(azimuth_deg),
        los_elevation_deg=elevation,
        distance_m=float(distance_m),
        rx_elements=placement.rx_elements,
        rx_spacing=placement.rx_spacing,
        speed_mps=placement.speed_mps,
    )


def _draw_polar(placement: UserPlacement, rng: np.random.Generator, n: int):
    """Uniform over the annular sector: radius with density proportional to r"""
    r2 = rng.uniform(placement.min_distance_m ** 2, placement.cell_radius_m ** 2, size=n)
    azimuth = rng.uniform(-placement.sector_half_width_deg, placement.sector_half_width_deg, size=n)
    distance = np.sqrt(r2) if placement.distance_m is None else np.full(n, placement.distance_m)
    return azimuth, distance


def place_users(placement: UserPlacement, rng: np.random.Generator, n_users: Optional[int] = None) -> List[UserGeometry]:
    """
    Drop users uniformly in the cell sector between the minimum distance and
    the cell radius
    """
    n = placement.n_users if n_users is None else n_users
    azimuth, distance = _draw_polar(placement, rng, n)
    return [_user(placement, a, d) for a, d in zip(azimuth, distance)]


@dataclass(frozen=True)
class SiteLayout:
    """Base stations on a regular polygon around the origin, facing the centre"""
    positions: np.ndarray      # (cells, 2) in m
    boresights_deg: np.ndarray  # (cells,)

    @property
    def n_cells(self) -> int:
        return self.positions.shape[0]


def multicell_layout(n_cells: int, cell_radius_m: float) -> SiteLayout:
    """
    Three cells form an equilateral triangle with inter-site distance
    sqrt(3) R; each site's boresight points at the centroid
    """
    angles = np.radians(90.0 + 360.0 * np.arange(n_cells) / n_cells)
    positions = cell_radius_m * np.column_stack([np.cos(angles), np.sin(angles)])
    boresights = wrap_azimuth_deg(np.degrees(angles) + 180.0)
    return SiteLayout(positions, np.atleast_1d(boresights))


@dataclass(frozen=True)
class MulticellDrop:
    """
    links[i][j][k]: geometry of user k of cell j seen from the BS of cell i
    """
    layout: SiteLayout
    user_positions: np.ndarray  # (cells, users, 2)
    links: List[List[List[UserGeometry]]]

    def own(self, cell: int) -> List[UserGeometry]:
        return self.links[cell][cell]

    def cross(self, cell: int) -> List[UserGeometry]:
        """Out-of-cell users seen from this cell's BS, ordered by (cell, user)"""
        return [u for j, users in enumerate(self.links[cell]) if j != cell for u in users]


def _link(placement: UserPlacement, layout: SiteLayout, site: int, xy: np.ndarray) -> UserGeometry:
    delta = xy - layout.positions[site]
    distance = max(float(np.hypot(*delta)), placement.min_distance_m)
    azimuth = wrap_azimuth_deg(np.degrees(np.arctan2(delta[1], delta[0])) - layout.boresights_deg[site])
    link_placement = placement.model_copy(update={"los_elevation_deg": None})
    return _user(link_placement, float(azimuth), distance)


def place_users_multicell(
    placement: UserPlacement, layout: SiteLayout, rng: np.random.Generator
) -> MulticellDrop:
    """Drop users in every site's sector and compute all BS-user link geometries"""
    positions = np.empty((layout.n_cells, placement.n_users, 2))
    for cell in range(layout.n_cells):
        azimuth, distance = _draw_polar(placement, rng, placement.n_users)
        heading = np.radians(layout.boresights_deg[cell] + azimuth)
        positions[cell] = layout.positions[cell] + distance[:, None] * np.column_stack(
            [np.cos(heading), np.sin(heading)]
        )

    links = [
        [[_link(placement, layout, site, positions[cell, k]) for k in range(placement.n_users)]
         for cell in range(layout.n_cells)]
        for site in range(layout.n_cells)
    ]
    return MulticellDrop(layout, positions, links)
