"""BS/UE placement and per-antenna position and distance computations.

Coordinate convention: the coverage area is an L x L square in the x-z
(ground) plane centered at the origin; y is the height axis.  Each BS hosts a
uniform planar array standing in an x-y plane (columns along x, rows stacked
upward along y), so all antennas of one BS share the z coordinate of its
bottom-left corner.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ArrayGeometry",
    "Layout",
    "antenna_position",
    "antenna_positions",
    "place_scenario",
    "pair_distances",
]


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform planar array: n_x columns (x axis) by n_y rows (y axis)."""

    n_x: int
    n_y: int
    delta_x: float  # horizontal antenna spacing [m]
    delta_y: float  # vertical antenna spacing [m]
    origin: np.ndarray  # bottom-left antenna position [x, L_BS, z]

    def __post_init__(self):
        if self.n_x < 1 or self.n_y < 1:
            raise ValueError("ArrayGeometry: n_x and n_y must be >= 1")
        if self.delta_x <= 0 or self.delta_y <= 0:
            raise ValueError("ArrayGeometry: antenna spacings must be positive")
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=float))
        if self.origin.shape != (3,):
            raise ValueError("ArrayGeometry: origin must be a 3-vector")

    @property
    def n_antennas(self):
        return self.n_x * self.n_y

    @property
    def height(self):
        """BS height L_BS (y component of the bottom-left antenna)."""
        return float(self.origin[1])


@dataclass(frozen=True)
class Layout:
    """One drop of BS arrays and UE positions over the coverage square."""

    bs_geometries: tuple  # tuple of ArrayGeometry, length M
    ue_positions: np.ndarray  # (K, 3), y component = L_UE
    area_side: float  # L [m]

    def __post_init__(self):
        object.__setattr__(self, "ue_positions", np.asarray(self.ue_positions, dtype=float))
        object.__setattr__(self, "bs_geometries", tuple(self.bs_geometries))

    @property
    def n_bs(self):
        return len(self.bs_geometries)

    @property
    def n_ue(self):
        return self.ue_positions.shape[0]


def antenna_position(geom: ArrayGeometry, n: int) -> np.ndarray:
    """Position of antenna n (1-based, counted row-by-row from the bottom left).

    Returns [x + mod(n-1, n_x) * delta_x, L_BS + floor((n-1)/n_x) * delta_y, z].
    """
    if not 1 <= n <= geom.n_antennas:
        raise IndexError(f"antenna index {n} out of range 1..{geom.n_antennas}")
    col = (n - 1) % geom.n_x
    row = (n - 1) // geom.n_x
    return geom.origin + np.array([col * geom.delta_x, row * geom.delta_y, 0.0])


def antenna_positions(geom: ArrayGeometry) -> np.ndarray:
    """All N antenna positions as an (N, 3) array, row-by-row ordering."""
    idx = np.arange(geom.n_antennas)
    cols = idx % geom.n_x
    rows = idx // geom.n_x
    pos = np.tile(geom.origin, (geom.n_antennas, 1))
    pos[:, 0] += cols * geom.delta_x
    pos[:, 1] += rows * geom.delta_y
    return pos


def place_scenario(config, rng: np.random.Generator) -> Layout:
    """Draw BS origins and UE positions uniformly over the coverage square.

    `config` provides m_bs, k_ue, area_side_m, bs_height_m, ue_height_m and the
    array geometry fields; positions are deterministic given the rng state.
    """
    if config.m_bs < 1 or config.k_ue < 1:
        raise ValueError("place_scenario: need at least one BS and one UE")
    half = config.area_side_m / 2.0
    bs_xz = rng.uniform(-half, half, size=(config.m_bs, 2))
    ue_xz = rng.uniform(-half, half, size=(config.k_ue, 2))

    dx, dy = config.spacings_m()
    geoms = []
    for m in range(config.m_bs):
        origin = np.array([bs_xz[m, 0], config.bs_height_m, bs_xz[m, 1]])
        geoms.append(ArrayGeometry(config.n_x, config.n_y, dx, dy, origin))
    ue_pos = np.column_stack(
        [ue_xz[:, 0], np.full(config.k_ue, config.ue_height_m), ue_xz[:, 1]]
    )
    return Layout(tuple(geoms), ue_pos, config.area_side_m)


def pair_distances(geom: ArrayGeometry, ue_position) -> tuple[float, np.ndarray]:
    """Reference distance d_mk (from the bottom-left antenna) and all d_mnk.

    Raises on coincident points: zero distance makes the spherical-wave
    amplitudes singular.
    """
    ue = np.asarray(ue_position, dtype=float)
    diffs = antenna_positions(geom) - ue[None, :]
    d_all = np.linalg.norm(diffs, axis=1)
    if np.any(d_all == 0.0):
        raise ValueError("pair_distances: UE coincides with an antenna position")
    return float(d_all[0]), d_all
