"""Near-field channel statistics: NUSW LoS vectors, Fourier plane-wave NLoS
factors, large-scale fading, and channel sampling.

The NLoS component is represented by the finite plane-wave expansion
h_check = U Sigma^{1/2} z over the receiver wavenumber-lattice ellipse, giving
the low-rank spatial correlation R = U Sigma U^H with tr(R)/N equal to the
NLoS large-scale gain.
"""

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .geometry import ArrayGeometry, antenna_positions, pair_distances

__all__ = [
    "LargeScale",
    "NlosFactor",
    "PairChannelStats",
    "EffectiveChannelStats",
    "large_scale_fading",
    "los_channel",
    "wavenumber_lattice",
    "variance_profile",
    "nlos_statistics",
    "pair_channel_stats",
    "sample_pair_channel",
    "sample_effective_channel",
    "dump_nlos_factor",
]

# COST 231 Walfish-Ikegami LoS street-canyon law at f_c = 3 GHz, collapsed to
# beta_dB = const + slope * log10(d [m]).  Overridable through the config.
PATHLOSS_CONST_DB = float(-(42.6 - 26.0 * 3.0 + 20.0 * np.log10(3000.0)))
PATHLOSS_SLOPE_DB = -26.0
DISTANCE_FLOOR_M = 1.0


@dataclass(frozen=True)
class LargeScale:
    """Large-scale gain beta split into LoS/NLoS parts by the Rician factor."""

    beta: float
    kappa: float
    beta_los: float
    beta_nlos: float


@dataclass(frozen=True)
class NlosFactor:
    """Low-rank NLoS correlation factor R = U diag(sigma) U^H.

    lattice: (n_r, 2) integer wavenumber indices (l_x, l_y), row-major order
    u: (N, n_r) unit-norm response columns
    sigma: (n_r,) diagonal entries N * beta_nlos * sigma_bar^2
    r: (N, N) Hermitian PSD correlation matrix
    """

    lattice: np.ndarray
    u: np.ndarray
    sigma: np.ndarray
    r: np.ndarray

    @property
    def n_r(self):
        return self.lattice.shape[0]


@dataclass(frozen=True)
class PairChannelStats:
    """Raw (uncoupled) channel statistics for one BS-UE pair."""

    los: np.ndarray  # (N,) LoS mean vector
    nlos: NlosFactor
    large_scale: LargeScale


@dataclass(frozen=True)
class EffectiveChannelStats:
    """Statistics of the effective channel g = Z_BS h.

    mean: (N,) LoS mean Z_BS h_bar
    factor: (N, n_r) sampling factor W = Z_BS U Sigma^{1/2}, so g = mean + W z
    cov: (N, N) effective NLoS correlation R_check = W W^H
    """

    mean: np.ndarray
    factor: np.ndarray
    cov: np.ndarray
    large_scale: LargeScale


def large_scale_fading(
    d_mk: float,
    pathloss_const_db: float = PATHLOSS_CONST_DB,
    pathloss_slope_db: float = PATHLOSS_SLOPE_DB,
    distance_floor_m: float = DISTANCE_FLOOR_M,
) -> LargeScale:
    """Pathloss and Rician split for one pair at 3D distance d_mk [m].

    kappa = 10^(1.3 - 0.003 d); beta in dB is const + slope * log10(d) with d
    floored at `distance_floor_m` to avoid the pathloss singularity.
    """
    kappa = 10.0 ** (1.3 - 0.003 * d_mk)
    d_pl = max(d_mk, distance_floor_m)
    beta = 10.0 ** ((pathloss_const_db + pathloss_slope_db * np.log10(d_pl)) / 10.0)
    beta_los = kappa / (kappa + 1.0) * beta
    return LargeScale(beta=beta, kappa=kappa, beta_los=beta_los, beta_nlos=beta - beta_los)


def los_channel(
    geom: ArrayGeometry, ue_position, large_scale: LargeScale, wavelength: float
) -> np.ndarray:
    """Non-uniform spherical-wave LoS vector.

    Entry n: sqrt(beta_los) * (d_mk / d_mnk) * exp(-j 2pi/lambda (d_mnk - d_mk)).
    The first entry is real positive since antenna 1 sits at the reference point.
    """
    if wavelength <= 0:
        raise ValueError("los_channel: wavelength must be positive")
    d_ref, d_all = pair_distances(geom, ue_position)
    amp = np.sqrt(large_scale.beta_los) * d_ref / d_all
    phase = -2.0 * np.pi / wavelength * (d_all - d_ref)
    return amp * np.exp(1j * phase)


def wavenumber_lattice(
    n_x: int, n_y: int, delta_x: float, delta_y: float, wavelength: float
) -> np.ndarray:
    """Integer pairs (l_x, l_y) inside the receiver lattice ellipse.

    (l_x lambda / L_rx)^2 + (l_y lambda / L_ry)^2 <= 1 with L_rx = n_x delta_x,
    L_ry = n_y delta_y.  Row-major ordering: sorted by l_y, then l_x.
    """
    if delta_x <= 0 or delta_y <= 0:
        raise ValueError("wavenumber_lattice: spacings must be positive")
    l_rx = n_x * delta_x
    l_ry = n_y * delta_y
    bx = int(np.floor(l_rx / wavelength))
    by = int(np.floor(l_ry / wavelength))
    points = []
    for ly in range(-by, by + 1):
        for lx in range(-bx, bx + 1):
            if (lx * wavelength / l_rx) ** 2 + (ly * wavelength / l_ry) ** 2 <= 1.0:
                points.append((lx, ly))
    return np.asarray(points, dtype=int).reshape(-1, 2)


def variance_profile(
    lattice: np.ndarray,
    l_rx: float,
    l_ry: float,
    wavelength: float,
    nodes_per_axis: int = 24,
) -> np.ndarray:
    """Normalized per-lattice-point variances for isotropic scattering.

    The unnormalized weight of cell (l_x, l_y) is the integral of the isotropic
    spectral density (kappa^2 - k_x^2 - k_y^2)^(-1/2) over the wavenumber cell
    [2 pi l_x / L_rx +- pi / L_rx] x [2 pi l_y / L_ry +- pi / L_ry] clipped to
    the propagating disk, evaluated by tensor Gauss-Legendre quadrature.
    """
    if lattice.shape[0] == 0:
        raise ValueError("variance_profile: empty lattice")
    kappa = 2.0 * np.pi / wavelength
    nodes, gl_weights = leggauss(nodes_per_axis)

    weights = np.zeros(lattice.shape[0])
    for i, (lx, ly) in enumerate(lattice):
        cx = 2.0 * np.pi * lx / l_rx
        cy = 2.0 * np.pi * ly / l_ry
        hx = np.pi / l_rx
        hy = np.pi / l_ry
        kx = cx + hx * nodes
        ky = cy + hy * nodes
        kx2, ky2 = np.meshgrid(kx**2, ky**2, indexing="ij")
        rad2 = kappa**2 - kx2 - ky2
        # Mask the evanescent region plus a thin ring at the disk edge; the
        # integrand has an integrable singularity there and a node landing on
        # it would otherwise dominate the cell weight.
        mask = rad2 > 1e-9 * kappa**2
        vals = np.where(mask, 1.0 / np.sqrt(np.where(mask, rad2, 1.0)), 0.0)
        w2d = np.outer(gl_weights, gl_weights)
        weights[i] = hx * hy * np.sum(w2d * vals)
    total = weights.sum()
    if total <= 0:
        raise ValueError("variance_profile: all cells have zero weight")
    return weights / total


def nlos_statistics(
    geom: ArrayGeometry,
    ue_position,
    large_scale: LargeScale,
    wavelength: float,
    profile: np.ndarray | None = None,
) -> NlosFactor:
    """Plane-wave expansion factor (U, Sigma, R) for one BS-UE pair.

    Column for (l_x, l_y): entry n = (1/sqrt(N)) exp(j [k_x r_x + k_y r_y +
    gamma(k_x,k_y) r_z]) exp(-j kappa s_z) with k_x = 2 pi l_x / L_rx,
    gamma = sqrt(kappa^2 - k_x^2 - k_y^2).  The variance profile depends only
    on the array geometry; pass a precomputed one to skip the quadrature.
    """
    lattice = wavenumber_lattice(geom.n_x, geom.n_y, geom.delta_x, geom.delta_y, wavelength)
    l_rx = geom.n_x * geom.delta_x
    l_ry = geom.n_y * geom.delta_y
    kappa = 2.0 * np.pi / wavelength
    n_ant = geom.n_antennas

    pos = antenna_positions(geom)
    kx = 2.0 * np.pi * lattice[:, 0] / l_rx
    ky = 2.0 * np.pi * lattice[:, 1] / l_ry
    gamma = np.sqrt(np.maximum(kappa**2 - kx**2 - ky**2, 0.0))
    # (N, n_r) phases; the UE enters through a common transmit-side phase.
    phases = pos[:, 0:1] * kx[None, :] + pos[:, 1:2] * ky[None, :] + pos[:, 2:3] * gamma[None, :]
    s_z = float(np.asarray(ue_position, dtype=float)[2])
    u = np.exp(1j * phases) * np.exp(-1j * kappa * s_z) / np.sqrt(n_ant)

    if profile is None:
        profile = variance_profile(lattice, l_rx, l_ry, wavelength)
    elif profile.shape[0] != lattice.shape[0]:
        raise ValueError("nlos_statistics: profile length does not match the lattice")
    sigma = n_ant * large_scale.beta_nlos * profile
    r = (u * sigma[None, :]) @ u.conj().T
    r = 0.5 * (r + r.conj().T)
    return NlosFactor(lattice=lattice, u=u, sigma=sigma, r=r)


def pair_channel_stats(
    geom: ArrayGeometry,
    ue_position,
    large_scale: LargeScale,
    wavelength: float,
    profile: np.ndarray | None = None,
) -> PairChannelStats:
    """LoS vector plus NLoS factor for one BS-UE pair."""
    return PairChannelStats(
        los=los_channel(geom, ue_position, large_scale, wavelength),
        nlos=nlos_statistics(geom, ue_position, large_scale, wavelength, profile=profile),
        large_scale=large_scale,
    )


def _complex_normal(rng: np.random.Generator, size) -> np.ndarray:
    """Standard circularly-symmetric complex normal draws."""
    return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / np.sqrt(2.0)


def sample_pair_channel(stats: PairChannelStats, rng: np.random.Generator) -> np.ndarray:
    """One raw channel draw h = h_bar + U Sigma^{1/2} z."""
    z = _complex_normal(rng, stats.nlos.n_r)
    return stats.los + stats.nlos.u @ (np.sqrt(stats.nlos.sigma) * z)


def sample_effective_channel(
    eff: EffectiveChannelStats, rng: np.random.Generator
) -> np.ndarray:
    """One effective (coupled) channel draw g = g_bar + W z."""
    z = _complex_normal(rng, eff.factor.shape[1])
    return eff.mean + eff.factor @ z


def dump_nlos_factor(factor: NlosFactor, stem: str, fmt: str = "bin") -> list[str]:
    """Dump R and U for inspection, row-major with interleaved real/imag f64.

    Writes <stem>_R.<ext> and <stem>_U.<ext>; returns the written paths.
    """
    if fmt not in ("bin", "csv"):
        raise ValueError(f"dump_nlos_factor: unknown format {fmt!r}")
    paths = []
    for name, arr in (("R", factor.r), ("U", factor.u)):
        interleaved = np.empty(arr.shape + (2,), dtype=np.float64)
        interleaved[..., 0] = arr.real
        interleaved[..., 1] = arr.imag
        flat = interleaved.reshape(arr.shape[0], -1)
        path = f"{stem}_{name}.{fmt}"
        if fmt == "bin":
            flat.tofile(path)
        else:
            np.savetxt(path, flat, delimiter=",")
        paths.append(path)
    return paths
