"""Shared helpers: synthetic channel statistics and small real scenarios."""

import numpy as np

from cfxl.channel import large_scale_fading, pair_channel_stats, variance_profile, wavenumber_lattice
from cfxl.coupling import apply_coupling
from cfxl.geometry import pair_distances, place_scenario
from cfxl.harness import ScenarioConfig


def complex_normal(rng, size, scale=1.0):
    return scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / np.sqrt(2.0)


def make_synthetic_stats(rng, m_bs, k_ue, n, n_r=None, mean_scale=1.0, cov_scale=1.0):
    """Random LoS means and full-rank Hermitian PSD covariances per pair."""
    if n_r is None:
        n_r = n
    means = complex_normal(rng, (m_bs, k_ue, n), mean_scale)
    cov = np.empty((m_bs, k_ue, n, n), dtype=complex)
    factors = np.empty((m_bs, k_ue, n, n_r), dtype=complex)
    for m in range(m_bs):
        for k in range(k_ue):
            w = complex_normal(rng, (n, n_r), np.sqrt(cov_scale / n_r))
            factors[m, k] = w
            c = w @ w.conj().T
            cov[m, k] = 0.5 * (c + c.conj().T)
    return means, cov, factors


def synthetic_combining_instance(
    rng, m_bs, k_ue, n, sigma2=0.1, tau_p=1, kind="mmse", power=0.2, mean_scale=1.0
):
    """Random but internally consistent statistics + one estimated realization."""
    from cfxl.combining import q_blocks
    from cfxl.estimation import (
        assign_pilots,
        estimate_channels,
        estimation_statistics,
        estimator_matrices,
        psi_matrices,
    )

    means, cov, factors = make_synthetic_stats(rng, m_bs, k_ue, n, mean_scale=mean_scale)
    plan = assign_pilots(k_ue, tau_p)
    powers = np.full(k_ue, power)
    psi = psi_matrices(cov, plan, powers, sigma2)
    a = estimator_matrices(kind, cov, psi, powers, tau_p)
    est = estimation_statistics(a, cov, psi, means, powers, tau_p)
    z = complex_normal(rng, (m_bs, k_ue, factors.shape[-1]))
    g = means + np.einsum("mkij,mkj->mki", factors, z)
    ghat = estimate_channels(g, means, a, plan, powers, tau_p, sigma2, rng)
    return {
        "means": means,
        "cov": cov,
        "plan": plan,
        "powers": powers,
        "psi": psi,
        "a": a,
        "est": est,
        "q": q_blocks(est, powers, sigma2),
        "g": g,
        "ghat": ghat,
        "sigma2": sigma2,
        "tau_p": tau_p,
    }


def build_location_statistics(cfg: ScenarioConfig, location_index=0, z_bs=None):
    """Real per-pair effective statistics for one location drop of `cfg`."""
    lam = cfg.wavelength()
    rng = np.random.default_rng(np.random.SeedSequence(entropy=cfg.seed, spawn_key=(location_index, 0, 0)))
    layout = place_scenario(cfg, rng)
    dx, dy = cfg.spacings_m()
    lattice = wavenumber_lattice(cfg.n_x, cfg.n_y, dx, dy, lam)
    profile = variance_profile(lattice, cfg.n_x * dx, cfg.n_y * dy, lam)
    n = cfg.n_antennas()
    means = np.empty((cfg.m_bs, cfg.k_ue, n), dtype=complex)
    cov = np.empty((cfg.m_bs, cfg.k_ue, n, n), dtype=complex)
    factors = None
    for m in range(cfg.m_bs):
        geom = layout.bs_geometries[m]
        for k in range(cfg.k_ue):
            d_ref, _ = pair_distances(geom, layout.ue_positions[k])
            ls = large_scale_fading(d_ref)
            eff = apply_coupling(z_bs, pair_channel_stats(geom, layout.ue_positions[k], ls, lam, profile=profile))
            if factors is None:
                factors = np.empty((cfg.m_bs, cfg.k_ue) + eff.factor.shape, dtype=complex)
            means[m, k] = eff.mean
            cov[m, k] = eff.cov
            factors[m, k] = eff.factor
    return means, cov, factors
