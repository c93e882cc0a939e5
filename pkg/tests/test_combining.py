import numpy as np
import pytest
from conftest import complex_normal, make_synthetic_stats, synthetic_combining_instance
from scipy.linalg import cho_factor

import cfxl.combining as cb
from cfxl.estimation import EstimationStatistics, dense_block_diag, stack_pairs
from cfxl.oracle import direct_solve


def zero_bc_stats(m_bs, k_ue, n):
    """Estimation statistics with B = C = R_hat = 0 (perfect-CSI surrogate)."""
    zeros = np.zeros((m_bs, k_ue, n, n), dtype=complex)
    return EstimationStatistics(
        psi=zeros.copy(), a=zeros.copy(), rhat=zeros.copy(),
        rbar=zeros.copy(), b=zeros.copy(), c=zeros.copy(),
    )


# Q blocks and statistics systems -------------------------------------------

def test_q_blocks_zero_bc():
    est = zero_bc_stats(2, 3, 4)
    q = cb.q_blocks(est, np.full(3, 0.2), 0.5)
    np.testing.assert_array_equal(q, np.broadcast_to(0.5 * np.eye(4), (2, 4, 4)))


def test_sta_system_equals_mean_plus_cov():
    # A^Sta = sum_l p_l (gbar gbar^H + R_check) + sigma^2 I by the moment identity.
    rng = np.random.default_rng(0)
    inst = synthetic_combining_instance(rng, 2, 3, 4)
    sta = cb.sta_systems(inst["est"], inst["powers"], inst["sigma2"])
    for m in range(2):
        expected = inst["sigma2"] * np.eye(4, dtype=complex)
        for l in range(3):
            gbar = inst["means"][m, l]
            expected += inst["powers"][l] * (np.outer(gbar, gbar.conj()) + inst["cov"][m, l])
        assert np.max(np.abs(sta[m] - expected)) < 1e-10 * np.max(np.abs(expected))


# CMMSE ----------------------------------------------------------------------

def test_cmmse_rank_one_closed_form():
    rng = np.random.default_rng(1)
    m_bs, n = 2, 3
    ghat = complex_normal(rng, (m_bs, 1, n))
    est = zero_bc_stats(m_bs, 1, n)
    sigma2, p = 0.3, 0.7
    q = cb.q_blocks(est, [p], sigma2)
    v = cb.cmmse(ghat, q, [p])
    g_stack = stack_pairs(ghat)[:, 0]
    expected = p / (p * np.linalg.norm(g_stack) ** 2 + sigma2) * g_stack
    np.testing.assert_allclose(v[:, 0], expected, rtol=1e-12)


def test_cmmse_high_noise_is_mr_direction():
    rng = np.random.default_rng(2)
    inst = synthetic_combining_instance(rng, 2, 3, 4)
    q_noise = cb.q_blocks(inst["est"], inst["powers"], 1e9)
    v = cb.cmmse(inst["ghat"], q_noise, inst["powers"])
    g_stack = stack_pairs(inst["ghat"])
    for k in range(3):
        cos = abs(np.vdot(v[:, k], g_stack[:, k])) / (
            np.linalg.norm(v[:, k]) * np.linalg.norm(g_stack[:, k])
        )
        assert cos > 1.0 - 1e-9


def test_cmmse_factored_equivalence():
    for seed in range(5):
        rng = np.random.default_rng(100 + seed)
        m_bs, k_ue, n = rng.integers(1, 4), rng.integers(1, 5), rng.integers(2, 6)
        inst = synthetic_combining_instance(rng, int(m_bs), int(k_ue), int(n))
        v1 = cb.cmmse(inst["ghat"], inst["q"], inst["powers"])
        v2 = cb.cmmse_factored(inst["ghat"], inst["q"], inst["powers"])
        assert np.max(np.abs(v1 - v2)) <= 1e-10 * max(np.max(np.abs(v1)), 1e-30)


def test_cmmse_matches_dense_oracle():
    rng = np.random.default_rng(3)
    inst = synthetic_combining_instance(rng, 2, 2, 3)
    v = cb.cmmse(inst["ghat"], inst["q"], inst["powers"])
    g_stack = stack_pairs(inst["ghat"])
    system = (g_stack * inst["powers"]) @ g_stack.conj().T + dense_block_diag(inst["q"])
    for k in range(2):
        expected = inst["powers"][k] * direct_solve(system, g_stack[:, k])
        np.testing.assert_allclose(v[:, k], expected, rtol=1e-10)


def test_cmmse_factored_block_path_matches_dense_q():
    # The block-diagonal Q handling must agree with the same factored formula
    # evaluated against a dense materialization of Q.
    rng = np.random.default_rng(30)
    inst = synthetic_combining_instance(rng, 3, 4, 5)
    v_block = cb.cmmse_factored(inst["ghat"], inst["q"], inst["powers"])
    g_stack = stack_pairs(inst["ghat"])
    q_dense = dense_block_diag(inst["q"])
    t = np.linalg.solve(q_dense, g_stack)
    gram = g_stack.conj().T @ t
    v_dense = t @ np.linalg.solve(gram + np.diag(1.0 / inst["powers"]), np.eye(4, dtype=complex))
    assert np.max(np.abs(v_block - v_dense)) < 1e-12 * np.max(np.abs(v_dense))


def test_cmmse_singular_guard():
    ghat = np.zeros((1, 1, 2), dtype=complex)
    q = np.zeros((1, 2, 2), dtype=complex)
    with pytest.raises(np.linalg.LinAlgError):
        cb.cmmse(ghat, q, [0.2])


# LMMSE and local schemes ------------------------------------------------------

def test_lmmse_single_bs_equals_cmmse():
    rng = np.random.default_rng(4)
    inst = synthetic_combining_instance(rng, 1, 3, 4)
    v_c = cb.cmmse(inst["ghat"], inst["q"], inst["powers"])
    v_l = cb.lmmse(inst["ghat"][0].T, inst["q"][0], inst["powers"])
    np.testing.assert_allclose(v_c, v_l, rtol=1e-12)


def test_lmmse_rank_one_closed_form():
    rng = np.random.default_rng(5)
    ghat = complex_normal(rng, (3, 1))
    sigma2, p = 0.2, 0.5
    v = cb.lmmse(ghat, sigma2 * np.eye(3, dtype=complex), [p])
    expected = p / (p * np.linalg.norm(ghat[:, 0]) ** 2 + sigma2) * ghat[:, 0]
    np.testing.assert_allclose(v[:, 0], expected, rtol=1e-12)


def test_lmr_identity():
    rng = np.random.default_rng(6)
    ghat = complex_normal(rng, (4, 3))
    np.testing.assert_array_equal(cb.lmr(ghat), ghat)
    np.testing.assert_array_equal(cb.lmr(np.zeros_like(ghat)), np.zeros_like(ghat))
    np.testing.assert_array_equal(cb.lmr(2.5 * ghat), 2.5 * ghat)


def test_lrzf_equals_lmmse_without_bc_terms():
    rng = np.random.default_rng(7)
    ghat = complex_normal(rng, (6, 3))
    powers = np.array([0.1, 0.4, 0.25])  # unequal powers on purpose
    sigma2 = 0.15
    v_zf = cb.lrzf(ghat, powers, sigma2)
    v_mmse = cb.lmmse(ghat, sigma2 * np.eye(6, dtype=complex), powers)
    assert np.max(np.abs(v_zf - v_mmse)) < 1e-10 * np.max(np.abs(v_mmse))


def test_lrzf_single_ue_mr_direction():
    rng = np.random.default_rng(8)
    ghat = complex_normal(rng, (4, 1))
    v = cb.lrzf(ghat, [0.3], 0.2)
    cos = abs(np.vdot(v[:, 0], ghat[:, 0])) / (
        np.linalg.norm(v[:, 0]) * np.linalg.norm(ghat[:, 0])
    )
    assert cos > 1 - 1e-12


def test_lrzf_high_noise_mr_proportional():
    rng = np.random.default_rng(9)
    ghat = complex_normal(rng, (4, 2))
    v = cb.lrzf(ghat, [0.3, 0.3], 1e12)
    for k in range(2):
        ratio = v[:, k] / ghat[:, k]
        assert np.max(np.abs(ratio - ratio[0])) < 1e-9 * abs(ratio[0])


# GSLI-MMSE --------------------------------------------------------------------

def test_gsli_sigma_hermitian():
    rng = np.random.default_rng(10)
    inst = synthetic_combining_instance(rng, 2, 4, 4, tau_p=2)
    sig = cb.gsli_sigma_matrix(inst["means"], inst["est"], inst["q"], inst["plan"], inst["tau_p"])
    assert np.max(np.abs(sig - sig.conj().T)) < 1e-12 * max(np.max(np.abs(sig)), 1e-30)


def test_gsli_trivial_case_proportional_to_whitened_mr():
    # Zero LoS, orthogonal pilots, A = 0: Sigma = 0 and v_mk is parallel to
    # Q_m^{-1} ghat_mk.
    rng = np.random.default_rng(11)
    m_bs, k_ue, n = 2, 3, 4
    _, cov, factors = make_synthetic_stats(rng, m_bs, k_ue, n)
    means = np.zeros((m_bs, k_ue, n), dtype=complex)
    from cfxl.estimation import assign_pilots, estimation_statistics, psi_matrices

    plan = assign_pilots(k_ue, k_ue)
    powers = np.full(k_ue, 0.2)
    sigma2 = 0.3
    psi = psi_matrices(cov, plan, powers, sigma2)
    a = np.zeros_like(cov)
    est = estimation_statistics(a, cov, psi, means, powers, 1)
    q = cb.q_blocks(est, powers, sigma2)
    sig = cb.gsli_sigma_matrix(means, est, q, plan, 1)
    assert np.max(np.abs(sig)) == 0.0
    ghat = complex_normal(rng, (n, k_ue))
    v = cb.gsli_mmse(ghat, q[0], sig, powers, m_bs * n)
    t = np.linalg.solve(q[0], ghat)
    for k in range(k_ue):
        cos = abs(np.vdot(v[:, k], t[:, k])) / (np.linalg.norm(v[:, k]) * np.linalg.norm(t[:, k]))
        assert cos > 1 - 1e-12


def test_gsli_sigma_approximates_gram():
    # Sigma should track (1/MN) Ghat^H Q^{-1} Ghat on average (the asymptotic
    # approximation it replaces).
    rng = np.random.default_rng(12)
    inst = synthetic_combining_instance(rng, 2, 2, 24, mean_scale=0.5)
    sig = cb.gsli_sigma_matrix(inst["means"], inst["est"], inst["q"], inst["plan"], inst["tau_p"])
    mn = 2 * 24
    qd = dense_block_diag(inst["q"])
    n_draws = 400
    acc = np.zeros_like(sig)
    from cfxl.estimation import estimate_channels

    for _ in range(n_draws):
        z = complex_normal(rng, (2, 2, 24))
        g = inst["means"] + np.einsum("mkij,mkj->mki", np.linalg.cholesky(
            inst["cov"] + 1e-12 * np.eye(24)), z)
        ghat = estimate_channels(g, inst["means"], inst["a"], inst["plan"],
                                 inst["powers"], 1, inst["sigma2"], rng)
        gs = stack_pairs(ghat)
        acc += gs.conj().T @ np.linalg.solve(qd, gs) / mn
    emp = acc / n_draws
    assert np.max(np.abs(emp - sig)) < 0.15 * np.max(np.abs(sig))


# SI-LMMSE / SI-CMMSE -----------------------------------------------------------

def deterministic_instance(rng, m_bs, k_ue, n):
    """Zero NLoS: ghat = gbar deterministically, B = C = 0."""
    means = complex_normal(rng, (m_bs, k_ue, n))
    est = zero_bc_stats(m_bs, k_ue, n)
    rbar = np.einsum("mki,mkj->mkij", means, means.conj())
    est = EstimationStatistics(psi=est.psi, a=est.a, rhat=est.rhat, rbar=rbar, b=est.b, c=est.c)
    return means, est


def test_si_lmmse_deterministic_equals_lmmse():
    rng = np.random.default_rng(13)
    means, est = deterministic_instance(rng, 1, 3, 4)
    powers = np.full(3, 0.2)
    sigma2 = 0.4
    sta = cb.sta_systems(est, powers, sigma2)
    v_si = cb.si_lmmse(means[0].T, cho_factor(sta[0]), powers)
    q = cb.q_blocks(est, powers, sigma2)
    v_l = cb.lmmse(means[0].T, q[0], powers)
    np.testing.assert_allclose(v_si, v_l, rtol=1e-10)


def test_si_lmmse_linear_in_estimates():
    rng = np.random.default_rng(14)
    inst = synthetic_combining_instance(rng, 1, 3, 4)
    sta = cb.sta_systems(inst["est"], inst["powers"], inst["sigma2"])
    factor = cho_factor(sta[0])
    g1 = inst["ghat"][0].T
    g2 = 2.0 * g1
    v1 = cb.si_lmmse(g1, factor, inst["powers"])
    v2 = cb.si_lmmse(g2, factor, inst["powers"])
    np.testing.assert_allclose(v2, 2.0 * v1, rtol=1e-14)


def test_si_lmmse_differs_from_lmmse_on_random_instance():
    rng = np.random.default_rng(15)
    inst = synthetic_combining_instance(rng, 1, 3, 6)
    sta = cb.sta_systems(inst["est"], inst["powers"], inst["sigma2"])
    v_si = cb.si_lmmse(inst["ghat"][0].T, cho_factor(sta[0]), inst["powers"])
    v_l = cb.lmmse(inst["ghat"][0].T, inst["q"][0], inst["powers"])
    cos = abs(np.vdot(v_si[:, 0], v_l[:, 0])) / (
        np.linalg.norm(v_si[:, 0]) * np.linalg.norm(v_l[:, 0])
    )
    assert cos < 1.0 - 1e-9


def test_si_cmmse_single_bs_equals_si_lmmse():
    rng = np.random.default_rng(16)
    inst = synthetic_combining_instance(rng, 1, 3, 4)
    factor = cb.si_cmmse_factor(inst["means"], inst["est"], inst["q"],
                                inst["powers"], inst["sigma2"])
    v_c = cb.si_cmmse(inst["ghat"], factor, inst["powers"])
    sta = cb.sta_systems(inst["est"], inst["powers"], inst["sigma2"])
    v_l = cb.si_lmmse(inst["ghat"][0].T, cho_factor(sta[0]), inst["powers"])
    np.testing.assert_allclose(v_c, v_l, rtol=1e-9)


def test_si_cmmse_deterministic_equals_cmmse():
    rng = np.random.default_rng(17)
    means, est = deterministic_instance(rng, 2, 3, 4)
    powers = np.full(3, 0.2)
    sigma2 = 0.4
    q = cb.q_blocks(est, powers, sigma2)
    factor = cb.si_cmmse_factor(means, est, q, powers, sigma2)
    v_si = cb.si_cmmse(means, factor, powers)
    v_c = cb.cmmse(means, q, powers)
    np.testing.assert_allclose(v_si, v_c, rtol=1e-9)


# SSOR -----------------------------------------------------------------------

def test_ssor_relaxation_low_load_limit():
    assert abs(cb.ssor_relaxation(1, 10**9) - 2.0 / (1.0 + np.sqrt(2.0))) < 1e-4


def test_ssor_relaxation_reference_point():
    mu = (1 + np.sqrt(10 / 64)) ** 2 - 1
    expected = 2 / (1 + np.sqrt(2 * (1 - mu)))
    got = cb.ssor_relaxation(10, 64)
    assert got == pytest.approx(expected, abs=1e-15)
    assert got == pytest.approx(1.5081, abs=1e-3)


def test_ssor_relaxation_out_of_regime():
    with pytest.raises(ValueError):
        cb.ssor_relaxation(10, 36)
    assert cb.ssor_relaxation(10, 36, fallback=True) == 1.0


def test_ssor_one_sweep_identity_matrix():
    rng = np.random.default_rng(18)
    b = complex_normal(rng, 5)
    for omega in (0.5, 1.3):
        x = cb.ssor_solve(np.eye(5, dtype=complex), b, omega, 1)
        np.testing.assert_allclose(x, omega * (2 - omega) * b, rtol=1e-14)
    x = cb.ssor_solve(np.eye(5, dtype=complex), b, 1.0, 1)
    np.testing.assert_allclose(x, b, rtol=1e-15)


def test_ssor_converges_to_direct_solve():
    rng = np.random.default_rng(19)
    n = 16
    w = complex_normal(rng, (n, n))
    a = w @ w.conj().T + n * np.eye(n)  # diagonally dominated HPD
    b = complex_normal(rng, n)
    x = cb.ssor_solve(a, b, 1.2, 500)
    assert np.linalg.norm(a @ x - b) / np.linalg.norm(b) < 1e-8
    np.testing.assert_allclose(x, direct_solve(a, b), atol=1e-8 * np.linalg.norm(b))


def test_ssor_fixed_point():
    rng = np.random.default_rng(20)
    n = 8
    w = complex_normal(rng, (n, n))
    a = w @ w.conj().T + n * np.eye(n)
    x_star = complex_normal(rng, n)
    b = a @ x_star
    for omega in (0.6, 1.0, 1.7):
        x = cb.ssor_solve(a, b, omega, 1, x0=x_star)
        assert np.linalg.norm(x - x_star) < 1e-12 * np.linalg.norm(x_star)


def test_ssor_energy_norm_monotone():
    rng = np.random.default_rng(21)
    n = 12
    for _ in range(5):
        w = complex_normal(rng, (n, n))
        a = w @ w.conj().T + 2 * np.eye(n)
        x_star = complex_normal(rng, n)
        b = a @ x_star
        x = np.zeros(n, dtype=complex)
        prev = np.real(np.vdot(x - x_star, a @ (x - x_star)))
        for _ in range(30):
            x = cb.ssor_solve(a, b, 1.1, 1, x0=x)
            err = np.real(np.vdot(x - x_star, a @ (x - x_star)))
            assert err <= prev * (1 + 1e-12)
            prev = err
        assert prev < 1e-6 * np.real(np.vdot(x_star, a @ x_star))


def test_ssor_input_validation():
    a = np.eye(3, dtype=complex)
    b = np.ones(3, dtype=complex)
    with pytest.raises(ValueError):
        cb.ssor_solve(a, b, 2.5, 1)
    bad = a.copy()
    bad[1, 1] = 0.0
    with pytest.raises(ValueError):
        cb.ssor_solve(bad, b, 1.0, 1)
    np.testing.assert_array_equal(cb.ssor_solve(a, b, 1.0, 0), np.zeros(3))


def in_regime_instance(seed, m_bs=1, k_ue=4, n=32):
    rng = np.random.default_rng(seed)
    return synthetic_combining_instance(rng, m_bs, k_ue, n, sigma2=0.1, mean_scale=0.5)


def test_ins_ssor_converges_to_lmmse():
    inst = in_regime_instance(22)
    ssor = cb.SsorConfig(n_iter=500)
    v = cb.ins_ssor_lmmse(inst["ghat"][0].T, inst["q"][0], inst["powers"], ssor)
    v_ref = cb.lmmse(inst["ghat"][0].T, inst["q"][0], inst["powers"])
    assert np.max(np.abs(v - v_ref)) < 1e-6 * np.max(np.abs(v_ref))


def test_ins_ssor_zero_iterations():
    inst = in_regime_instance(23)
    v = cb.ins_ssor_lmmse(inst["ghat"][0].T, inst["q"][0], inst["powers"], cb.SsorConfig(n_iter=0))
    np.testing.assert_array_equal(v, np.zeros_like(v))


def test_sta_ssor_converges_to_si_lmmse():
    inst = in_regime_instance(24)
    sta = cb.sta_systems(inst["est"], inst["powers"], inst["sigma2"])
    ssor = cb.SsorConfig(n_iter=500)
    v = cb.sta_ssor_lmmse(inst["ghat"][0].T, sta[0], inst["powers"], ssor)
    v_ref = cb.si_lmmse(inst["ghat"][0].T, cho_factor(sta[0]), inst["powers"])
    assert np.max(np.abs(v - v_ref)) < 1e-6 * np.max(np.abs(v_ref))


def test_sta_equals_ins_for_deterministic_channels():
    rng = np.random.default_rng(25)
    means, est = deterministic_instance(rng, 1, 3, 24)
    powers = np.full(3, 0.2)
    sigma2 = 0.3
    q = cb.q_blocks(est, powers, sigma2)
    sta = cb.sta_systems(est, powers, sigma2)
    ssor = cb.SsorConfig(n_iter=7)
    v_ins = cb.ins_ssor_lmmse(means[0].T, q[0], powers, ssor)
    v_sta = cb.sta_ssor_lmmse(means[0].T, sta[0], powers, ssor)
    np.testing.assert_allclose(v_ins, v_sta, atol=1e-12 * np.max(np.abs(v_ins)))


def test_ins_si_ssor_zero_iterations_is_si_lmmse():
    inst = in_regime_instance(26)
    sta = cb.sta_systems(inst["est"], inst["powers"], inst["sigma2"])
    factor = cho_factor(sta[0])
    v0 = cb.ins_si_ssor_lmmse(inst["ghat"][0].T, inst["q"][0], factor,
                              inst["powers"], cb.SsorConfig(n_iter=0))
    v_si = cb.si_lmmse(inst["ghat"][0].T, factor, inst["powers"])
    np.testing.assert_array_equal(v0, v_si)


def test_ins_si_ssor_converges_to_lmmse():
    inst = in_regime_instance(27)
    sta = cb.sta_systems(inst["est"], inst["powers"], inst["sigma2"])
    v = cb.ins_si_ssor_lmmse(inst["ghat"][0].T, inst["q"][0], cho_factor(sta[0]),
                             inst["powers"], cb.SsorConfig(n_iter=500))
    v_ref = cb.lmmse(inst["ghat"][0].T, inst["q"][0], inst["powers"])
    assert np.max(np.abs(v - v_ref)) < 1e-6 * np.max(np.abs(v_ref))


def test_warm_start_beats_zero_start_residual():
    # Statistics-based warm start wins on typical (median-UE) residuals in the
    # LoS-dominant regime of the physical channel model; the full 100-instance
    # check lives in the acceptance suite.
    from conftest import build_location_statistics
    from cfxl.estimation import (
        assign_pilots,
        estimate_channels,
        estimation_statistics,
        estimator_matrices,
        psi_matrices,
    )
    from cfxl.harness import ScenarioConfig

    cfg = ScenarioConfig(
        m_bs=8, k_ue=10, n_x=8, n_y=8,
        delta_x_wavelengths=0.125, delta_y_wavelengths=0.125, seed=0,
    )
    powers = cfg.powers()
    sigma2 = cfg.sigma2_w()
    plan = assign_pilots(cfg.k_ue, cfg.tau_p)
    means, cov, factors = build_location_statistics(cfg, location_index=0)
    psi = psi_matrices(cov, plan, powers, sigma2)
    a = estimator_matrices("mmse", cov, psi, powers, cfg.tau_p)
    est = estimation_statistics(a, cov, psi, means, powers, cfg.tau_p)
    q = cb.q_blocks(est, powers, sigma2)
    sta = cb.sta_systems(est, powers, sigma2)
    rng = np.random.default_rng(100)
    z = complex_normal(rng, (cfg.m_bs, cfg.k_ue, factors.shape[-1]))
    g = means + np.einsum("mkij,mkj->mki", factors, z)
    ghat = estimate_channels(g, means, a, plan, powers, cfg.tau_p, sigma2, rng)

    wins = 0
    for m in range(cfg.m_bs):
        factor = cho_factor(sta[m])
        ghat_m = ghat[m].T
        a_ins = (ghat_m * powers) @ ghat_m.conj().T + q[m]
        b = ghat_m * powers
        ssor = cb.SsorConfig(n_iter=5)
        v_warm = cb.ins_si_ssor_lmmse(ghat_m, q[m], factor, powers, ssor)
        v_cold = cb.ins_ssor_lmmse(ghat_m, q[m], powers, ssor)
        med_warm = np.median(np.linalg.norm(a_ins @ v_warm - b, axis=0))
        med_cold = np.median(np.linalg.norm(a_ins @ v_cold - b, axis=0))
        if med_warm < med_cold:
            wins += 1
    assert wins >= 6  # of 8 per-BS instances
