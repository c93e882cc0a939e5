"""Pilot transmission and the generalized channel-estimator family.

The estimate of the effective channel is g_hat = g_bar + A (y^p - y_bar^p)
for an arbitrary statistics-based matrix A; the MMSE, element-wise MMSE and
GLS estimators are particular choices of A.  All second-order matrices used by
the combiners (R_hat, B, C, R_bar, Psi) are produced here, per pair and in
collective block form.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

__all__ = [
    "ESTIMATOR_KINDS",
    "PilotPlan",
    "EstimationStatistics",
    "assign_pilots",
    "psi_matrix",
    "psi_matrices",
    "estimator_matrix",
    "estimator_matrices",
    "estimation_statistics",
    "pilot_differences",
    "apply_estimator",
    "estimate_channels",
    "mmse_estimate_direct",
    "stack_pairs",
    "dense_block_diag",
]

ESTIMATOR_KINDS = ("mmse", "ew-mmse", "gls")


@dataclass(frozen=True)
class PilotPlan:
    """Pilot assignment: tau_p orthogonal pilots shared round-robin."""

    tau_p: int
    assignment: np.ndarray  # (K,) pilot index of each UE, 0-based
    copilot_sets: tuple  # per UE k, array of UEs sharing its pilot (incl. k)

    @property
    def n_ue(self):
        return self.assignment.shape[0]


@dataclass(frozen=True)
class EstimationStatistics:
    """Second-order estimation matrices for all pairs, shape (M, K, N, N).

    psi:  pilot-Gram matrices Psi_mk
    a:    estimator matrices A_mk
    rhat: estimate covariances tau_p A Psi A^H
    rbar: E{ghat ghat^H} = gbar gbar^H + rhat
    b:    estimate/error cross-correlations
    c:    error covariances
    """

    psi: np.ndarray
    a: np.ndarray
    rhat: np.ndarray
    rbar: np.ndarray
    b: np.ndarray
    c: np.ndarray


def assign_pilots(k_ue: int, tau_p: int) -> PilotPlan:
    """Round-robin assignment t_k = k mod tau_p."""
    if tau_p < 1:
        raise ValueError("assign_pilots: tau_p must be >= 1")
    assignment = np.arange(k_ue) % tau_p
    copilot = tuple(np.flatnonzero(assignment == assignment[k]) for k in range(k_ue))
    return PilotPlan(tau_p=tau_p, assignment=assignment, copilot_sets=copilot)


def psi_matrix(eff_cov_m: np.ndarray, plan: PilotPlan, k: int, powers, sigma2: float):
    """Psi_mk = sum_{l in P_k} p_l tau_p R_check_ml + sigma^2 I for one BS."""
    n = eff_cov_m.shape[-1]
    psi = sigma2 * np.eye(n, dtype=complex)
    for l in plan.copilot_sets[k]:
        psi = psi + powers[l] * plan.tau_p * eff_cov_m[l]
    return psi


def psi_matrices(eff_cov: np.ndarray, plan: PilotPlan, powers, sigma2: float) -> np.ndarray:
    """All Psi_mk, shape (M, K, N, N); computed once per (BS, pilot) and shared."""
    m_bs, k_ue, n, _ = eff_cov.shape
    psi = np.empty_like(eff_cov)
    for m in range(m_bs):
        per_pilot = {}
        for t in range(plan.tau_p):
            ues = np.flatnonzero(plan.assignment == t)
            if ues.size == 0:
                continue
            acc = sigma2 * np.eye(n, dtype=complex)
            for l in ues:
                acc = acc + powers[l] * plan.tau_p * eff_cov[m, l]
            per_pilot[t] = acc
        for k in range(k_ue):
            psi[m, k] = per_pilot[plan.assignment[k]]
    return psi


def estimator_matrix(kind: str, p_k: float, tau_p: int, cov_mk: np.ndarray, psi_mk: np.ndarray):
    """A_mk for one pair: MMSE, element-wise MMSE, or GLS."""
    n = cov_mk.shape[0]
    if kind == "mmse":
        # sqrt(p) R Psi^{-1}; both Hermitian, so solve against R and transpose.
        return np.sqrt(p_k) * np.linalg.solve(psi_mk, cov_mk).conj().T
    if kind == "ew-mmse":
        d = np.real(np.diagonal(cov_mk))
        g = np.real(np.diagonal(psi_mk))
        return np.diag(np.sqrt(p_k) * d / g).astype(complex)
    if kind == "gls":
        return (1.0 / (np.sqrt(p_k) * tau_p)) * np.eye(n, dtype=complex)
    raise ValueError(f"estimator_matrix: unknown kind {kind!r}")


def estimator_matrices(
    kind: str, eff_cov: np.ndarray, psi: np.ndarray, powers, tau_p: int
) -> np.ndarray:
    """A_mk for all pairs, shape (M, K, N, N)."""
    m_bs, k_ue = eff_cov.shape[:2]
    a = np.empty_like(eff_cov)
    for m in range(m_bs):
        for k in range(k_ue):
            a[m, k] = estimator_matrix(kind, powers[k], tau_p, eff_cov[m, k], psi[m, k])
    return a


def estimation_statistics(
    a: np.ndarray,
    eff_cov: np.ndarray,
    psi: np.ndarray,
    means: np.ndarray,
    powers,
    tau_p: int,
) -> EstimationStatistics:
    """R_hat, R_bar, B, C for all pairs from the estimator matrices.

    B is evaluated in the residual form tau_p A (sqrt(p) R - Psi A^H), which is
    algebraically identical to the defining difference but keeps the MMSE case
    at machine-precision zero.
    """
    m_bs, k_ue, n, _ = eff_cov.shape
    rhat = np.empty_like(eff_cov)
    rbar = np.empty_like(eff_cov)
    b = np.empty_like(eff_cov)
    c = np.empty_like(eff_cov)
    for m in range(m_bs):
        for k in range(k_ue):
            a_mk = a[m, k]
            cov = eff_cov[m, k]
            psi_ah = psi[m, k] @ a_mk.conj().T
            sp = np.sqrt(powers[k])
            rh = tau_p * (a_mk @ psi_ah)
            rh = 0.5 * (rh + rh.conj().T)
            cross = sp * tau_p * (a_mk @ cov)  # sqrt(p) tau A R
            cc = cov - cross.conj().T - cross + rh
            cc = 0.5 * (cc + cc.conj().T)
            rhat[m, k] = rh
            b[m, k] = tau_p * (a_mk @ (sp * cov - psi_ah))
            c[m, k] = cc
            gbar = means[m, k]
            rbar[m, k] = np.outer(gbar, gbar.conj()) + rh
    return EstimationStatistics(psi=psi, a=a, rhat=rhat, rbar=rbar, b=b, c=c)


def pilot_differences(
    g: np.ndarray,
    means: np.ndarray,
    plan: PilotPlan,
    powers,
    tau_p: int,
    sigma2: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Centered despread pilot signals y_mk^p - y_bar_mk^p per (BS, pilot).

    Returns (M, tau_p, N); the vector for pilot t collects
    sum_{l: t_l = t} sqrt(p_l) tau_p (g_ml - g_bar_ml) plus fresh noise with
    covariance tau_p sigma^2 I.  Draw order is fixed (m outer, t inner) so a
    given rng state always yields the same noise.
    """
    m_bs, k_ue, n = g.shape
    delta = np.zeros((m_bs, plan.tau_p, n), dtype=complex)
    for m in range(m_bs):
        for t in range(plan.tau_p):
            noise = np.sqrt(tau_p * sigma2 / 2.0) * (
                rng.standard_normal(n) + 1j * rng.standard_normal(n)
            )
            acc = noise
            for l in np.flatnonzero(plan.assignment == t):
                acc = acc + np.sqrt(powers[l]) * tau_p * (g[m, l] - means[m, l])
            delta[m, t] = acc
    return delta


def apply_estimator(
    a: np.ndarray, delta: np.ndarray, plan: PilotPlan, means: np.ndarray
) -> np.ndarray:
    """Generalized estimates g_hat_mk = g_bar_mk + A_mk delta_m,t_k, all pairs.

    `a` may be user-supplied; its shape must be (M, K, N, N).
    """
    n = means.shape[-1]
    if a.shape != means.shape[:2] + (n, n):
        raise ValueError(
            f"apply_estimator: estimator matrices have shape {a.shape}, "
            f"expected {means.shape[:2] + (n, n)}"
        )
    m_bs, k_ue = a.shape[:2]
    ghat = np.empty_like(means)
    for m in range(m_bs):
        for k in range(k_ue):
            ghat[m, k] = means[m, k] + a[m, k] @ delta[m, plan.assignment[k]]
    return ghat


def estimate_channels(
    g: np.ndarray,
    means: np.ndarray,
    a: np.ndarray,
    plan: PilotPlan,
    powers,
    tau_p: int,
    sigma2: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Draw pilot noise and estimate all pair channels for one coherence block."""
    delta = pilot_differences(g, means, plan, powers, tau_p, sigma2, rng)
    return apply_estimator(a, delta, plan, means)


def mmse_estimate_direct(
    delta: np.ndarray,
    means: np.ndarray,
    eff_cov: np.ndarray,
    psi: np.ndarray,
    plan: PilotPlan,
    powers,
) -> np.ndarray:
    """MMSE estimates computed straight from the closed form.

    g_hat = g_bar + sqrt(p_k) R_check Psi^{-1} delta via a linear solve, an
    independent route from the generalized-estimator path used in production.
    """
    m_bs, k_ue = eff_cov.shape[:2]
    ghat = np.empty_like(means)
    for m in range(m_bs):
        for k in range(k_ue):
            x = np.linalg.solve(psi[m, k], delta[m, plan.assignment[k]])
            ghat[m, k] = means[m, k] + np.sqrt(powers[k]) * (eff_cov[m, k] @ x)
    return ghat


def stack_pairs(per_pair: np.ndarray) -> np.ndarray:
    """Stack (M, K, N) per-pair vectors into collective (M*N, K) columns."""
    m_bs, k_ue, n = per_pair.shape
    return per_pair.transpose(0, 2, 1).reshape(m_bs * n, k_ue)


def dense_block_diag(blocks: np.ndarray) -> np.ndarray:
    """Materialize (M, N, N) blocks as a dense block-diagonal (MN, MN) matrix.

    Intended for oracle tests; production paths operate block-wise.
    """
    return scipy.linalg.block_diag(*blocks)
