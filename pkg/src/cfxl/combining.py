"""Receive combining schemes, closed-form and SSOR-iterative.

Centralized schemes return collective (MN, K) matrices with one column per
UE; distributed schemes operate on one BS at a time and return (N, K).  All
system matrices are UE-independent, so each scheme factors once per channel
realization (or once per location draw for the statistics-based variants) and
back-solves K right-hand sides.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular

from .estimation import EstimationStatistics, dense_block_diag, stack_pairs

__all__ = [
    "CENTRALIZED_SCHEMES",
    "DISTRIBUTED_SCHEMES",
    "ALL_SCHEMES",
    "SsorConfig",
    "q_blocks",
    "sta_systems",
    "cmmse",
    "cmmse_factored",
    "si_cmmse_factor",
    "si_cmmse",
    "lmmse",
    "gsli_sigma_matrix",
    "gsli_mmse",
    "si_lmmse",
    "lmr",
    "lrzf",
    "ssor_relaxation",
    "ssor_solve",
    "ins_ssor_lmmse",
    "sta_ssor_lmmse",
    "ins_si_ssor_lmmse",
]

logger = logging.getLogger(__name__)

CENTRALIZED_SCHEMES = ("cmmse", "si-cmmse")
DISTRIBUTED_SCHEMES = (
    "lmmse",
    "gsli-mmse",
    "si-lmmse",
    "lmr",
    "lrzf",
    "ins-ssor",
    "sta-ssor",
    "ins-si-ssor",
)
ALL_SCHEMES = CENTRALIZED_SCHEMES + DISTRIBUTED_SCHEMES

# SSOR relaxation is derived for load ratios K/N below (sqrt(2)-1)^2.
SSOR_LOAD_LIMIT = (np.sqrt(2.0) - 1.0) ** 2


@dataclass(frozen=True)
class SsorConfig:
    """SSOR iteration controls; omega=None computes the relaxation parameter."""

    n_iter: int = 5
    omega: float | None = None
    omega_fallback: bool = False  # fall back to omega=1 outside the K/N regime

    def __post_init__(self):
        if self.n_iter < 0:
            raise ValueError("SsorConfig: n_iter must be nonnegative")
        if self.omega is not None and not 0.0 < self.omega < 2.0:
            raise ValueError("SsorConfig: omega must lie in (0, 2)")

    def resolve_omega(self, k_ue: int, n: int) -> float:
        if self.omega is not None:
            return self.omega
        return ssor_relaxation(k_ue, n, fallback=self.omega_fallback)


def _solve_guarded(a: np.ndarray, b: np.ndarray, context: str) -> np.ndarray:
    try:
        return np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            f"{context}: singular system matrix (cond={np.linalg.cond(a):.3e})"
        ) from exc


def q_blocks(est: EstimationStatistics, powers, sigma2: float) -> np.ndarray:
    """Q_m = sum_l p_l (B_ml + B_ml^H + C_ml) + sigma^2 I, shape (M, N, N)."""
    m_bs, k_ue, n, _ = est.b.shape
    p = np.asarray(powers, dtype=float)
    acc = np.einsum("l,mlij->mij", p, est.b + np.conj(np.transpose(est.b, (0, 1, 3, 2))) + est.c)
    return acc + sigma2 * np.eye(n)[None, :, :]


def sta_systems(est: EstimationStatistics, powers, sigma2: float) -> np.ndarray:
    """Statistics-only system matrices A_m^Sta, shape (M, N, N).

    A^Sta = sum_l p_l (R_bar + B + B^H + C) + sigma^2 I; by the moment identity
    R_bar + B + B^H + C = g_bar g_bar^H + R_check this is Hermitian PD for any
    estimator.
    """
    m_bs, k_ue, n, _ = est.b.shape
    p = np.asarray(powers, dtype=float)
    bh = np.conj(np.transpose(est.b, (0, 1, 3, 2)))
    acc = np.einsum("l,mlij->mij", p, est.rbar + est.b + bh + est.c)
    acc = acc + sigma2 * np.eye(n)[None, :, :]
    return 0.5 * (acc + np.conj(np.transpose(acc, (0, 2, 1))))


def cmmse(ghat: np.ndarray, q: np.ndarray, powers) -> np.ndarray:
    """Centralized MMSE combining, Hermitian system over the collective channel.

    v_k = p_k [sum_l p_l (ghat_l ghat_l^H + B_l + B_l^H + C_l) + sigma^2 I]^{-1}
    ghat_k with the B/C/noise part supplied as the Q blocks.  ghat: (M, K, N).
    """
    p = np.asarray(powers, dtype=float)
    g_stack = stack_pairs(ghat)  # (MN, K)
    system = (g_stack * p[None, :]) @ g_stack.conj().T + dense_block_diag(q)
    return _solve_guarded(system, g_stack, "cmmse") * p[None, :]


def cmmse_factored(ghat: np.ndarray, q: np.ndarray, powers) -> np.ndarray:
    """CMMSE via the matrix-inversion-lemma factorization.

    v_k = p_k Q^{-1} Ghat (Ghat^H Q^{-1} Ghat + P^{-1})^{-1} P^{-1} e_k, with Q
    handled block-by-block and only a K x K inner inversion.
    """
    m_bs, k_ue, n = ghat.shape
    p = np.asarray(powers, dtype=float)
    t_blocks = np.empty((m_bs, n, k_ue), dtype=complex)
    gram = np.zeros((k_ue, k_ue), dtype=complex)
    for m in range(m_bs):
        g_m = ghat[m].T  # (N, K)
        t_blocks[m] = _solve_guarded(q[m], g_m, "cmmse_factored")
        gram += g_m.conj().T @ t_blocks[m]
    inner = gram + np.diag(1.0 / p)
    w = _solve_guarded(inner, np.eye(k_ue, dtype=complex), "cmmse_factored inner")
    return t_blocks.reshape(m_bs * n, k_ue) @ w


def si_cmmse_factor(
    means: np.ndarray, est: EstimationStatistics, q: np.ndarray, powers, sigma2: float
):
    """Cholesky factor of the SI-CMMSE system matrix (statistics only).

    Replaces ghat ghat^H in the CMMSE system by its expectation R_bar; the
    LoS outer products make the matrix dense across BS blocks.  Reused across
    the channel realizations of one location draw.
    """
    p = np.asarray(powers, dtype=float)
    gbar = stack_pairs(means)  # (MN, K)
    rhat_sum = np.einsum("l,mlij->mij", p, est.rhat)
    system = (gbar * p[None, :]) @ gbar.conj().T + dense_block_diag(rhat_sum + q)
    system = 0.5 * (system + system.conj().T)
    return cho_factor(system)


def si_cmmse(ghat: np.ndarray, factor, powers) -> np.ndarray:
    """SI-CMMSE combining from the precomputed statistics factorization."""
    p = np.asarray(powers, dtype=float)
    return cho_solve(factor, stack_pairs(ghat)) * p[None, :]


def lmmse(ghat_m: np.ndarray, q_m: np.ndarray, powers) -> np.ndarray:
    """Local MMSE combining at one BS; ghat_m is (N, K)."""
    p = np.asarray(powers, dtype=float)
    system = (ghat_m * p[None, :]) @ ghat_m.conj().T + q_m
    return _solve_guarded(system, ghat_m, "lmmse") * p[None, :]


def gsli_sigma_matrix(
    means: np.ndarray,
    est: EstimationStatistics,
    q: np.ndarray,
    plan,
    tau_p: int,
) -> np.ndarray:
    """Global statistics matrix Sigma of the GSLI-MMSE combiner, (K, K).

    [Sigma]_kl = (1/MN) g_bar_k^H Q^{-1} g_bar_l, plus
    (1/MN) tau_p sum_m tr(A_ml Psi_mk A_mk^H Q_m^{-1}) when l shares k's pilot.
    Computed once per location draw at the CPU.
    """
    m_bs, k_ue, n = means.shape
    mn = m_bs * n
    gbar_part = np.zeros((k_ue, k_ue), dtype=complex)
    trace_part = np.zeros((k_ue, k_ue), dtype=complex)
    for m in range(m_bs):
        gbar_m = means[m].T  # (N, K)
        gbar_part += gbar_m.conj().T @ _solve_guarded(q[m], gbar_m, "gsli sigma")
        # W_mk = Psi_mk A_mk^H Q_m^{-1}, then tr(A_ml W_mk) per copilot pair.
        for k in range(k_ue):
            t1 = est.psi[m, k] @ est.a[m, k].conj().T
            w_mk = _solve_guarded(q[m], t1.conj().T, "gsli sigma").conj().T
            for l in plan.copilot_sets[k]:
                trace_part[k, l] += np.einsum("ij,ji->", est.a[m, l], w_mk)
    sigma = (gbar_part + tau_p * trace_part) / mn
    return 0.5 * (sigma + sigma.conj().T)


def gsli_mmse(
    ghat_m: np.ndarray, q_m: np.ndarray, sigma_mat: np.ndarray, powers, mn: int
) -> np.ndarray:
    """GSLI-MMSE combining at one BS from global statistics Sigma.

    v_mk = (p_k / MN) Q_m^{-1} Ghat_m (Sigma + P^{-1}/MN)^{-1} e_k.  An
    ill-conditioned inner system gets a small ridge and a logged warning.
    """
    p = np.asarray(powers, dtype=float)
    k_ue = p.shape[0]
    inner = sigma_mat + np.diag(1.0 / p) / mn
    if np.linalg.cond(inner) > 1e12:
        ridge = 1e-12 * np.real(np.trace(inner)) / k_ue
        logger.warning("gsli_mmse: ill-conditioned inner system, adding ridge %.3e", ridge)
        inner = inner + ridge * np.eye(k_ue)
    t_m = _solve_guarded(q_m, ghat_m, "gsli_mmse")
    w = _solve_guarded(inner, np.diag(p).astype(complex), "gsli_mmse inner")
    return (t_m @ w) / mn


def si_lmmse(ghat_m: np.ndarray, sta_factor, powers) -> np.ndarray:
    """SI-LMMSE combining: statistics-only inverse applied to local estimates."""
    p = np.asarray(powers, dtype=float)
    return cho_solve(sta_factor, ghat_m) * p[None, :]


def lmr(ghat_m: np.ndarray) -> np.ndarray:
    """Local maximum-ratio combining: v_mk = ghat_mk."""
    return ghat_m


def lrzf(ghat_m: np.ndarray, powers, sigma2: float) -> np.ndarray:
    """Local regularized zero-forcing.

    Drops the covariance terms from the LMMSE system and applies the inversion
    identity: V = Ghat (Ghat^H Ghat + sigma^2 P^{-1})^{-1}, which matches LMMSE
    with B = C = 0 for arbitrary power allocations.
    """
    p = np.asarray(powers, dtype=float)
    k_ue = p.shape[0]
    gram = ghat_m.conj().T @ ghat_m + sigma2 * np.diag(1.0 / p)
    return _solve_guarded(gram, ghat_m.conj().T, "lrzf").conj().T


def ssor_relaxation(k_ue: int, n: int, fallback: bool = False) -> float:
    """Relaxation parameter omega = 2 / (1 + sqrt(2 (1 - mu))).

    mu = (1 + sqrt(K/N))^2 - 1; valid for K/N below (sqrt(2)-1)^2, otherwise an
    error (or omega = 1 when fallback is enabled).
    """
    load = k_ue / n
    if load >= SSOR_LOAD_LIMIT:
        if fallback:
            logger.warning("ssor_relaxation: K/N=%.4f out of regime, using omega=1", load)
            return 1.0
        raise ValueError(
            f"ssor_relaxation: K/N={load:.4f} >= {SSOR_LOAD_LIMIT:.4f}; "
            "omega formula out of regime (enable the fallback to force omega=1)"
        )
    mu = (1.0 + np.sqrt(load)) ** 2 - 1.0
    return 2.0 / (1.0 + np.sqrt(2.0 * (1.0 - mu)))


def ssor_solve(
    a: np.ndarray, b: np.ndarray, omega: float, n_iter: int, x0=None
) -> np.ndarray:
    """n_iter symmetric-SOR sweeps for A x = b, A Hermitian positive definite.

    Each sweep is a forward SOR pass through (D + omega L) and a backward pass
    through (D + omega L^H); cost O(n^2) per sweep and right-hand side, no
    explicit inverse.  b may be (n,) or (n, k).
    """
    if not 0.0 < omega < 2.0:
        raise ValueError("ssor_solve: omega must lie in (0, 2)")
    n = a.shape[0]
    diag = np.diagonal(a)
    if np.any(np.real(diag) <= 0.0):
        raise ValueError("ssor_solve: system diagonal must be strictly positive")
    b_arr = np.asarray(b, dtype=complex)
    single = b_arr.ndim == 1
    rhs = b_arr[:, None] if single else b_arr

    lower = np.tril(a, -1)
    upper = np.triu(a, 1)
    fwd = lower * omega + np.diag(diag)
    bwd = upper * omega + np.diag(diag)

    x = np.zeros_like(rhs) if x0 is None else np.array(x0, dtype=complex, copy=True)
    if single and x.ndim == 1:
        x = x[:, None]
    for _ in range(n_iter):
        half = solve_triangular(
            fwd, (1.0 - omega) * diag[:, None] * x - omega * (upper @ x) + omega * rhs,
            lower=True,
        )
        x = solve_triangular(
            bwd, (1.0 - omega) * diag[:, None] * half - omega * (lower @ half) + omega * rhs,
            lower=False,
        )
    return x[:, 0] if single else x


def _ins_system(ghat_m: np.ndarray, q_m: np.ndarray, powers) -> np.ndarray:
    p = np.asarray(powers, dtype=float)
    return (ghat_m * p[None, :]) @ ghat_m.conj().T + q_m


def ins_ssor_lmmse(
    ghat_m: np.ndarray, q_m: np.ndarray, powers, ssor: SsorConfig
) -> np.ndarray:
    """SSOR iterations on the instantaneous LMMSE system, zero start."""
    p = np.asarray(powers, dtype=float)
    n, k_ue = ghat_m.shape
    omega = ssor.resolve_omega(k_ue, n)
    return ssor_solve(_ins_system(ghat_m, q_m, powers), ghat_m * p[None, :], omega, ssor.n_iter)


def sta_ssor_lmmse(
    ghat_m: np.ndarray, sta_m: np.ndarray, powers, ssor: SsorConfig
) -> np.ndarray:
    """SSOR iterations on the statistics-only system, zero start."""
    p = np.asarray(powers, dtype=float)
    n, k_ue = ghat_m.shape
    omega = ssor.resolve_omega(k_ue, n)
    return ssor_solve(sta_m, ghat_m * p[None, :], omega, ssor.n_iter)


def ins_si_ssor_lmmse(
    ghat_m: np.ndarray, q_m: np.ndarray, sta_factor, powers, ssor: SsorConfig
) -> np.ndarray:
    """SSOR on the instantaneous system warm-started at the SI-LMMSE solution."""
    p = np.asarray(powers, dtype=float)
    n, k_ue = ghat_m.shape
    omega = ssor.resolve_omega(k_ue, n)
    x0 = si_lmmse(ghat_m, sta_factor, powers)
    return ssor_solve(_ins_system(ghat_m, q_m, powers), ghat_m * p[None, :], omega, ssor.n_iter, x0=x0)
