"""SINR and spectral-efficiency evaluation for both processing architectures.

Expectations are estimated by accumulating inner products over channel
realizations.  Centralized combiners are scored with the use-and-then-forget
(UatF) bound and, under MMSE estimation, the tighter standard bound;
distributed combiners are scored with the LSFD-weighted UatF bound using the
closed-form optimal weights.
"""

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CentralizedMoments",
    "DistributedMoments",
    "StandardBoundAccumulator",
    "uatf_sinr_centralized",
    "uatf_se_centralized",
    "standard_sinr",
    "lsfd_weights",
    "lsfd_sinr",
    "lsfd_se",
    "se_from_sinr",
]

logger = logging.getLogger(__name__)


def se_from_sinr(gamma: np.ndarray, prelog: float) -> np.ndarray:
    return prelog * np.log2(1.0 + gamma)


@dataclass
class CentralizedMoments:
    """Running sums of the UatF moment terms for centralized combining."""

    n_samples: int
    signal: np.ndarray  # (K,) sum of v_k^H g_k
    cross_sq: np.ndarray  # (K, K) sum of |v_k^H g_l|^2 at [k, l]
    norm_sq: np.ndarray  # (K,) sum of ||v_k||^2

    @classmethod
    def zeros(cls, k_ue: int) -> "CentralizedMoments":
        return cls(0, np.zeros(k_ue, dtype=complex), np.zeros((k_ue, k_ue)), np.zeros(k_ue))

    def update(self, v: np.ndarray, g: np.ndarray) -> None:
        """Add one realization; v and g are collective (MN, K) matrices."""
        cross = v.conj().T @ g  # [k, l] = v_k^H g_l
        self.signal += np.diagonal(cross)
        self.cross_sq += np.abs(cross) ** 2
        self.norm_sq += np.sum(np.abs(v) ** 2, axis=0)
        self.n_samples += 1

    def merge(self, other: "CentralizedMoments") -> "CentralizedMoments":
        return CentralizedMoments(
            self.n_samples + other.n_samples,
            self.signal + other.signal,
            self.cross_sq + other.cross_sq,
            self.norm_sq + other.norm_sq,
        )


@dataclass
class DistributedMoments:
    """Running sums of the LSFD moment terms for per-BS combining."""

    n_samples: int
    b_mean: np.ndarray  # (K, M) sum of b_kk entries
    second: np.ndarray  # (K, K, M, M) sum of b_kl b_kl^H
    norm_sq: np.ndarray  # (K, M) sum of ||v_mk||^2

    @classmethod
    def zeros(cls, k_ue: int, m_bs: int) -> "DistributedMoments":
        return cls(
            0,
            np.zeros((k_ue, m_bs), dtype=complex),
            np.zeros((k_ue, k_ue, m_bs, m_bs), dtype=complex),
            np.zeros((k_ue, m_bs)),
        )

    def update(self, v: np.ndarray, g: np.ndarray) -> None:
        """Add one realization; v is (M, N, K) per-BS combiners, g is (M, K, N)."""
        m_bs, n, k_ue = v.shape
        b = np.empty((k_ue, k_ue, m_bs), dtype=complex)
        for m in range(m_bs):
            b[:, :, m] = v[m].conj().T @ g[m].T  # [k, l] = v_mk^H g_ml
        self.second += np.einsum("klm,kln->klmn", b, b.conj())
        self.b_mean += b[np.arange(k_ue), np.arange(k_ue), :]
        self.norm_sq += np.sum(np.abs(v) ** 2, axis=1).T
        self.n_samples += 1

    def merge(self, other: "DistributedMoments") -> "DistributedMoments":
        return DistributedMoments(
            self.n_samples + other.n_samples,
            self.b_mean + other.b_mean,
            self.second + other.second,
            self.norm_sq + other.norm_sq,
        )


def _clamped_ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    """Elementwise num/den with a guard for Monte-Carlo noise in the denominator.

    A nonpositive denominator (impossible in exact arithmetic, possible from
    sampling noise) is clamped relative to the numerator so the SINR stays
    finite and large.
    """
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    bad = den <= 0.0
    if np.any(bad):
        warnings.warn(
            "SINR denominator nonpositive from Monte-Carlo noise; clamping",
            RuntimeWarning,
            stacklevel=2,
        )
        floor = np.maximum(np.finfo(float).eps * num, np.finfo(float).tiny)
        den = np.where(bad, floor, den)
    return num / den


def uatf_sinr_centralized(m: CentralizedMoments, powers, sigma2: float) -> np.ndarray:
    """UatF SINR per UE from accumulated centralized moments."""
    if m.n_samples == 0:
        raise ValueError("uatf_sinr_centralized: no samples accumulated")
    p = np.asarray(powers, dtype=float)
    n = m.n_samples
    signal = np.abs(m.signal / n) ** 2
    interference = (m.cross_sq / n) @ p
    noise = sigma2 * m.norm_sq / n
    return _clamped_ratio(p * signal, interference - p * signal + noise)


def uatf_se_centralized(m: CentralizedMoments, powers, sigma2: float, prelog: float):
    return se_from_sinr(uatf_sinr_centralized(m, powers, sigma2), prelog)


def standard_sinr(
    v: np.ndarray,
    ghat: np.ndarray,
    cw_blocks: np.ndarray,
    powers,
    use_printed_inverse: bool = False,
) -> np.ndarray:
    """Per-realization SINR of the standard bound (MMSE estimation assumed).

    v, ghat: collective (MN, K); cw_blocks: (M, N, N) blocks of
    sum_l p_l C_ml + sigma^2 I.  The noise quadratic form is evaluated without
    the inverse that appears in the printed expression; set
    `use_printed_inverse` to reproduce that variant.
    """
    p = np.asarray(powers, dtype=float)
    mn, k_ue = v.shape
    m_bs, n, _ = cw_blocks.shape
    cross = np.abs(v.conj().T @ ghat) ** 2  # [k, l] = |v_k^H ghat_l|^2
    signal = p * np.diagonal(cross)
    interference = cross @ p - np.diagonal(cross) * p

    vb = v.reshape(m_bs, n, k_ue)
    quad = np.zeros(k_ue)
    for m in range(m_bs):
        if use_printed_inverse:
            w = np.linalg.solve(cw_blocks[m], vb[m])
        else:
            w = cw_blocks[m] @ vb[m]
        quad += np.real(np.sum(vb[m].conj() * w, axis=0))
    return _clamped_ratio(signal, interference + quad)


@dataclass
class StandardBoundAccumulator:
    """Running sum of log2(1 + gamma) for the standard capacity bound."""

    k_ue: int
    n_samples: int = 0
    log_sum: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.log_sum is None:
            self.log_sum = np.zeros(self.k_ue)

    def update(self, gamma: np.ndarray) -> None:
        self.log_sum += np.log2(1.0 + gamma)
        self.n_samples += 1

    def se(self, prelog: float) -> np.ndarray:
        if self.n_samples == 0:
            raise ValueError("StandardBoundAccumulator: no samples accumulated")
        return prelog * self.log_sum / self.n_samples


def _lsfd_matrices(dm: DistributedMoments, powers, sigma2: float):
    p = np.asarray(powers, dtype=float)
    n = dm.n_samples
    b_bar = dm.b_mean / n  # (K, M)
    second = dm.second / n  # (K, K, M, M)
    lam = np.einsum("l,klmn->kmn", p, second)
    lam -= p[:, None, None] * np.einsum("km,kn->kmn", b_bar, b_bar.conj())
    d_mean = dm.norm_sq / n  # (K, M)
    k_ue, m_bs = b_bar.shape
    for k in range(k_ue):
        lam[k] += sigma2 * np.diag(d_mean[k])
    return b_bar, lam


def lsfd_weights(dm: DistributedMoments, powers, sigma2: float) -> np.ndarray:
    """Optimal LSFD weights a_k* = Lambda_k^{-1} E{b_kk}, shape (K, M).

    A singular Lambda (degenerate moments) gets a small ridge and a warning.
    """
    if dm.n_samples == 0:
        raise ValueError("lsfd_weights: no samples accumulated")
    b_bar, lam = _lsfd_matrices(dm, powers, sigma2)
    k_ue, m_bs = b_bar.shape
    a = np.empty((k_ue, m_bs), dtype=complex)
    for k in range(k_ue):
        try:
            a[k] = np.linalg.solve(lam[k], b_bar[k])
        except np.linalg.LinAlgError:
            ridge = 1e-12 * np.real(np.trace(lam[k])) / m_bs
            logger.warning("lsfd_weights: singular moment matrix for UE %d, ridge %.3e", k, ridge)
            a[k] = np.linalg.solve(lam[k] + ridge * np.eye(m_bs), b_bar[k])
    return a


def lsfd_sinr(dm: DistributedMoments, a: np.ndarray, powers, sigma2: float) -> np.ndarray:
    """LSFD SINR per UE for given weight vectors a (K, M)."""
    p = np.asarray(powers, dtype=float)
    b_bar, lam = _lsfd_matrices(dm, powers, sigma2)
    num = p * np.abs(np.einsum("km,km->k", a.conj(), b_bar)) ** 2
    den = np.real(np.einsum("km,kmn,kn->k", a.conj(), lam, a))
    return _clamped_ratio(num, den)


def lsfd_se(dm: DistributedMoments, a: np.ndarray, powers, sigma2: float, prelog: float):
    return se_from_sinr(lsfd_sinr(dm, a, powers, sigma2), prelog)
