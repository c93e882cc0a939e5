"""Monte-Carlo experiment driver and result serialization.

One experiment runs `n_locations` independent drops.  Per drop: place BSs and
UEs, build channel + coupling + estimation statistics, precompute every
statistics-only factorization, then loop `n_realizations` coherence blocks
(sample channels, estimate, form each selected combiner, accumulate SINR
moments) and evaluate the SE bounds.  Randomness comes from counter-based
substreams keyed on (seed, location, purpose, realization), so results are
reproducible bit-for-bit and adding schemes never perturbs the channel draws.
"""

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor

from .. import combining as cb
from ..channel import large_scale_fading, pair_channel_stats, wavenumber_lattice, variance_profile
from ..coupling import apply_coupling, coupling_matrix
from ..estimation import (
    apply_estimator,
    assign_pilots,
    estimation_statistics,
    estimator_matrices,
    pilot_differences,
    psi_matrices,
    stack_pairs,
)
from ..geometry import ArrayGeometry, pair_distances, place_scenario
from ..se_eval import (
    CentralizedMoments,
    DistributedMoments,
    StandardBoundAccumulator,
    lsfd_se,
    lsfd_weights,
    standard_sinr,
    uatf_se_centralized,
)
from .complexity import COMPLEXITY_SCHEMES, complexity_estimate
from .config import ScenarioConfig, config_to_items

__all__ = [
    "SERow",
    "SEReport",
    "run_experiment",
    "serialize_report",
    "parse_report",
    "write_report",
]

# RNG purpose codes for the per-trial substreams.
_PURPOSE_PLACEMENT = 0
_PURPOSE_CHANNEL = 1
_PURPOSE_PILOT = 2


def _substream(seed: int, location: int, purpose: int, realization: int = 0):
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(location, purpose, realization))
    return np.random.default_rng(ss)


@dataclass(frozen=True)
class SERow:
    scheme: str
    bound: str  # "uatf" | "standard" | "lsfd"
    ue_index: int
    se_bits_per_hz: float
    stderr: float


@dataclass
class SEReport:
    """Aggregated experiment result.

    `config_items` and `rows` define equality and are what the CSV round-trips;
    `location_means` (per-draw average SE samples) and `flops` are in-memory
    extras for analysis.
    """

    config_items: dict
    rows: tuple
    location_means: dict = field(compare=False, repr=False, default_factory=dict)
    flops: dict = field(compare=False, repr=False, default_factory=dict)


class _LocationStatistics:
    """Everything that is fixed within one location draw."""

    def __init__(self, cfg: ScenarioConfig, layout, lam, z_bs, plan, profile_cache):
        m_bs, k_ue, n = cfg.m_bs, cfg.k_ue, cfg.n_antennas()
        powers = cfg.powers()
        sigma2 = cfg.sigma2_w()

        self.means = np.empty((m_bs, k_ue, n), dtype=complex)
        self.cov = np.empty((m_bs, k_ue, n, n), dtype=complex)
        factors = None
        for m in range(m_bs):
            geom = layout.bs_geometries[m]
            for k in range(k_ue):
                d_ref, _ = pair_distances(geom, layout.ue_positions[k])
                ls = large_scale_fading(
                    d_ref,
                    pathloss_const_db=cfg.pathloss_const_db,
                    pathloss_slope_db=cfg.pathloss_slope_db,
                    distance_floor_m=cfg.distance_floor_m,
                )
                raw = pair_channel_stats(
                    geom, layout.ue_positions[k], ls, lam, profile=profile_cache
                )
                eff = apply_coupling(z_bs, raw)
                if factors is None:
                    factors = np.empty((m_bs, k_ue) + eff.factor.shape, dtype=complex)
                self.means[m, k] = eff.mean
                self.cov[m, k] = eff.cov
                factors[m, k] = eff.factor
        self.factors = factors

        self.psi = psi_matrices(self.cov, plan, powers, sigma2)
        self.a = estimator_matrices(cfg.estimator, self.cov, self.psi, powers, cfg.tau_p)
        self.est = estimation_statistics(
            self.a, self.cov, self.psi, self.means, powers, cfg.tau_p
        )
        self.q = cb.q_blocks(self.est, powers, sigma2)

        schemes = set(cfg.schemes)
        self.sta = None
        self.sta_factors = None
        if schemes & {"si-lmmse", "sta-ssor", "ins-si-ssor"}:
            self.sta = cb.sta_systems(self.est, powers, sigma2)
            self.sta_factors = [cho_factor(self.sta[m]) for m in range(m_bs)]
        self.sigma_mat = None
        if "gsli-mmse" in schemes:
            self.sigma_mat = cb.gsli_sigma_matrix(self.means, self.est, self.q, plan, cfg.tau_p)
        self.si_cmmse_factor = None
        if "si-cmmse" in schemes:
            self.si_cmmse_factor = cb.si_cmmse_factor(
                self.means, self.est, self.q, powers, sigma2
            )
        # sum_l p_l C_ml + sigma^2 I per BS, the standard bound's noise term
        self.cw_blocks = np.einsum("l,mlij->mij", powers, self.est.c) + sigma2 * np.eye(n)


def _sample_channels(stats: _LocationStatistics, rng) -> np.ndarray:
    m_bs, k_ue, n, n_r = stats.factors.shape
    z = (rng.standard_normal((m_bs, k_ue, n_r)) + 1j * rng.standard_normal((m_bs, k_ue, n_r)))
    z /= np.sqrt(2.0)
    return stats.means + np.einsum("mkij,mkj->mki", stats.factors, z)


def _combine(scheme, stats, ghat, powers, sigma2, ssor_cfg, mn):
    """Combining vectors for one scheme: (MN, K) centralized, (M, N, K) distributed."""
    if scheme == "cmmse":
        return cb.cmmse(ghat, stats.q, powers)
    if scheme == "si-cmmse":
        return cb.si_cmmse(ghat, stats.si_cmmse_factor, powers)
    m_bs = ghat.shape[0]
    v = np.empty((m_bs, ghat.shape[2], ghat.shape[1]), dtype=complex)
    for m in range(m_bs):
        g_m = ghat[m].T  # (N, K)
        if scheme == "lmmse":
            v[m] = cb.lmmse(g_m, stats.q[m], powers)
        elif scheme == "gsli-mmse":
            v[m] = cb.gsli_mmse(g_m, stats.q[m], stats.sigma_mat, powers, mn)
        elif scheme == "si-lmmse":
            v[m] = cb.si_lmmse(g_m, stats.sta_factors[m], powers)
        elif scheme == "lmr":
            v[m] = cb.lmr(g_m)
        elif scheme == "lrzf":
            v[m] = cb.lrzf(g_m, powers, sigma2)
        elif scheme == "ins-ssor":
            v[m] = cb.ins_ssor_lmmse(g_m, stats.q[m], powers, ssor_cfg)
        elif scheme == "sta-ssor":
            v[m] = cb.sta_ssor_lmmse(g_m, stats.sta[m], powers, ssor_cfg)
        elif scheme == "ins-si-ssor":
            v[m] = cb.ins_si_ssor_lmmse(
                g_m, stats.q[m], stats.sta_factors[m], powers, ssor_cfg
            )
        else:
            raise ValueError(f"unknown scheme {scheme!r}")
    return v


def run_experiment(cfg: ScenarioConfig) -> SEReport:
    """Run the full Monte-Carlo experiment described by `cfg`."""
    cfg.validate()
    lam = cfg.wavelength()
    powers = cfg.powers()
    sigma2 = cfg.sigma2_w()
    prelog = cfg.prelog()
    plan = assign_pilots(cfg.k_ue, cfg.tau_p)
    mn = cfg.m_bs * cfg.n_antennas()
    ssor_cfg = cb.SsorConfig(n_iter=cfg.n_iter_ssor, omega_fallback=cfg.ssor_omega_fallback)

    # The coupling matrix and the isotropic variance profile depend only on the
    # array geometry, shared by every BS and location draw.
    dx, dy = cfg.spacings_m()
    ref_geom = ArrayGeometry(cfg.n_x, cfg.n_y, dx, dy, np.array([0.0, cfg.bs_height_m, 0.0]))
    z_bs = coupling_matrix(cfg.coupling_params(), ref_geom, lam).z_bs if cfg.coupling_enabled else None
    lattice = wavenumber_lattice(cfg.n_x, cfg.n_y, dx, dy, lam)
    profile = variance_profile(lattice, cfg.n_x * dx, cfg.n_y * dy, lam)

    centralized = [s for s in cfg.schemes if s in cb.CENTRALIZED_SCHEMES]
    distributed = [s for s in cfg.schemes if s in cb.DISTRIBUTED_SCHEMES]
    standard_ok = cfg.estimator == "mmse" or cfg.allow_standard_bound_mismatch

    loc_se = {}

    def record(scheme, bound, se):
        loc_se.setdefault((scheme, bound), []).append(np.asarray(se, dtype=float))

    for loc in range(cfg.n_locations):
        layout = place_scenario(cfg, _substream(cfg.seed, loc, _PURPOSE_PLACEMENT))
        stats = _LocationStatistics(cfg, layout, lam, z_bs, plan, profile)

        cent_moments = {s: CentralizedMoments.zeros(cfg.k_ue) for s in centralized}
        std_acc = {s: StandardBoundAccumulator(cfg.k_ue) for s in centralized} if standard_ok else {}
        dist_moments = {s: DistributedMoments.zeros(cfg.k_ue, cfg.m_bs) for s in distributed}

        for r in range(cfg.n_realizations):
            g = _sample_channels(stats, _substream(cfg.seed, loc, _PURPOSE_CHANNEL, r))
            delta = pilot_differences(
                g, stats.means, plan, powers, cfg.tau_p, sigma2,
                _substream(cfg.seed, loc, _PURPOSE_PILOT, r),
            )
            ghat = apply_estimator(stats.a, delta, plan, stats.means)
            g_stack = stack_pairs(g)
            ghat_stack = stack_pairs(ghat)

            for scheme in centralized:
                v = _combine(scheme, stats, ghat, powers, sigma2, ssor_cfg, mn)
                cent_moments[scheme].update(v, g_stack)
                if standard_ok:
                    gamma = standard_sinr(
                        v, ghat_stack, stats.cw_blocks, powers,
                        use_printed_inverse=cfg.standard_bound_printed_inverse,
                    )
                    std_acc[scheme].update(gamma)
            for scheme in distributed:
                v = _combine(scheme, stats, ghat, powers, sigma2, ssor_cfg, mn)
                dist_moments[scheme].update(v, g)

        for scheme in centralized:
            record(scheme, "uatf", uatf_se_centralized(cent_moments[scheme], powers, sigma2, prelog))
            if standard_ok:
                record(scheme, "standard", std_acc[scheme].se(prelog))
        for scheme in distributed:
            weights = lsfd_weights(dist_moments[scheme], powers, sigma2)
            record(scheme, "lsfd", lsfd_se(dist_moments[scheme], weights, powers, sigma2, prelog))

    rows = []
    location_means = {}
    for (scheme, bound), samples in loc_se.items():
        arr = np.stack(samples)  # (n_locations, K)
        mean = arr.mean(axis=0)
        if arr.shape[0] > 1:
            stderr = arr.std(axis=0, ddof=1) / np.sqrt(arr.shape[0])
        else:
            stderr = np.zeros(cfg.k_ue)
        for k in range(cfg.k_ue):
            rows.append(SERow(scheme, bound, k, float(mean[k]), float(stderr[k])))
        location_means[(scheme, bound)] = arr.mean(axis=1).tolist()

    flops = {}
    for scheme in cfg.schemes:
        if scheme in COMPLEXITY_SCHEMES:
            flops[scheme] = complexity_estimate(
                scheme, cfg.m_bs, cfg.n_antennas(), cfg.k_ue,
                cfg.n_realizations, cfg.n_iter_ssor,
            )

    return SEReport(
        config_items=config_to_items(cfg),
        rows=tuple(rows),
        location_means=location_means,
        flops=flops,
    )


# CSV serialization ------------------------------------------------------

_CSV_COLUMNS = ("scheme", "bound", "ue_index", "se_bits_per_hz", "stderr")


def serialize_report(report: SEReport) -> str:
    """Report as CSV with a leading '# config:' metadata row."""
    buf = io.StringIO()
    echo = " ".join(f"{k}={v}" for k, v in report.config_items.items())
    buf.write(f"# config: {echo}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_CSV_COLUMNS)
    for row in report.rows:
        writer.writerow([row.scheme, row.bound, row.ue_index,
                         repr(row.se_bits_per_hz), repr(row.stderr)])
    return buf.getvalue()


def parse_report(text: str) -> SEReport:
    """Inverse of serialize_report; exact round trip of config echo and rows."""
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# config: "):
        raise ValueError("parse_report: missing '# config:' metadata row")
    config_items = {}
    for token in lines[0][len("# config: "):].split():
        key, value = token.split("=", 1)
        config_items[key] = value
    reader = csv.reader(io.StringIO("\n".join(lines[1:])))
    header = next(reader)
    if tuple(header) != _CSV_COLUMNS:
        raise ValueError(f"parse_report: unexpected header {header}")
    rows = []
    for record in reader:
        if not record:
            continue
        scheme, bound, ue_index, se, stderr = record
        rows.append(SERow(scheme, bound, int(ue_index), float(se), float(stderr)))
    return SEReport(config_items=config_items, rows=tuple(rows))


def write_report(report: SEReport, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(serialize_report(report))
