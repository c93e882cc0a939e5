"""Scenario configuration, figure presets, and the flat key=value file format."""

import dataclasses
from dataclasses import dataclass

import numpy as np

from ..channel import DISTANCE_FLOOR_M, PATHLOSS_CONST_DB, PATHLOSS_SLOPE_DB
from ..combining import ALL_SCHEMES
from ..coupling import CouplingParams
from ..estimation import ESTIMATOR_KINDS

__all__ = [
    "SPEED_OF_LIGHT",
    "ScenarioConfig",
    "PRESET_NAMES",
    "preset",
    "config_to_items",
    "config_from_items",
    "parse_config_text",
    "serialize_config",
]

SPEED_OF_LIGHT = 299792458.0


@dataclass
class ScenarioConfig:
    """All geometric, RF, and algorithmic parameters of one experiment.

    Defaults: 3 GHz carrier, coherence block of 200 symbols with a single
    shared pilot, 200 mW per UE, -94 dBm noise, 12.5 m / 1.5 m BS and UE
    heights, 50 ohm loads on 0.1-wavelength dipoles.
    """

    # Topology and array geometry
    m_bs: int = 4
    k_ue: int = 20
    n_x: int = 4
    n_y: int = 4
    delta_x_wavelengths: float = 0.25
    delta_y_wavelengths: float = 0.25
    area_side_m: float = 1000.0
    bs_height_m: float = 12.5
    ue_height_m: float = 1.5

    # RF and frame structure
    f_c_hz: float = 3.0e9
    tau_c: int = 200
    tau_p: int = 1
    p_uplink_w: float = 0.2
    sigma2_dbm: float = -94.0

    # Large-scale fading law (dB): const + slope * log10(d [m])
    pathloss_const_db: float = PATHLOSS_CONST_DB
    pathloss_slope_db: float = PATHLOSS_SLOPE_DB
    distance_floor_m: float = DISTANCE_FLOOR_M

    # Mutual coupling
    coupling_enabled: bool = True
    z_load_ohm: float = 50.0
    dipole_length_wavelengths: float = 0.1
    wire_radius_wavelengths: float = 1e-5
    eta_ohm: float = 120.0 * np.pi
    euler_gamma: float = 0.577
    collinear_convention: str = "emf"

    # Estimation and combining
    estimator: str = "mmse"
    schemes: tuple = ("cmmse", "lmmse", "lmr")
    n_iter_ssor: int = 5
    ssor_omega_fallback: bool = False
    standard_bound_printed_inverse: bool = False
    allow_standard_bound_mismatch: bool = False

    # Monte-Carlo controls
    n_realizations: int = 800
    n_locations: int = 50
    seed: int = 1

    def __post_init__(self):
        if isinstance(self.schemes, (list, str)):
            if isinstance(self.schemes, str):
                self.schemes = tuple(s for s in self.schemes.split(",") if s)
            else:
                self.schemes = tuple(self.schemes)

    # Derived quantities -------------------------------------------------
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.f_c_hz

    def spacings_m(self) -> tuple[float, float]:
        lam = self.wavelength()
        return self.delta_x_wavelengths * lam, self.delta_y_wavelengths * lam

    def sigma2_w(self) -> float:
        return 10.0 ** ((self.sigma2_dbm - 30.0) / 10.0)

    def powers(self) -> np.ndarray:
        return np.full(self.k_ue, self.p_uplink_w)

    def prelog(self) -> float:
        return (self.tau_c - self.tau_p) / self.tau_c

    def n_antennas(self) -> int:
        return self.n_x * self.n_y

    def coupling_params(self) -> CouplingParams:
        return CouplingParams(
            z_load=complex(self.z_load_ohm),
            dipole_length=self.dipole_length_wavelengths,
            wire_radius=self.wire_radius_wavelengths,
            eta=self.eta_ohm,
            euler_gamma=self.euler_gamma,
            collinear_convention=self.collinear_convention,
        )

    def validate(self) -> None:
        """Raise ValueError listing every invalid field by name."""
        problems = []
        for name in ("m_bs", "k_ue", "n_x", "n_y", "tau_p", "tau_c", "n_realizations",
                     "n_locations", "n_iter_ssor"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)):
                problems.append(f"{name} must be an integer")
        if self.m_bs < 1:
            problems.append("m_bs must be >= 1")
        if self.k_ue < 1:
            problems.append("k_ue must be >= 1")
        if self.n_x < 1 or self.n_y < 1:
            problems.append("n_x and n_y must be >= 1")
        if self.delta_x_wavelengths <= 0 or self.delta_y_wavelengths <= 0:
            problems.append("delta_x_wavelengths and delta_y_wavelengths must be > 0")
        if self.f_c_hz <= 0:
            problems.append("f_c_hz must be > 0")
        if not 1 <= self.tau_p < self.tau_c:
            problems.append("tau_p must satisfy 1 <= tau_p < tau_c")
        if self.p_uplink_w <= 0:
            problems.append("p_uplink_w must be > 0")
        if self.area_side_m <= 0:
            problems.append("area_side_m must be > 0")
        if self.estimator not in ESTIMATOR_KINDS:
            problems.append(f"estimator must be one of {ESTIMATOR_KINDS}")
        unknown = [s for s in self.schemes if s not in ALL_SCHEMES]
        if unknown:
            problems.append(f"schemes contains unknown entries {unknown}")
        if not self.schemes:
            problems.append("schemes must not be empty")
        if self.n_iter_ssor < 0:
            problems.append("n_iter_ssor must be >= 0")
        if self.n_realizations < 1:
            problems.append("n_realizations must be >= 1")
        if self.n_locations < 1:
            problems.append("n_locations must be >= 1")
        if self.collinear_convention not in ("emf", "symmetric"):
            problems.append("collinear_convention must be 'emf' or 'symmetric'")
        if problems:
            raise ValueError("invalid config: " + "; ".join(problems))


# Figure presets: one canned experiment configuration per headline figure,
# taken at its representative operating point.
_PRESETS = {
    "fig1": dict(m_bs=4, k_ue=20, n_x=16, n_y=16, delta_x_wavelengths=0.25,
                 delta_y_wavelengths=0.25, schemes=("cmmse", "gsli-mmse", "lmmse", "lmr")),
    "fig2": dict(m_bs=6, k_ue=20, n_x=16, n_y=16, delta_x_wavelengths=0.25,
                 delta_y_wavelengths=0.25, schemes=("cmmse", "gsli-mmse", "lmmse")),
    "fig3": dict(m_bs=8, k_ue=20, n_x=8, n_y=8, delta_x_wavelengths=0.25,
                 delta_y_wavelengths=0.25, schemes=("cmmse", "gsli-mmse", "lmmse")),
    "fig4": dict(m_bs=8, k_ue=20, n_x=8, n_y=8, delta_x_wavelengths=0.25,
                 delta_y_wavelengths=0.25, schemes=("cmmse", "gsli-mmse", "lmmse")),
    "fig5": dict(m_bs=6, k_ue=20, n_x=12, n_y=12, delta_x_wavelengths=0.25,
                 delta_y_wavelengths=0.25, schemes=("lmmse", "si-lmmse", "lmr")),
    "fig6": dict(m_bs=8, k_ue=10, n_x=16, n_y=16, delta_x_wavelengths=0.125,
                 delta_y_wavelengths=0.125,
                 schemes=("lmmse", "ins-ssor", "sta-ssor", "ins-si-ssor", "lmr")),
    "fig7": dict(m_bs=8, k_ue=10, n_x=8, n_y=8, delta_x_wavelengths=0.125,
                 delta_y_wavelengths=0.125,
                 schemes=("lmmse", "ins-ssor", "sta-ssor", "ins-si-ssor")),
    "fig8": dict(m_bs=6, k_ue=10, n_x=16, n_y=16, delta_x_wavelengths=0.25,
                 delta_y_wavelengths=0.25, n_iter_ssor=5,
                 schemes=("gsli-mmse", "lmmse", "si-lmmse", "ins-ssor", "sta-ssor",
                          "ins-si-ssor")),
    "fig9": dict(m_bs=4, k_ue=10, n_x=8, n_y=8, delta_x_wavelengths=0.125,
                 delta_y_wavelengths=0.125,
                 schemes=("cmmse", "gsli-mmse", "lmmse", "si-lmmse", "ins-ssor",
                          "sta-ssor", "ins-si-ssor", "lrzf", "lmr")),
}

PRESET_NAMES = tuple(sorted(_PRESETS))


def preset(name: str, scale: float = 1.0, realization_scale: float = 1.0) -> ScenarioConfig:
    """Canned configuration for one figure, optionally scaled for desk runs.

    `scale` shrinks the per-side antenna counts; `realization_scale` shrinks
    the channel-realization count, kept separate so scaling the array leaves
    everything else intact.
    """
    if name not in _PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")
    if scale <= 0 or realization_scale <= 0:
        raise ValueError("preset scale factors must be positive")
    cfg = ScenarioConfig(**_PRESETS[name])
    if scale != 1.0:
        cfg.n_x = max(1, round(cfg.n_x * scale))
        cfg.n_y = max(1, round(cfg.n_y * scale))
    if realization_scale != 1.0:
        cfg.n_realizations = max(1, round(cfg.n_realizations * realization_scale))
    return cfg


# Flat key=value serialization ------------------------------------------

def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(value)
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def config_to_items(cfg: ScenarioConfig) -> dict:
    """Config as an ordered {field: string} mapping, the file/CSV echo format."""
    return {f.name: _format_value(getattr(cfg, f.name)) for f in dataclasses.fields(cfg)}


def _parse_value(name: str, text: str, target_type):
    if target_type is bool:
        low = text.strip().lower()
        if low in ("true", "1", "yes"):
            return True
        if low in ("false", "0", "no"):
            return False
        raise ValueError(f"config field {name}: cannot parse boolean from {text!r}")
    if target_type is int:
        return int(text)
    if target_type is float:
        return float(text)
    if target_type is tuple:
        return tuple(s.strip() for s in text.split(",") if s.strip())
    return text


def config_from_items(items: dict) -> ScenarioConfig:
    """Build a config from {field: string}; unknown keys are an error."""
    fields = {f.name: f for f in dataclasses.fields(ScenarioConfig)}
    unknown = sorted(set(items) - set(fields))
    if unknown:
        raise ValueError(f"unknown config keys: {unknown}")
    defaults = ScenarioConfig()
    kwargs = {}
    for name, text in items.items():
        target_type = type(getattr(defaults, name))
        kwargs[name] = _parse_value(name, text, target_type)
    return ScenarioConfig(**kwargs)


def parse_config_text(text: str) -> ScenarioConfig:
    """Parse the flat key=value config format ('#' comments and blanks allowed)."""
    items = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        items[key.strip()] = value.strip()
    return config_from_items(items)


def serialize_config(cfg: ScenarioConfig) -> str:
    return "\n".join(f"{k}={v}" for k, v in config_to_items(cfg).items()) + "\n"
