"""Pydantic request/response models of the simulator service."""

from pydantic import BaseModel, Field

__all__ = [
    "ExperimentRequest",
    "SERowModel",
    "ExperimentResponse",
    "JobInfo",
    "ComplexityRequest",
    "ComplexityResponse",
    "PresetResponse",
]


class ExperimentRequest(BaseModel):
    """Experiment description: a preset and/or flat config-field overrides.

    `overrides` uses the same string encoding as the key=value config files
    (e.g. {"m_bs": "4", "schemes": "cmmse,lmr"}); it is applied on top of the
    preset when one is given, otherwise on top of the defaults.
    """

    preset: str | None = None
    scale: float = 1.0
    realization_scale: float = 1.0
    overrides: dict[str, str] = Field(default_factory=dict)


class SERowModel(BaseModel):
    scheme: str
    bound: str
    ue_index: int
    se_bits_per_hz: float
    stderr: float


class FlopsModel(BaseModel):
    scheme: str
    combining_flops: int
    precompute_flops: int


class ExperimentResponse(BaseModel):
    config: dict[str, str]
    rows: list[SERowModel]
    flops: list[FlopsModel] = Field(default_factory=list)
    location_means: dict[str, list[float]] = Field(default_factory=dict)


class JobInfo(BaseModel):
    job_id: str
    state: str  # "running" | "done" | "failed"
    error: str | None = None
    result: ExperimentResponse | None = None


class ComplexityRequest(BaseModel):
    scheme: str
    m_bs: int
    n_antennas: int
    k_ue: int
    n_realizations: int
    n_iter: int = 5


class ComplexityResponse(BaseModel):
    scheme: str
    combining_flops: int
    precompute_flops: int
    total_flops: int


class PresetResponse(BaseModel):
    name: str
    config: dict[str, str]
