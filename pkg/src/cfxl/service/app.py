"""FastAPI application exposing experiments, presets, and complexity estimates.

Small experiments can run synchronously via POST /experiments/run; longer
campaigns go through POST /experiments, which starts a background job polled
at GET /experiments/{job_id}.  The job store is in-memory and per-process.
"""

import threading
import uuid

from fastapi import FastAPI, HTTPException

from ..harness import (
    PRESET_NAMES,
    complexity_estimate,
    config_from_items,
    config_to_items,
    preset,
    run_experiment,
)
from ..harness.runner import SEReport
from .schemas import (
    ComplexityRequest,
    ComplexityResponse,
    ExperimentRequest,
    ExperimentResponse,
    FlopsModel,
    JobInfo,
    PresetResponse,
    SERowModel,
)

__all__ = ["app", "create_app", "build_config"]


def build_config(request: ExperimentRequest):
    """Resolve a request into a validated ScenarioConfig."""
    if request.preset is not None:
        cfg = preset(request.preset, scale=request.scale,
                     realization_scale=request.realization_scale)
    else:
        cfg = config_from_items({})
    if request.overrides:
        items = config_to_items(cfg)
        unknown = sorted(set(request.overrides) - set(items))
        if unknown:
            raise ValueError(f"unknown config keys: {unknown}")
        items.update(request.overrides)
        cfg = config_from_items(items)
    cfg.validate()
    return cfg


def _report_to_response(report: SEReport) -> ExperimentResponse:
    return ExperimentResponse(
        config=report.config_items,
        rows=[
            SERowModel(
                scheme=r.scheme, bound=r.bound, ue_index=r.ue_index,
                se_bits_per_hz=r.se_bits_per_hz, stderr=r.stderr,
            )
            for r in report.rows
        ],
        flops=[
            FlopsModel(scheme=s, combining_flops=e.combining_flops,
                       precompute_flops=e.precompute_flops)
            for s, e in report.flops.items()
        ],
        location_means={
            f"{scheme}/{bound}": means
            for (scheme, bound), means in report.location_means.items()
        },
    )


class _JobStore:
    def __init__(self):
        self._lock = threading.Lock()
        self._jobs: dict[str, JobInfo] = {}

    def create(self) -> str:
        job_id = uuid.uuid4().hex
        with self._lock:
            self._jobs[job_id] = JobInfo(job_id=job_id, state="running")
        return job_id

    def finish(self, job_id: str, result: ExperimentResponse) -> None:
        with self._lock:
            self._jobs[job_id] = JobInfo(job_id=job_id, state="done", result=result)

    def fail(self, job_id: str, error: str) -> None:
        with self._lock:
            self._jobs[job_id] = JobInfo(job_id=job_id, state="failed", error=error)

    def get(self, job_id: str) -> JobInfo | None:
        with self._lock:
            return self._jobs.get(job_id)


def create_app() -> FastAPI:
    api = FastAPI(title="cfxl", description="Near-field cell-free XL-MIMO SE simulator")
    jobs = _JobStore()

    @api.get("/health")
    def health():
        return {"status": "ok"}

    @api.get("/presets")
    def list_presets():
        return {"presets": list(PRESET_NAMES)}

    @api.get("/presets/{name}", response_model=PresetResponse)
    def get_preset(name: str, scale: float = 1.0, realization_scale: float = 1.0):
        try:
            cfg = preset(name, scale=scale, realization_scale=realization_scale)
        except ValueError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        return PresetResponse(name=name, config=config_to_items(cfg))

    @api.post("/experiments/run", response_model=ExperimentResponse)
    def run_sync(request: ExperimentRequest):
        try:
            cfg = build_config(request)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return _report_to_response(run_experiment(cfg))

    @api.post("/experiments", response_model=JobInfo)
    def run_async(request: ExperimentRequest):
        try:
            cfg = build_config(request)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        job_id = jobs.create()

        def work():
            try:
                jobs.finish(job_id, _report_to_response(run_experiment(cfg)))
            except Exception as exc:  # surface the failure through the job state
                jobs.fail(job_id, f"{type(exc).__name__}: {exc}")

        threading.Thread(target=work, daemon=True).start()
        return jobs.get(job_id)

    @api.get("/experiments/{job_id}", response_model=JobInfo)
    def job_status(job_id: str):
        info = jobs.get(job_id)
        if info is None:
            raise HTTPException(status_code=404, detail=f"unknown job {job_id}")
        return info

    @api.post("/complexity", response_model=ComplexityResponse)
    def complexity(request: ComplexityRequest):
        try:
            est = complexity_estimate(
                request.scheme, request.m_bs, request.n_antennas,
                request.k_ue, request.n_realizations, request.n_iter,
            )
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return ComplexityResponse(
            scheme=est.scheme, combining_flops=est.combining_flops,
            precompute_flops=est.precompute_flops, total_flops=est.total_flops,
        )

    return api


app = create_app()
