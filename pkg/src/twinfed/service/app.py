"""FastAPI service wrapping the experiment runner."""
from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..config import PRESETS
from ..errors import ConfigError, IngestionError, InvalidInputError, NumericError
from ..runner import run_align, run_bundle, run_sweep
from .models import (
    AlignResponse,
    ExperimentRequest,
    HealthResponse,
    PresetInfo,
    RunResponse,
    SweepResponse,
)


def _translate(exc: Exception) -> HTTPException:
    if isinstance(exc, (ConfigError, IngestionError, InvalidInputError)):
        return HTTPException(status_code=422, detail=str(exc))
    if isinstance(exc, NumericError):
        return HTTPException(status_code=500, detail=f"numeric failure: {exc}")
    raise exc


def create_app() -> FastAPI:
    app = FastAPI(title="twinfed", version=__version__)

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(version=__version__)

    @app.get("/presets", response_model=list[PresetInfo])
    def presets():
        return [PresetInfo(name=k, config=v) for k, v in PRESETS.items()]

    @app.post("/experiments/run", response_model=RunResponse)
    def run(req: ExperimentRequest):
        try:
            return RunResponse(**run_bundle(req.merged_config(), req.output_dir))
        except Exception as exc:  # noqa: BLE001 - translated to HTTP errors
            raise _translate(exc)

    @app.post("/experiments/sweep", response_model=SweepResponse)
    def sweep(req: ExperimentRequest):
        try:
            return SweepResponse(**run_sweep(req.merged_config(), req.output_dir))
        except Exception as exc:  # noqa: BLE001
            raise _translate(exc)

    @app.post("/alignment", response_model=AlignResponse)
    def align(req: ExperimentRequest):
        try:
            return AlignResponse(**run_align(req.merged_config(), req.output_dir))
        except Exception as exc:  # noqa: BLE001
            raise _translate(exc)

    return app


app = create_app()
