"""Pydantic request/response models for the experiment service."""
from __future__ import annotations

from typing import Any, Optional

from pydantic import BaseModel, Field


class ExperimentRequest(BaseModel):
    """A raw config tree, or a preset name with optional overrides."""

    config: dict[str, Any] = Field(default_factory=dict)
    preset: Optional[str] = None
    output_dir: Optional[str] = None

    def merged_config(self) -> dict[str, Any]:
        tree = dict(self.config)
        if self.preset:
            tree["preset"] = self.preset
        return tree


class RunResponse(BaseModel):
    output_dir: str
    config: dict[str, Any]
    seed: int
    summaries: dict[str, Any]


class SweepResponse(BaseModel):
    output_dir: str
    config: dict[str, Any]
    strategy: str
    param: str
    censored_at: int
    cells: list[dict[str, Any]]


class AlignResponse(BaseModel):
    output_dir: str
    report: dict[str, Any]


class PresetInfo(BaseModel):
    name: str
    config: dict[str, Any]


class HealthResponse(BaseModel):
    status: str = "ok"
    version: str
