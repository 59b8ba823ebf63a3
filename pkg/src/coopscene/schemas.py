"""Pydantic request/response models for the HTTP service."""
from __future__ import annotations

from pydantic import BaseModel, Field


class QueryRequest(BaseModel):
    question: str
    ego_id: str | None = None
    scene_id: int | None = None


class NumericResultModel(BaseModel):
    task: int
    values: list | int
    matched_ids: list[str]


class QueryParamsModel(BaseModel):
    vtype: str | None = None
    color: str | None = None
    relation: str = "surrounding"
    road: str | None = None


class QueryResponse(BaseModel):
    task: int
    task_name: str
    params: QueryParamsModel
    numeric: NumericResultModel
    semantic: str
    advice: str
    answer: str
    timings_ms: dict[str, float]
    scene_id: int
    ego_id: str


class HealthResponse(BaseModel):
    status: str
    scenes_built: int
    sim_time: float


class ConfigResponse(BaseModel):
    listen: str
    backend: str
    tick_hz: float
    scene_hz: float
    queue_capacity: int
    vehicle_count: int
    av_count: int
    prefix_on: bool
    rule_on: bool


class ErrorResponse(BaseModel):
    detail: str
    stage: str | None = Field(default=None, description="failed pipeline stage, when applicable")
