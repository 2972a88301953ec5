"""Request/response models for the experiment service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class StudyRequest(BaseModel):
    """Config text plus optional overrides mirroring the CLI flags."""

    config_text: str
    seed: int | None = Field(default=None, ge=0)
    particles: int | None = Field(default=None, ge=1)
    steps: int | None = Field(default=None, ge=1)
    workers: int | None = Field(default=None, ge=1)


class RowModel(BaseModel):
    sweep_param: str
    sup_coupled_err: float
    sup_coupled_err_se: float
    sup_rho_upper: float | None
    slope_fit: float | None
    criterion: str
    passed: bool


class CriterionModel(BaseModel):
    name: str
    passed: bool
    detail: str = ""


class StudyResponse(BaseModel):
    study: str
    seed: int
    passed: bool
    rows: list[RowModel]
    criteria: list[CriterionModel]
    csv_text: str


class SimulateResponse(BaseModel):
    seed: int
    final_moment2: float
    sup_moment2: float
    csv_text: str


class ValidateResponse(BaseModel):
    valid: bool
    study: str | None
    problems: list[str]


class HealthResponse(BaseModel):
    status: str
    version: str
