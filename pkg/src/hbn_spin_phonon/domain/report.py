from __future__ import annotations

from typing import Any

from pydantic import BaseModel, Field

from .fits import RelaxationParams, SeriesPoint, ThermalModelParams

AGGREGATE_LABEL = "aggregate"

FIT_COLUMNS = [
    "dataset",
    "temperature_k",
    "d_mhz",
    "d_sigma_mhz",
    "a_zz_mhz",
    "a_zz_sigma_mhz",
    "contrast",
    "linewidth_mhz",
    "t1_ms",
    "t1_sigma_ms",
    "converged",
]
MODEL_COLUMNS = ["dataset", "model", "parameter", "value", "sigma"]


class FitRow(BaseModel):
    """One temperature of one dataset: ODMR and T1 results side by side (None when absent)."""

    dataset: str
    temperature_k: float
    d_mhz: float | None = None
    d_sigma_mhz: float | None = None
    a_zz_mhz: float | None = None
    a_zz_sigma_mhz: float | None = None
    contrast: float | None = None
    linewidth_mhz: float | None = None
    t1_ms: float | None = None
    t1_sigma_ms: float | None = None
    converged: bool = True


class ModelRow(BaseModel):
    dataset: str
    model: str = Field(..., description="zfs_thermal | azz_thermal | susceptibility | relaxation | sensitivity")
    parameter: str
    value: float
    sigma: float | None = None


class StageOutcome(BaseModel):
    name: str
    ok: bool
    message: str = ""
    skipped: bool = False


class DatasetReport(BaseModel):
    label: str
    rows: list[FitRow] = Field(default_factory=list)
    models: list[ModelRow] = Field(default_factory=list)
    stages: list[StageOutcome] = Field(default_factory=list)
    warnings: list[str] = Field(default_factory=list)

    # fitted curves with their data, for the human report and plots
    thermal: dict[str, ThermalModelParams] = Field(default_factory=dict)
    relaxation: RelaxationParams | None = None
    series: dict[str, list[SeriesPoint]] = Field(default_factory=dict)

    def stage(self, name: str) -> StageOutcome | None:
        for s in self.stages:
            if s.name == name:
                return s
        return None

    def model_value(self, model: str, parameter: str) -> float | None:
        for m in self.models:
            if m.model == model and m.parameter == parameter:
                return m.value
        return None


class RunReport(BaseModel):
    config: dict[str, Any] = Field(default_factory=dict)
    seed: int = 0
    datasets: list[DatasetReport] = Field(default_factory=list)
    aggregates: list[ModelRow] = Field(default_factory=list)

    @property
    def fit_rows(self) -> list[FitRow]:
        return [row for ds in self.datasets for row in ds.rows]

    @property
    def model_rows(self) -> list[ModelRow]:
        return [m for ds in self.datasets for m in ds.models] + list(self.aggregates)

    @property
    def has_fit_failures(self) -> bool:
        return any(not row.converged for row in self.fit_rows) or any(
            not s.ok for ds in self.datasets for s in ds.stages
        )
