from __future__ import annotations

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class SeriesPoint(BaseModel):
    """One (x, y) sample; x is temperature (K), time (ms) or frequency (MHz) depending on context."""

    model_config = ConfigDict(frozen=True)

    x: float
    y: float
    sigma_y: float | None = Field(default=None, gt=0)


def points_to_arrays(points: list[SeriesPoint]) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    x = np.array([p.x for p in points], dtype=float)
    y = np.array([p.y for p in points], dtype=float)
    if points and all(p.sigma_y is not None for p in points):
        sigma = np.array([p.sigma_y for p in points], dtype=float)
    else:
        sigma = None
    return x, y, sigma


def series(xs, ys, sigmas=None) -> list[SeriesPoint]:
    if sigmas is None:
        return [SeriesPoint(x=float(x), y=float(y)) for x, y in zip(xs, ys)]
    return [SeriesPoint(x=float(x), y=float(y), sigma_y=float(s)) for x, y, s in zip(xs, ys, sigmas)]


class FitResult(BaseModel):
    """
    Outcome of a damped least-squares fit.

    covariance is ordered like `params`; sigmas are sqrt of its diagonal.
    """

    params: dict[str, float]
    sigmas: dict[str, float]
    residual_norm: float = Field(..., description="sqrt(sum(((y - model)/sigma)^2))")
    covariance: list[list[float]]
    iterations: int
    converged: bool
    dof: int = 0
    fixed: dict[str, float] = Field(default_factory=dict, description="Parameters held constant.")
    history: list[float] = Field(default_factory=list, description="Residual norm of every accepted iterate.")
    warnings: list[str] = Field(default_factory=list)

    def value(self, name: str) -> float:
        if name in self.params:
            return self.params[name]
        return self.fixed[name]

    def sigma(self, name: str) -> float:
        return self.sigmas.get(name, 0.0)

    def covariance_matrix(self) -> np.ndarray:
        return np.asarray(self.covariance, dtype=float)

    def all_values(self) -> dict[str, float]:
        return {**self.fixed, **self.params}


class ThermalModelParams(BaseModel):
    """Single effective phonon mode: nu(T) = nu0 + c_nu * (n(homega, T) + 1/2)."""

    model_config = ConfigDict(frozen=True)

    nu0: float = Field(..., description="MHz")
    c_nu: float = Field(..., description="MHz")
    homega: float = Field(..., gt=0, description="meV")

    @property
    def zero_kelvin_value(self) -> float:
        return self.nu0 + 0.5 * self.c_nu


class RelaxationMode(BaseModel):
    model_config = ConfigDict(frozen=True)

    a: float = Field(..., ge=0, description="Rate coefficient, 1/ms")
    homega: float = Field(..., gt=0, description="meV")


class RelaxationParams(BaseModel):
    """Gamma(T) = sum_i a_i n_i (n_i + 1) + a_s, in 1/ms."""

    model_config = ConfigDict(frozen=True)

    modes: tuple[RelaxationMode, ...]
    a_s: float = Field(..., ge=0, description="Temperature-independent rate, 1/ms")

    @model_validator(mode="after")
    def _check(self) -> "RelaxationParams":
        if not self.modes:
            raise ValueError("at least one relaxation mode is required")
        return self
