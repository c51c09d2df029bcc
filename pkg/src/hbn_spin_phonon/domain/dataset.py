from __future__ import annotations

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from hbn_spin_phonon.domain.spectrum import OdmrSpectrum


class RelaxationTrace(BaseModel):
    """Signal vs delay time (ms) at one temperature."""

    model_config = ConfigDict(frozen=True)

    temperature: float = Field(..., description="K")
    time_ms: tuple[float, ...]
    signal: tuple[float, ...]

    @model_validator(mode="after")
    def _check(self) -> "RelaxationTrace":
        if len(self.time_ms) != len(self.signal):
            raise ValueError("time and signal must have the same length")
        t = np.asarray(self.time_ms)
        if t.size and (t.min() < 0 or np.any(np.diff(t) <= 0)):
            raise ValueError("times must be nonnegative and strictly increasing")
        return self

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.time_ms, dtype=float), np.asarray(self.signal, dtype=float)


class Dataset(BaseModel):
    """
    One measurement set (e.g. one spatial spot, S1..S8 style).
    """

    label: str
    spectra: list[OdmrSpectrum] = Field(default_factory=list)
    traces: list[RelaxationTrace] = Field(default_factory=list)
    provenance: list[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check(self) -> "Dataset":
        temps = [s.temperature for s in self.spectra]
        if any(t is None for t in temps):
            raise ValueError(f"dataset {self.label}: every spectrum needs a temperature")
        if len(set(temps)) != len(temps):
            raise ValueError(f"dataset {self.label}: duplicate spectrum temperatures")
        trace_temps = [t.temperature for t in self.traces]
        if len(set(trace_temps)) != len(trace_temps):
            raise ValueError(f"dataset {self.label}: duplicate trace temperatures")
        return self

    def is_empty(self) -> bool:
        return not self.spectra and not self.traces
