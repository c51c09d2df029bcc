from __future__ import annotations

from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

# Minimum number of samples a spectrum needs before it can be fitted.
MIN_FIT_SAMPLES = 8


class LorentzianPeak(BaseModel):
    """Peak-normalized Lorentzian dip: `amplitude` is the contrast at the center."""

    model_config = ConfigDict(frozen=True)

    center: float = Field(..., description="MHz")
    fwhm: float = Field(..., gt=0, description="MHz")
    amplitude: float = Field(..., ge=0, description="Dip depth (positive contrast).")


class OdmrModelParams(BaseModel):
    """
    Two groups of equally spaced Lorentzians (one per branch).

    Line k of a branch (k = 0..N-1, ascending frequency) sits at
    f_g + (k - (N-1)/2) * hyperfine_splitting and uses amplitudes[g][k].
    A branch whose amplitudes are all zero is inactive (single-branch fits).
    """

    model_config = ConfigDict(frozen=True)

    branch_centers: tuple[float, float]
    hyperfine_splitting: float = Field(..., gt=0)
    widths: tuple[float, float]
    amplitudes: tuple[tuple[float, ...], tuple[float, ...]]
    line_count: int = 4

    @model_validator(mode="after")
    def _check(self) -> "OdmrModelParams":
        if self.line_count not in (4, 7):
            raise ValueError(f"line_count must be 4 or 7, got {self.line_count}")
        f_minus, f_plus = self.branch_centers
        if not f_minus < f_plus:
            raise ValueError(f"branch centers must satisfy f_minus < f_plus, got {self.branch_centers}")
        if min(self.widths) <= 0:
            raise ValueError(f"widths must be > 0, got {self.widths}")
        for amps in self.amplitudes:
            if len(amps) != self.line_count:
                raise ValueError(f"expected {self.line_count} amplitudes per branch, got {len(amps)}")
            if min(amps) < 0:
                raise ValueError("amplitudes must be >= 0")
        return self

    @property
    def zfs(self) -> float:
        return 0.5 * (self.branch_centers[0] + self.branch_centers[1])

    def line_positions(self, branch_index: int) -> np.ndarray:
        n = self.line_count
        k = np.arange(n, dtype=float)
        return self.branch_centers[branch_index] + (k - (n - 1) / 2.0) * self.hyperfine_splitting

    def peaks(self) -> list[LorentzianPeak]:
        out: list[LorentzianPeak] = []
        for g in (0, 1):
            for center, amp in zip(self.line_positions(g), self.amplitudes[g]):
                out.append(LorentzianPeak(center=float(center), fwhm=self.widths[g], amplitude=float(amp)))
        return out

    def active_branches(self) -> list[int]:
        return [g for g in (0, 1) if max(self.amplitudes[g]) > 0]

    def max_amplitude(self) -> float:
        return max(max(a) for a in self.amplitudes)

    def scaled(self, factor: float) -> "OdmrModelParams":
        amps = tuple(tuple(a * factor for a in branch) for branch in self.amplitudes)
        return self.model_copy(update={"amplitudes": amps})


class OdmrSpectrum(BaseModel):
    """
    Sampled ODMR contrast (positive dip depth) vs microwave frequency.

    Stored column-wise; `samples` gives the (frequency, contrast) pairs.
    """

    model_config = ConfigDict(frozen=True)

    frequency: tuple[float, ...] = Field(..., description="MHz, strictly increasing")
    contrast: tuple[float, ...]
    temperature: float | None = Field(default=None, description="K")
    field: float | None = Field(default=None, description="Gauss")
    metadata: dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check(self) -> "OdmrSpectrum":
        if len(self.frequency) != len(self.contrast):
            raise ValueError("frequency and contrast must have the same length")
        if not self.frequency:
            raise ValueError("spectrum has no samples")
        f = np.asarray(self.frequency)
        if f.size > 1 and not np.all(np.diff(f) > 0):
            raise ValueError("frequencies must be strictly increasing")
        return self

    @classmethod
    def from_arrays(cls, frequency, contrast, **kwargs: Any) -> "OdmrSpectrum":
        return cls(
            frequency=tuple(float(x) for x in np.asarray(frequency).ravel()),
            contrast=tuple(float(x) for x in np.asarray(contrast).ravel()),
            **kwargs,
        )

    @property
    def samples(self) -> list[tuple[float, float]]:
        return list(zip(self.frequency, self.contrast))

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.frequency, dtype=float), np.asarray(self.contrast, dtype=float)

    def __len__(self) -> int:
        return len(self.frequency)
