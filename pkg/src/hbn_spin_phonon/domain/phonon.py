from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field, model_validator


class PhononMode(BaseModel):
    model_config = ConfigDict(frozen=True)

    index: int
    energy: float = Field(..., gt=0, description="meV")
    curvature_coeff: float = Field(
        ..., description="c_i = 1/2 * d2nu/dq2 * hbar/(M omega), MHz (precombined)."
    )


class PhononModeTable(BaseModel):
    """
    Non-trivial phonon modes feeding the second-order shift sum.

    nu0_override, when given, replaces the constant nu0_ref with a tabulated
    (temperature_k, nu0_mhz) curve (lattice-expansion hook), linearly interpolated.
    """

    model_config = ConfigDict(frozen=True)

    modes: tuple[PhononMode, ...]
    nu0_ref: float = Field(default=0.0, description="MHz")
    source_label: str = ""
    nu0_override: tuple[tuple[float, float], ...] | None = None

    @model_validator(mode="after")
    def _check(self) -> "PhononModeTable":
        if not self.modes:
            raise ValueError("phonon mode table is empty")
        indices = [m.index for m in self.modes]
        if len(set(indices)) != len(indices):
            raise ValueError("phonon mode indices must be unique")
        if self.nu0_override is not None:
            temps = [t for t, _ in self.nu0_override]
            if len(temps) < 2 or any(b <= a for a, b in zip(temps, temps[1:])):
                raise ValueError("nu0_override needs >= 2 rows with strictly increasing temperature")
        return self
