from __future__ import annotations

import math

from pydantic import BaseModel, ConfigDict, Field

from hbn_spin_phonon.analysis.lineshape import max_abs_derivative, single_lorentzian_max_slope
from hbn_spin_phonon.constants import CONSTANTS, PhysicalConstants
from hbn_spin_phonon.domain.spectrum import OdmrModelParams
from hbn_spin_phonon.errors import DataError


class SensitivityInput(BaseModel):
    """
    Inputs for both sensitivities. Either `max_slope` is given directly or it follows
    from the single-Lorentzian pair (`c_m`, `delta_nu`).
    """

    model_config = ConfigDict(frozen=True)

    photon_rate: float = Field(..., gt=0, description="R, Hz")
    max_slope: float | None = Field(default=None, gt=0, description="max |dC/dnu|, per Hz")
    chi: float | None = Field(default=None, description="MHz/K")
    c_m: float | None = Field(default=None, ge=0)
    delta_nu: float | None = Field(default=None, gt=0, description="FWHM, MHz")

    def slope_per_hz(self) -> float:
        if self.max_slope is not None:
            return self.max_slope
        if self.c_m is not None and self.delta_nu is not None:
            return single_lorentzian_max_slope(self.c_m, self.delta_nu) * 1e-6
        raise DataError("sensitivity needs max_slope, or c_m and delta_nu")


class SensitivityReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    eta_b: float = Field(..., description="G/sqrt(Hz)")
    eta_t: float | None = Field(default=None, description="K/sqrt(Hz); None without a susceptibility")
    slope_per_hz: float
    slope_per_mhz: float
    at_mhz: float
    photon_rate: float
    chi: float | None = None


def eta_b_general(r: float, max_slope: float, *, constants: PhysicalConstants = CONSTANTS) -> float:
    """DC field sensitivity 2 pi / (gamma_e sqrt(R)) / max|dC/dnu|, gamma_e in Hz/G, slope per Hz."""
    if r <= 0 or max_slope <= 0:
        raise DataError(f"photon rate and slope must be > 0 (got r={r}, slope={max_slope})")
    return 2.0 * math.pi / (constants.gamma_e_hz_per_gauss * math.sqrt(r)) / max_slope


def eta_b_lorentzian(c_m: float, delta_nu_mhz: float, r: float, *, constants: PhysicalConstants = CONSTANTS) -> float:
    """Single-Lorentzian closed form 8 pi / (3 sqrt 3) * dnu / (gamma_e C_m sqrt R)."""
    if c_m <= 0 or delta_nu_mhz <= 0 or r <= 0:
        raise DataError("contrast, linewidth and photon rate must be > 0")
    return (
        8.0 * math.pi / (3.0 * math.sqrt(3.0))
        * (delta_nu_mhz * 1e6)
        / (constants.gamma_e_hz_per_gauss * c_m * math.sqrt(r))
    )


def eta_t(chi: float, r: float, max_slope: float) -> float:
    """Thermometry sensitivity 1 / (|chi| sqrt(R) max|dC/dnu|); chi in MHz/K (no 2 pi)."""
    if chi == 0:
        raise DataError("temperature susceptibility must be nonzero")
    if r <= 0 or max_slope <= 0:
        raise DataError(f"photon rate and slope must be > 0 (got r={r}, slope={max_slope})")
    return 1.0 / (abs(chi) * 1e6 * math.sqrt(r) * max_slope)


def evaluate_sensitivity(
    inp: SensitivityInput, *, constants: PhysicalConstants = CONSTANTS
) -> tuple[float, float | None]:
    """(eta_B, eta_T); eta_T is None when no susceptibility is given."""
    slope = inp.slope_per_hz()
    eta_b = eta_b_general(inp.photon_rate, slope, constants=constants)
    return eta_b, (eta_t(inp.chi, inp.photon_rate, slope) if inp.chi is not None else None)


def sensitivity_report(
    fit: OdmrModelParams,
    r: float,
    chi: float | None,
    *,
    constants: PhysicalConstants = CONSTANTS,
) -> SensitivityReport:
    slope = max_abs_derivative(fit)
    if slope.slope_per_mhz <= 0 or slope.at_mhz is None:
        raise DataError("model has zero slope everywhere (all amplitudes zero)")
    eta_b, eta_temp = evaluate_sensitivity(
        SensitivityInput(photon_rate=r, max_slope=slope.slope_per_hz, chi=chi), constants=constants
    )
    return SensitivityReport(
        eta_b=eta_b,
        eta_t=eta_temp,
        slope_per_hz=slope.slope_per_hz,
        slope_per_mhz=slope.slope_per_mhz,
        at_mhz=slope.at_mhz,
        photon_rate=r,
        chi=chi,
    )
