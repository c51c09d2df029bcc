from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field


class PhysicalConstants(BaseModel):
    """
    Unit conventions used across the toolkit.

    Hamiltonian entries and line positions are in MHz (frequency units, the 2π is
    absorbed), fields in Gauss, phonon energies in meV, temperatures in K.
    """

    model_config = ConfigDict(frozen=True)

    gamma_e: float = Field(default=2.8, gt=0, description="Electron gyromagnetic ratio, MHz/G.")
    k_b: float = Field(default=0.0861733, gt=0, description="Boltzmann constant, meV/K.")
    mev_to_mhz: float = Field(default=241798.93, gt=0, description="1 meV expressed as a frequency, MHz.")

    # Nuclear gyromagnetic ratio magnitudes (MHz/G). Sign is applied per isotope.
    gamma_n15: float = Field(default=4.316e-4, gt=0, description="|gamma| of 15N, MHz/G.")
    gamma_n14: float = Field(default=3.077e-4, gt=0, description="|gamma| of 14N, MHz/G.")

    @property
    def gamma_e_hz_per_gauss(self) -> float:
        return self.gamma_e * 1e6


CONSTANTS = PhysicalConstants()
