from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
from scipy import constants as sc

from hbn_spin_phonon.constants import CONSTANTS, PhysicalConstants
from hbn_spin_phonon.domain.phonon import PhononMode, PhononModeTable
from hbn_spin_phonon.errors import DataError


def bose_occupation(energy, t, *, constants: PhysicalConstants = CONSTANTS):
    """
    n = 1/(exp(E / k_B T) - 1); energy in meV, t in K. n -> 0 as t -> 0.
    Accepts scalars or arrays (broadcast).
    """
    e = np.asarray(energy, dtype=float)
    temp = np.asarray(t, dtype=float)
    if np.any(e <= 0):
        raise DataError("phonon energy must be > 0")
    if np.any(temp < 0):
        raise DataError("temperature must be >= 0")
    with np.errstate(divide="ignore", over="ignore"):
        x = np.where(temp > 0, e / (constants.k_b * np.where(temp > 0, temp, 1.0)), np.inf)
        n = 1.0 / np.expm1(x)
    n = np.where(np.isfinite(x), n, 0.0)
    return float(n) if np.ndim(n) == 0 else n


def bose_occupation_derivative_energy(energy, t, *, constants: PhysicalConstants = CONSTANTS):
    """dn/dE (per meV) = -n(n+1) / (k_B T)."""
    n = np.asarray(bose_occupation(energy, t, constants=constants))
    temp = np.asarray(t, dtype=float)
    kt = constants.k_b * np.where(temp > 0, temp, 1.0)
    out = np.where(temp > 0, -n * (n + 1.0) / kt, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def _nu0_at(table: PhononModeTable, t) -> np.ndarray:
    if table.nu0_override is None:
        return np.full(np.shape(t), table.nu0_ref, dtype=float)
    temps = np.array([row[0] for row in table.nu0_override])
    values = np.array([row[1] for row in table.nu0_override])
    return np.interp(t, temps, values)


def evaluate_mode_sum(table: PhononModeTable, t, *, constants: PhysicalConstants = CONSTANTS):
    """nu(T) = nu0 + sum_i c_i (n_i(T) + 1/2), pairwise-summed over modes (numpy order)."""
    temps = np.atleast_1d(np.asarray(t, dtype=float))
    energies = np.array([m.energy for m in table.modes])
    coeffs = np.array([m.curvature_coeff for m in table.modes])
    occ = bose_occupation(energies[None, :], temps[:, None], constants=constants)
    shift = np.sum(coeffs[None, :] * (np.asarray(occ) + 0.5), axis=1)
    out = _nu0_at(table, temps) + shift
    return float(out[0]) if np.ndim(t) == 0 else out


@dataclass(frozen=True)
class ModeContribution:
    mode: PhononMode
    shift_mhz: float


def mode_contributions(
    table: PhononModeTable, t: float, *, constants: PhysicalConstants = CONSTANTS
) -> list[ModeContribution]:
    """Per-mode c_i (n_i + 1/2) at temperature t, largest |shift| first."""
    out = [
        ModeContribution(
            mode=m,
            shift_mhz=m.curvature_coeff * (bose_occupation(m.energy, t, constants=constants) + 0.5),
        )
        for m in table.modes
    ]
    out.sort(key=lambda c: (-abs(c.shift_mhz), c.mode.energy))
    return out


def dominant_mode(table: PhononModeTable) -> PhononMode:
    """Mode with the largest |c_i|; ties go to the lowest energy."""
    if not table.modes:
        raise DataError("phonon mode table is empty")
    return min(table.modes, key=lambda m: (-abs(m.curvature_coeff), m.energy))


def curvature_from_samples(nu_minus: float, nu_zero: float, nu_plus: float, delta_q: float) -> float:
    """Central second difference (nu(+dq) - 2 nu(0) + nu(-dq)) / dq^2."""
    if delta_q <= 0:
        raise DataError(f"displacement step must be > 0, got {delta_q}")
    return (nu_plus - 2.0 * nu_zero + nu_minus) / delta_q**2


def combine_curvature(d2nu_mhz_per_a2: float, energy_mev: float, mass_amu: float) -> float:
    """
    c = 1/2 * d2nu/dq2 * hbar/(M omega), with hbar/(M omega) = hbar^2/(M E) converted to A^2.
    """
    if energy_mev <= 0 or mass_amu <= 0:
        raise DataError("energy and mass must be > 0")
    energy_j = energy_mev * 1e-3 * sc.e
    mass_kg = mass_amu * sc.physical_constants["atomic mass constant"][0]
    zero_point_a2 = sc.hbar**2 / (mass_kg * energy_j) * 1e20
    return 0.5 * d2nu_mhz_per_a2 * zero_point_a2


def raman_dominance_ratio(zfs_mhz: float, phonon_mev: float, *, constants: PhysicalConstants = CONSTANTS) -> float:
    """
    (2 pi D / omega)^2 with D in Hz and omega = E/h in Hz: first- vs second-order
    driven Raman weight. << 1 means second-order spin-phonon coupling dominates.
    """
    if zfs_mhz <= 0 or phonon_mev <= 0:
        raise DataError("zfs and phonon energy must be > 0")
    phonon_mhz = phonon_mev * constants.mev_to_mhz
    return (2.0 * np.pi * zfs_mhz / phonon_mhz) ** 2


_COMBINED_COLUMNS = ("index", "energy_mev", "curvature_mhz")
_RAW_COLUMNS = ("index", "energy_mev", "d2nu_mhz_per_A2", "mass_amu")


def load_mode_table(
    path: str | Path,
    *,
    nu0_ref: float = 0.0,
    nu0_override_path: str | Path | None = None,
) -> PhononModeTable:
    """
    Read a delimiter-separated mode table (delimiter sniffed). Accepts either
    `index, energy_mev, curvature_mhz` or `index, energy_mev, d2nu_mhz_per_A2, mass_amu`.
    """
    path = Path(path)
    try:
        df = pd.read_csv(path, sep=None, engine="python", skipinitialspace=True)
    except pd.errors.EmptyDataError as e:
        raise DataError(f"{path}: empty file") from e
    df.columns = [str(c).strip() for c in df.columns]
    if df.empty:
        raise DataError(f"{path}: empty dataset")

    if set(_COMBINED_COLUMNS) <= set(df.columns):
        form = "combined"
        needed = _COMBINED_COLUMNS
    elif set(_RAW_COLUMNS) <= set(df.columns):
        form = "raw"
        needed = _RAW_COLUMNS
    else:
        raise DataError(
            f"{path}: missing columns; expected {', '.join(_COMBINED_COLUMNS)} or {', '.join(_RAW_COLUMNS)}"
        )

    numeric = df[list(needed)].apply(pd.to_numeric, errors="coerce")
    bad = numeric.isna().any(axis=1)
    if bad.any():
        lines = ", ".join(str(i + 2) for i in numeric.index[bad])
        raise DataError(f"{path}: non-numeric cells on line(s) {lines}")
    nonpositive = numeric["energy_mev"] <= 0
    if nonpositive.any():
        lines = ", ".join(str(i + 2) for i in numeric.index[nonpositive])
        raise DataError(f"{path}: zero/negative mode energy on line(s) {lines} (translational modes must be excluded)")

    modes: list[PhononMode] = []
    for rec in numeric.to_dict("records"):
        if form == "combined":
            coeff = float(rec["curvature_mhz"])
        else:
            coeff = combine_curvature(float(rec["d2nu_mhz_per_A2"]), float(rec["energy_mev"]), float(rec["mass_amu"]))
        modes.append(PhononMode(index=int(rec["index"]), energy=float(rec["energy_mev"]), curvature_coeff=coeff))

    override = None
    if nu0_override_path is not None:
        odf = pd.read_csv(nu0_override_path, sep=None, engine="python", skipinitialspace=True)
        odf.columns = [str(c).strip() for c in odf.columns]
        if not {"temperature_k", "nu0_mhz"} <= set(odf.columns):
            raise DataError(f"{nu0_override_path}: expected columns temperature_k, nu0_mhz")
        odf = odf.sort_values("temperature_k")
        override = tuple((float(a), float(b)) for a, b in zip(odf["temperature_k"], odf["nu0_mhz"]))

    try:
        return PhononModeTable(modes=tuple(modes), nu0_ref=nu0_ref, source_label=str(path), nu0_override=override)
    except ValueError as e:
        raise DataError(f"{path}: {e}") from e
