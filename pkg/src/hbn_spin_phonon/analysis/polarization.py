from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.optimize import minimize_scalar
from scipy.special import comb

from hbn_spin_phonon.constants import CONSTANTS, PhysicalConstants
from hbn_spin_phonon.domain.spectrum import OdmrSpectrum
from hbn_spin_phonon.domain.spin import Branch, HyperfineTensor, Isotope
from hbn_spin_phonon.errors import DataError

logger = logging.getLogger(__name__)

N_NUCLEI = 3


class Ordering(str, Enum):
    ascending_mI = "ascending_mI"
    descending_mI = "descending_mI"


class PolarizationState(BaseModel):
    """Independent-nuclei (binomial) state; weights[k] is P(X = k up spins), sum m_I = k - 3/2."""

    model_config = ConfigDict(frozen=True)

    p_up: float = Field(..., ge=0, le=1)
    weights: tuple[float, float, float, float]

    @model_validator(mode="after")
    def _check(self) -> "PolarizationState":
        if abs(sum(self.weights) - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1")
        return self

    @classmethod
    def from_p(cls, p: float) -> "PolarizationState":
        return cls(p_up=p, weights=tuple(binomial_weights(p)))


@dataclass(frozen=True)
class FlipFlopCoeffs:
    a1: float
    a2: complex

    @property
    def leakage(self) -> float | None:
        """|a2|/|a1|, the weight of the term that connects the other two states; None when a1 = 0."""
        if self.a1 == 0:
            return None
        return abs(self.a2) / abs(self.a1)


def binomial_weights(p: float) -> np.ndarray:
    if not 0.0 <= p <= 1.0:
        raise DataError(f"polarization probability must lie in [0, 1], got {p}")
    k = np.arange(N_NUCLEI + 1)
    return comb(N_NUCLEI, k) * p**k * (1.0 - p) ** (N_NUCLEI - k)


@dataclass(frozen=True)
class PolarizationFit:
    p: float
    residual: float


def extract_polarization(
    amplitudes,
    ordering: Ordering | str = Ordering.ascending_mI,
    *,
    xtol: float = 1e-12,
) -> PolarizationFit:
    """
    One-parameter least-squares p from four hyperfine peak amplitudes.

    Amplitudes are normalized to sum 1 and put into ascending-m_I order (descending_mI
    reverses them, e.g. the 0<->+1 branch of 15N where the lowest line is X = 3). A grid
    scan on [0, 1] brackets the global minimum, a bounded Brent search refines it.
    """
    amps = np.asarray(amplitudes, dtype=float)
    if amps.shape != (N_NUCLEI + 1,):
        raise DataError(f"expected {N_NUCLEI + 1} amplitudes, got shape {amps.shape}")
    if np.any(amps < 0):
        raise DataError("amplitudes must be nonnegative")
    total = amps.sum()
    if total <= 0:
        raise DataError("amplitudes are all zero")
    target = amps / total
    if Ordering(ordering) is Ordering.descending_mI:
        target = target[::-1]

    def _sse(p: float) -> float:
        return float(np.sum((binomial_weights(p) - target) ** 2))

    grid = np.linspace(0.0, 1.0, 1001)
    sse = np.array([_sse(p) for p in grid])
    k = int(np.argmin(sse))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
    res = minimize_scalar(_sse, bounds=(lo, hi), method="bounded", options={"xatol": xtol})

    best_p, best_sse = float(res.x), float(res.fun)
    for edge in (lo, hi):
        if _sse(edge) < best_sse:
            best_p, best_sse = float(edge), _sse(edge)
    return PolarizationFit(p=best_p, residual=best_sse)


def branch_ordering(branch: Branch | str) -> Ordering:
    """
    Frequency order of the 15N lines per branch (A_zz < 0): the 0<->-1 lines rise with
    sum m_I, the 0<->+1 lines fall (lowest-frequency line is X = 3).
    """
    return Ordering.ascending_mI if Branch(branch) is Branch.minus else Ordering.descending_mI


def polarized_amplitude_model(p: float, branch: Branch | str) -> np.ndarray:
    """Binomial weights laid out in ascending line frequency for the given branch."""
    w = binomial_weights(p)
    if branch_ordering(branch) is Ordering.descending_mI:
        return w[::-1].copy()
    return w


def flip_flop_coefficients(tensor: HyperfineTensor) -> FlipFlopCoeffs:
    """A1 = (Axx + Ayy)/4, A2 = (Axx - Ayy)/4 + Axy/(2i)."""
    a1 = 0.25 * (tensor.a_xx + tensor.a_yy)
    a2 = complex(0.25 * (tensor.a_xx - tensor.a_yy), 0.0) + tensor.a_xy / 2j
    return FlipFlopCoeffs(a1=a1, a2=a2)


def eslac_field(excited_zfs: float, *, constants: PhysicalConstants = CONSTANTS) -> float:
    """Field (G) at which gamma_e B cancels the excited-state splitting."""
    if excited_zfs <= 0:
        raise DataError(f"excited-state zfs must be > 0, got {excited_zfs}")
    return excited_zfs / constants.gamma_e


@dataclass(frozen=True)
class PolarizationPoint:
    label: str
    p: float
    residual: float
    amplitudes: tuple[float, ...]


def polarization_series(
    spectra: list[OdmrSpectrum],
    branch: Branch | str = Branch.plus,
) -> list[PolarizationPoint]:
    """
    Free-amplitude fit of each 15N spectrum (e.g. a laser-power sweep), then p from the
    four fitted amplitudes of `branch`. Labels come from metadata["label"], else the temperature.
    """
    # fitting.odmr imports the analysis package
    from hbn_spin_phonon.fitting.odmr import AmplitudeMode, fit_odmr

    branch = Branch(branch)
    ordering = branch_ordering(branch)
    out: list[PolarizationPoint] = []
    for i, spectrum in enumerate(spectra):
        label = str(spectrum.metadata.get("label", spectrum.temperature if spectrum.temperature is not None else i))
        fit = fit_odmr(spectrum, Isotope.N15, AmplitudeMode.free)
        if branch not in fit.branches:
            raise DataError(f"spectrum {label}: branch {branch.value} not present in the fit")
        amps = fit.model.amplitudes[0 if branch is Branch.minus else 1]
        result = extract_polarization(amps, ordering)
        logger.info("polarization %s: p=%.4f (residual %.3g)", label, result.p, result.residual)
        out.append(PolarizationPoint(label=label, p=result.p, residual=result.residual, amplitudes=tuple(amps)))
    return out
