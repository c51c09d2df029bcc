from __future__ import annotations

import logging
from collections.abc import Mapping

import numpy as np

from hbn_spin_phonon.analysis.phonon_sum import bose_occupation
from hbn_spin_phonon.constants import CONSTANTS
from hbn_spin_phonon.domain.fits import FitResult, SeriesPoint, ThermalModelParams, points_to_arrays
from hbn_spin_phonon.errors import DataError
from hbn_spin_phonon.fitting.engine import DEFAULT_OPTIONS, FitOptions, least_squares_fit

logger = logging.getLogger(__name__)

THERMAL_PARAMS = ("nu0", "c_nu", "homega")
MIN_THERMAL_POINTS = 4
MIN_TEMPERATURE_RATIO = 3.0


def _occupation_and_slope(homega: float, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """n(homega, T) and dn/dT (per K)."""
    t = np.asarray(t, dtype=float)
    n = np.asarray(bose_occupation(homega, t))
    safe_t = np.where(t > 0, t, 1.0)
    dn_dt = np.where(t > 0, n * (n + 1.0) * homega / (CONSTANTS.k_b * safe_t**2), 0.0)
    return n, dn_dt


def thermal_model_eval(params: ThermalModelParams, t):
    n = np.asarray(bose_occupation(params.homega, t))
    out = params.nu0 + params.c_nu * (n + 0.5)
    return float(out) if out.ndim == 0 else out


def thermal_model_derivative(params: ThermalModelParams, t):
    """Analytic dnu/dT in MHz/K."""
    _, dn_dt = _occupation_and_slope(params.homega, t)
    out = params.c_nu * dn_dt
    return float(out) if np.ndim(out) == 0 else out


def zero_kelvin_value(params: ThermalModelParams) -> float:
    return params.zero_kelvin_value


def _model(t: np.ndarray, p: Mapping[str, float]) -> np.ndarray:
    if p["homega"] <= 0:
        raise DataError("homega must be > 0")
    n = np.asarray(bose_occupation(p["homega"], t))
    return p["nu0"] + p["c_nu"] * (n + 0.5)


def thermal_jacobian(t: np.ndarray, p: Mapping[str, float]) -> np.ndarray:
    """Columns d/d(nu0, c_nu, homega)."""
    t = np.asarray(t, dtype=float)
    n = np.asarray(bose_occupation(p["homega"], t))
    safe_t = np.where(t > 0, t, 1.0)
    dn_de = np.where(t > 0, -n * (n + 1.0) / (CONSTANTS.k_b * safe_t), 0.0)
    return np.column_stack([np.ones_like(t), n + 0.5, p["c_nu"] * dn_de])


def params_from_result(result: FitResult) -> ThermalModelParams:
    return ThermalModelParams(**{name: result.value(name) for name in THERMAL_PARAMS})


def fit_thermal(
    points: list[SeriesPoint],
    init: ThermalModelParams,
    *,
    fixed: Mapping[str, float] | None = None,
    options: FitOptions = DEFAULT_OPTIONS,
) -> FitResult:
    """
    Fit nu(T) = nu0 + c_nu (n(homega, T) + 1/2) to (T [K], nu [MHz]) points.

    `fixed` pins any of nu0 / c_nu / homega (e.g. homega taken from another fit).
    """
    if len(points) < MIN_THERMAL_POINTS:
        raise DataError(f"thermal fit needs >= {MIN_THERMAL_POINTS} points, got {len(points)}")
    t, _, _ = points_to_arrays(points)
    if np.any(t < 0):
        raise DataError("temperatures must be >= 0")
    t_min, t_max = float(t.min()), float(t.max())
    if t_max <= 0 or (t_min > 0 and t_max / t_min < MIN_TEMPERATURE_RATIO):
        raise DataError(
            f"degenerate temperature span [{t_min:g}, {t_max:g}] K; need a ratio of at least {MIN_TEMPERATURE_RATIO:g}"
        )
    result = least_squares_fit(
        _model,
        points,
        init.model_dump(),
        bounds={"homega": (1e-6, None)},
        fixed=fixed,
        jacobian=thermal_jacobian,
        options=options,
    )
    logger.debug("thermal fit: %s (converged=%s)", result.all_values(), result.converged)
    return result


def initial_guess(points: list[SeriesPoint], homega: float = 18.0) -> ThermalModelParams:
    """nu0 and c_nu by linear least squares of nu on (n + 1/2) at a nominal mode energy."""
    t, y, _ = points_to_arrays(points)
    design = np.column_stack([np.ones_like(t), np.asarray(bose_occupation(homega, t)) + 0.5])
    (nu0, c), *_ = np.linalg.lstsq(design, y, rcond=None)
    return ThermalModelParams(nu0=float(nu0), c_nu=float(c), homega=homega)
