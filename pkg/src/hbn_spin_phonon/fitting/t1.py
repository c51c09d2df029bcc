from __future__ import annotations

import logging
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from hbn_spin_phonon.domain.fits import FitResult, SeriesPoint, points_to_arrays
from hbn_spin_phonon.errors import DataError
from hbn_spin_phonon.fitting.engine import DEFAULT_OPTIONS, FitOptions, least_squares_fit

logger = logging.getLogger(__name__)

MIN_TRACE_POINTS = 5


@dataclass(frozen=True)
class T1Fit:
    t1: float | None  # ms
    t1_sigma: float | None
    result: FitResult | None
    flagged: bool = False
    warnings: list[str] = field(default_factory=list)


def _decay(t: np.ndarray, p: Mapping[str, float]) -> np.ndarray:
    return p["c0"] + p["c1"] * np.exp(-t / p["t1"])


def _decay_jacobian(t: np.ndarray, p: Mapping[str, float]) -> np.ndarray:
    e = np.exp(-t / p["t1"])
    return np.column_stack([np.ones_like(t), e, p["c1"] * e * t / p["t1"] ** 2])


def fit_t1_trace(points: list[SeriesPoint], *, options: FitOptions = DEFAULT_OPTIONS) -> T1Fit:
    """Fit c0 + c1 exp(-t/T1); c1 may be negative (recovery traces)."""
    if len(points) < MIN_TRACE_POINTS:
        raise DataError(f"T1 trace needs >= {MIN_TRACE_POINTS} points, got {len(points)}")
    t, y, _ = points_to_arrays(points)
    if np.any(t < 0) or np.any(np.diff(t) <= 0):
        raise DataError("trace times must be nonnegative and strictly increasing")

    scale = max(1.0, float(np.max(np.abs(y))))
    if np.ptp(y) <= 1e-12 * scale:
        message = "trace does not decay (constant signal); no T1"
        logger.warning(message)
        return T1Fit(t1=None, t1_sigma=None, result=None, flagged=True, warnings=[message])

    span = float(t[-1] - t[0])
    init = {"c0": float(y[-1]), "c1": float(y[0] - y[-1]), "t1": span / 3.0}
    bounds = {"t1": (1e-6 * span, 1e3 * span)}
    result = least_squares_fit(_decay, points, init, bounds=bounds, jacobian=_decay_jacobian, options=options)

    warnings = list(result.warnings)
    t1 = result.params["t1"]
    flagged = False
    if t1 >= 0.999 * 1e3 * span:
        flagged = True
        warnings.append(f"T1 at the upper bound ({t1:g} ms); trace shows no resolvable decay")
    if flagged:
        for message in warnings[len(result.warnings):]:
            logger.warning(message)
        return T1Fit(t1=None, t1_sigma=None, result=result, flagged=True, warnings=warnings)
    return T1Fit(t1=t1, t1_sigma=result.sigma("t1"), result=result, warnings=warnings)
