from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import linregress

from hbn_spin_phonon.domain.fits import SeriesPoint, points_to_arrays
from hbn_spin_phonon.errors import DataError

MIN_WINDOW_POINTS = 3


@dataclass(frozen=True)
class Susceptibility:
    chi: float  # MHz/K
    sigma: float
    intercept: float
    n_points: int
    window: tuple[float, float]


def fit_susceptibility(points: list[SeriesPoint], t_min: float = 250.0, t_max: float = 350.0) -> Susceptibility:
    """Ordinary least-squares slope of nu(T) restricted to t_min <= T <= t_max."""
    if t_min >= t_max:
        raise DataError(f"susceptibility window must be ordered, got ({t_min}, {t_max})")
    t, nu, _ = points_to_arrays(points)
    mask = (t >= t_min) & (t <= t_max)
    if int(mask.sum()) < MIN_WINDOW_POINTS:
        raise DataError(
            f"need >= {MIN_WINDOW_POINTS} points in [{t_min:g}, {t_max:g}] K, got {int(mask.sum())}"
        )
    if np.ptp(t[mask]) == 0:
        raise DataError("all in-window points share one temperature")
    fit = linregress(t[mask], nu[mask])
    return Susceptibility(
        chi=float(fit.slope),
        sigma=float(fit.stderr),
        intercept=float(fit.intercept),
        n_points=int(mask.sum()),
        window=(t_min, t_max),
    )
