from __future__ import annotations

import logging
from collections.abc import Mapping

import numpy as np

from hbn_spin_phonon.analysis.phonon_sum import bose_occupation
from hbn_spin_phonon.domain.fits import FitResult, RelaxationMode, RelaxationParams, SeriesPoint, points_to_arrays
from hbn_spin_phonon.errors import DataError
from hbn_spin_phonon.fitting.engine import DEFAULT_OPTIONS, FitOptions, least_squares_fit

logger = logging.getLogger(__name__)

DEFAULT_HOMEGA_INIT = 18.0  # meV


def relaxation_model_eval(params: RelaxationParams, t):
    """Gamma(T) = sum_i a_i n_i (n_i + 1) + a_s (1/ms)."""
    temps = np.asarray(t, dtype=float)
    total = np.full(temps.shape, params.a_s, dtype=float)
    for mode in params.modes:
        n = np.asarray(bose_occupation(mode.homega, temps))
        total = total + mode.a * n * (n + 1.0)
    return float(total) if total.ndim == 0 else total


def t1_from_rate(rate):
    r = np.asarray(rate, dtype=float)
    if np.any(r <= 0):
        raise DataError("relaxation rate must be > 0")
    out = 1.0 / r
    return float(out) if out.ndim == 0 else out


def _names(mode_count: int) -> tuple[list[str], list[str]]:
    return [f"a_{i + 1}" for i in range(mode_count)], [f"homega_{i + 1}" for i in range(mode_count)]


def _make_model(mode_count: int):
    a_names, w_names = _names(mode_count)

    def model(t: np.ndarray, p: Mapping[str, float]) -> np.ndarray:
        out = np.full(t.shape, p["a_s"], dtype=float)
        for a, w in zip(a_names, w_names):
            if p[w] <= 0:
                raise DataError("mode energy must be > 0")
            n = np.asarray(bose_occupation(p[w], t))
            out = out + p[a] * n * (n + 1.0)
        return out

    return model


def _linear_init(t: np.ndarray, rate: np.ndarray, energies: list[float]) -> tuple[list[float], float]:
    """Nonnegative amplitudes for given mode energies by plain linear least squares."""
    columns = []
    for w in energies:
        n = np.asarray(bose_occupation(w, t))
        columns.append(n * (n + 1.0))
    columns.append(np.ones_like(t))
    coef, *_ = np.linalg.lstsq(np.column_stack(columns), rate, rcond=None)
    coef = np.clip(coef, 0.0, None)
    if not np.any(coef[:-1] > 0):
        # fall back to the high-temperature point carrying everything
        k = int(np.argmax(t))
        coef[:-1] = rate[k] / max(float(columns[0][k]), 1e-12) / len(energies)
    return [float(c) for c in coef[:-1]], float(coef[-1])


def params_from_result(result: FitResult, mode_count: int) -> RelaxationParams:
    a_names, w_names = _names(mode_count)
    values = result.all_values()
    return RelaxationParams(
        modes=tuple(RelaxationMode(a=max(values[a], 0.0), homega=values[w]) for a, w in zip(a_names, w_names)),
        a_s=max(values["a_s"], 0.0),
    )


def fit_relaxation(
    points: list[SeriesPoint],
    *,
    homega: float | list[float] | None = None,
    mode_count: int = 1,
    homega_init: float = DEFAULT_HOMEGA_INIT,
    options: FitOptions = DEFAULT_OPTIONS,
) -> tuple[RelaxationParams, FitResult]:
    """
    Fit Gamma(T) (1/ms) vs T (K).

    With `homega` given (one value, or one per mode) the energies are held fixed and
    only the a_i and a_s vary; otherwise energies are free, seeded at multiples of
    `homega_init`.
    """
    if mode_count < 1:
        raise DataError(f"mode_count must be >= 1, got {mode_count}")
    needed = 2 * mode_count + 2
    if len(points) < needed:
        raise DataError(f"relaxation fit with {mode_count} mode(s) needs >= {needed} points, got {len(points)}")
    t, rate, _ = points_to_arrays(points)
    if np.any(rate <= 0):
        raise DataError("relaxation rates must be > 0")

    a_names, w_names = _names(mode_count)
    if homega is None:
        energies = [homega_init * (i + 1) for i in range(mode_count)]
        fixed: dict[str, float] = {}
    else:
        energies = [float(homega)] * mode_count if np.ndim(homega) == 0 else [float(w) for w in homega]
        if len(energies) != mode_count or min(energies) <= 0:
            raise DataError(f"need {mode_count} positive fixed mode energies, got {homega}")
        fixed = dict(zip(w_names, energies))

    amps, a_s = _linear_init(t, rate, energies)
    init: dict[str, float] = {}
    for a, w, amp, energy in zip(a_names, w_names, amps, energies):
        init[a] = amp
        if w not in fixed:
            init[w] = energy
    init["a_s"] = a_s

    bounds: dict[str, tuple[float | None, float | None]] = {"a_s": (0.0, None)}
    bounds.update({a: (0.0, None) for a in a_names})
    bounds.update({w: (1e-3, None) for w in w_names})

    result = least_squares_fit(_make_model(mode_count), points, init, bounds=bounds, fixed=fixed, options=options)
    logger.debug("relaxation fit: %s (converged=%s)", result.all_values(), result.converged)
    return params_from_result(result, mode_count), result
