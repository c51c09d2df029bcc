"""
Damped Gauss-Newton (Levenberg-Marquardt) least squares over named parameters.

Models are plain callables `model(x, params) -> y` where `params` maps every
parameter name (free and fixed) to its value. An optional analytic Jacobian
`jacobian(x, params) -> (n_points, n_params)` uses the column order of `init`.
"""
from __future__ import annotations

import logging
from collections.abc import Callable, Mapping
from dataclasses import dataclass

import numpy as np

from hbn_spin_phonon.domain.fits import FitResult, SeriesPoint, points_to_arrays
from hbn_spin_phonon.errors import DataError, FitError

logger = logging.getLogger(__name__)

Model = Callable[[np.ndarray, Mapping[str, float]], np.ndarray]
Jacobian = Callable[[np.ndarray, Mapping[str, float]], np.ndarray]
Bounds = Mapping[str, tuple[float | None, float | None]]


@dataclass(frozen=True)
class FitOptions:
    max_iter: int = 200
    xtol: float = 1e-10
    ftol: float = 1e-14
    rel_step: float = 1e-6
    lambda_factor: float = 8.0
    lambda_init: float = 1e-3
    absolute_sigma: bool = False
    strict: bool = False


DEFAULT_OPTIONS = FitOptions()


def numerical_jacobian(
    model: Model,
    x: np.ndarray,
    params: Mapping[str, float],
    names: list[str],
    *,
    rel_step: float = 1e-6,
) -> np.ndarray:
    """Central differences, step rel_step * |p| (rel_step when p == 0)."""
    cols = []
    for name in names:
        p = float(params[name])
        h = rel_step * abs(p) if p != 0 else rel_step
        hi = dict(params)
        lo = dict(params)
        hi[name] = p + h
        lo[name] = p - h
        cols.append((np.asarray(model(x, hi), dtype=float) - np.asarray(model(x, lo), dtype=float)) / (2.0 * h))
    return np.column_stack(cols) if cols else np.zeros((x.size, 0))


def _bound_arrays(names: list[str], bounds: Bounds) -> tuple[np.ndarray, np.ndarray]:
    lo = np.full(len(names), -np.inf)
    hi = np.full(len(names), np.inf)
    for i, name in enumerate(names):
        low, high = bounds.get(name, (None, None))
        if low is not None:
            lo[i] = low
        if high is not None:
            hi[i] = high
    return lo, hi


def _clip(values: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    return np.minimum(np.maximum(values, lower), upper)


def least_squares_fit(
    model: Model,
    points: list[SeriesPoint],
    init: Mapping[str, float],
    *,
    bounds: Bounds | None = None,
    fixed: Mapping[str, float] | None = None,
    jacobian: Jacobian | None = None,
    options: FitOptions = DEFAULT_OPTIONS,
) -> FitResult:
    fixed = dict(fixed or {})
    all_names = list(init) + [n for n in fixed if n not in init]
    free = [n for n in init if n not in fixed]
    if not free:
        raise DataError("no free parameters to fit")
    if len(points) < len(free):
        raise DataError(f"need at least {len(free)} points for {len(free)} parameters, got {len(points)}")

    x, y, sigma = points_to_arrays(points)
    weights = np.ones_like(y) if sigma is None else 1.0 / sigma

    lower, upper = _bound_arrays(free, bounds or {})
    p = np.array([float(init[n]) for n in free])
    if np.any(p < lower) or np.any(p > upper):
        raise DataError(f"initial parameters outside bounds: {dict(zip(free, p))}")

    def full(pv: np.ndarray) -> dict[str, float]:
        values = {n: float(fixed[n]) for n in fixed}
        values.update({n: float(v) for n, v in zip(free, pv)})
        return values

    def residual(pv: np.ndarray) -> np.ndarray | None:
        try:
            r = (y - np.asarray(model(x, full(pv)), dtype=float)) * weights
        except (ValueError, ArithmeticError):
            return None
        return r if np.all(np.isfinite(r)) else None

    def weighted_jacobian(pv: np.ndarray) -> np.ndarray:
        values = full(pv)
        if jacobian is not None:
            jac = np.asarray(jacobian(x, values), dtype=float)
            columns = [list(init).index(n) if n in init else None for n in free]
            jac = jac[:, columns]
        else:
            jac = numerical_jacobian(model, x, values, free, rel_step=options.rel_step)
        return jac * weights[:, None]

    r = residual(p)
    if r is None:
        raise DataError("model is not finite at the initial parameters")
    cost = float(r @ r)
    history = [float(np.sqrt(cost))]
    warnings: list[str] = []

    jac = weighted_jacobian(p)
    a = jac.T @ jac
    g = jac.T @ r
    diag = np.diag(a).copy()
    scale = float(diag.max()) if diag.size and diag.max() > 0 else 1.0
    damping = np.maximum(diag, 1e-12 * scale)
    mu = options.lambda_init * scale

    converged = False
    iterations = 0
    while iterations < options.max_iter:
        iterations += 1
        if cost == 0.0:
            converged = True
            break
        try:
            step = np.linalg.solve(a + mu * np.diag(damping / scale), g)
        except np.linalg.LinAlgError:
            mu *= options.lambda_factor
            continue
        trial = _clip(p + step, lower, upper)
        r_trial = residual(trial)
        cost_trial = float(r_trial @ r_trial) if r_trial is not None else np.inf

        if cost_trial < cost:
            moved = float(np.linalg.norm(trial - p))
            reduction = cost - cost_trial
            p, r, cost = trial, r_trial, cost_trial
            history.append(float(np.sqrt(cost)))
            mu /= options.lambda_factor
            if moved <= options.xtol * (float(np.linalg.norm(p)) + options.xtol) or reduction <= options.ftol * cost:
                converged = True
                break
            jac = weighted_jacobian(p)
            a = jac.T @ jac
            g = jac.T @ r
            diag = np.diag(a)
            damping = np.maximum(damping, diag)
        else:
            mu *= options.lambda_factor
            if mu > 1e16 * scale:
                # no damped step reduces the cost any further
                converged = True
                break
    else:
        warnings.append(f"iteration cap ({options.max_iter}) reached")

    jac = weighted_jacobian(p)
    a = jac.T @ jac
    dof = len(points) - len(free)
    try:
        if np.linalg.cond(a) > 1e14:
            raise np.linalg.LinAlgError("ill-conditioned")
        cov = np.linalg.inv(a)
    except np.linalg.LinAlgError:
        cov = np.linalg.pinv(a)
        converged = False
        warnings.append("singular normal matrix; covariance from pseudo-inverse")
    if not options.absolute_sigma:
        cov = cov * (cost / dof if dof > 0 else 0.0)
    cov = 0.5 * (cov + cov.T)
    sigmas = np.sqrt(np.clip(np.diag(cov), 0.0, None))

    for message in warnings:
        logger.warning("least squares: %s", message)
    if options.strict and not converged:
        raise FitError("; ".join(warnings) or "fit did not converge")

    return FitResult(
        params={n: float(v) for n, v in zip(free, p)},
        sigmas={n: float(s) for n, s in zip(free, sigmas)},
        residual_norm=float(np.sqrt(cost)),
        covariance=cov.tolist(),
        iterations=iterations,
        converged=converged,
        dof=dof,
        fixed={n: float(fixed[n]) for n in all_names if n in fixed},
        history=history,
        warnings=warnings,
    )
