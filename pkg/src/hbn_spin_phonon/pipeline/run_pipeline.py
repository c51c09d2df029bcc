from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

from hbn_spin_phonon.analysis.sensitivity import sensitivity_report
from hbn_spin_phonon.config import RunConfig
from hbn_spin_phonon.domain.dataset import Dataset, RelaxationTrace
from hbn_spin_phonon.domain.fits import FitResult, SeriesPoint
from hbn_spin_phonon.domain.report import DatasetReport, FitRow, ModelRow, RunReport, StageOutcome
from hbn_spin_phonon.domain.spectrum import OdmrSpectrum
from hbn_spin_phonon.errors import DataError, ToolkitError
from hbn_spin_phonon.fitting.odmr import OdmrFit, fit_odmr
from hbn_spin_phonon.fitting.relaxation import fit_relaxation, params_from_result as relaxation_params
from hbn_spin_phonon.fitting.susceptibility import fit_susceptibility
from hbn_spin_phonon.fitting.t1 import T1Fit, fit_t1_trace
from hbn_spin_phonon.fitting.thermal import fit_thermal, initial_guess, params_from_result
from hbn_spin_phonon.pipeline.aggregate import aggregate_models

logger = logging.getLogger(__name__)

T = TypeVar("T")

SENSITIVITY_TEMPERATURE = 300.0  # K


def _point(x: float, y: float, sigma: float | None) -> SeriesPoint:
    if sigma is not None and math.isfinite(sigma) and sigma > 0:
        return SeriesPoint(x=x, y=y, sigma_y=sigma)
    return SeriesPoint(x=x, y=y)


def _parallel(fn: Callable[[T], object], items: Sequence[T], workers: int) -> list[object]:
    """Map preserving input order; exceptions come back as values."""

    def _safe(item: T) -> object:
        try:
            return fn(item)
        except (ToolkitError, ValueError) as exc:
            return exc

    if workers <= 1 or len(items) <= 1:
        return [_safe(i) for i in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_safe, items))


def _run_stage(report: DatasetReport, name: str, fn: Callable[[], T]) -> T | None:
    try:
        value = fn()
    except (ToolkitError, ValueError) as exc:
        logger.warning("%s: stage %s failed: %s", report.label, name, exc)
        report.stages.append(StageOutcome(name=name, ok=False, message=str(exc)))
        return None
    if getattr(value, "converged", None) is False:
        report.stages.append(StageOutcome(name=name, ok=False, message="fit did not converge"))
    else:
        report.stages.append(StageOutcome(name=name, ok=True))
    return value


def _skip(report: DatasetReport, name: str, reason: str) -> None:
    logger.info("%s: stage %s skipped (%s)", report.label, name, reason)
    report.stages.append(StageOutcome(name=name, ok=True, skipped=True, message=f"skipped: {reason}"))


def _thermal_rows(label: str, model: str, result: FitResult) -> list[ModelRow]:
    params = params_from_result(result)
    names = list(result.params)
    cov = result.covariance_matrix()

    def _cov(a: str, b: str) -> float:
        if a in names and b in names:
            return float(cov[names.index(a), names.index(b)])
        return 0.0

    zero_var = _cov("nu0", "nu0") + 0.25 * _cov("c_nu", "c_nu") + _cov("nu0", "c_nu")
    fixed_homega = "homega" in result.fixed
    return [
        ModelRow(dataset=label, model=model, parameter="nu0", value=params.nu0, sigma=result.sigma("nu0")),
        ModelRow(dataset=label, model=model, parameter="c_nu", value=params.c_nu, sigma=result.sigma("c_nu")),
        ModelRow(
            dataset=label,
            model=model,
            parameter="homega_mev",
            value=params.homega,
            sigma=None if fixed_homega else result.sigma("homega"),
        ),
        ModelRow(
            dataset=label,
            model=model,
            parameter="nu_0k",
            value=params.zero_kelvin_value,
            sigma=math.sqrt(max(zero_var, 0.0)),
        ),
    ]


def _fit_rows(label: str, odmr: dict[float, OdmrFit | Exception], t1: dict[float, T1Fit | Exception]) -> list[FitRow]:
    rows = []
    for temperature in sorted(set(odmr) | set(t1)):
        row = FitRow(dataset=label, temperature_k=temperature)
        converged = True
        fit = odmr.get(temperature)
        if isinstance(fit, OdmrFit):
            row.d_mhz, row.d_sigma_mhz = fit.d, fit.d_sigma
            row.a_zz_mhz, row.a_zz_sigma_mhz = fit.a_zz, fit.a_zz_sigma
            row.contrast, row.linewidth_mhz = fit.contrast, fit.linewidth
            converged = converged and fit.result.converged
        elif fit is not None:
            converged = False
        trace = t1.get(temperature)
        if isinstance(trace, T1Fit):
            row.t1_ms, row.t1_sigma_ms = trace.t1, trace.t1_sigma
            converged = converged and (trace.result is None or trace.result.converged)
        elif trace is not None:
            converged = False
        row.converged = converged
        rows.append(row)
    return rows


def run_dataset(config: RunConfig, dataset: Dataset) -> DatasetReport:
    """
    Per-temperature ODMR and T1 fits, then thermal models for D(T) and |A_zz|(T),
    the susceptibility, the relaxation-rate model and the sensitivity near 300 K.
    A failed stage is recorded and independent later stages still run.
    """
    if dataset.is_empty():
        raise DataError(f"dataset {dataset.label} has no spectra or traces")
    report = DatasetReport(label=dataset.label)

    spectra: list[OdmrSpectrum] = sorted(dataset.spectra, key=lambda s: s.temperature)
    traces: list[RelaxationTrace] = sorted(dataset.traces, key=lambda tr: tr.temperature)

    def _odmr(spectrum: OdmrSpectrum) -> OdmrFit:
        return fit_odmr(spectrum, config.isotope, config.amplitude_mode, zfs_hint=config.zfs_mhz)

    def _t1(trace: RelaxationTrace) -> T1Fit:
        t, y = trace.as_arrays()
        return fit_t1_trace([SeriesPoint(x=float(a), y=float(b)) for a, b in zip(t, y)])

    odmr = dict(zip((s.temperature for s in spectra), _parallel(_odmr, spectra, config.workers)))
    t1 = dict(zip((tr.temperature for tr in traces), _parallel(_t1, traces, config.workers)))

    for temperature, outcome in list(odmr.items()) + list(t1.items()):
        if isinstance(outcome, Exception):
            report.warnings.append(f"T={temperature:g} K: {outcome}")
        else:
            report.warnings.extend(f"T={temperature:g} K: {w}" for w in outcome.warnings)

    if spectra:
        failed = [t for t, f in odmr.items() if not isinstance(f, OdmrFit) or not f.result.converged]
        report.stages.append(
            StageOutcome(name="odmr", ok=not failed, message=f"failed at T={failed}" if failed else "")
        )
    else:
        _skip(report, "odmr", "no spectra")
    if traces:
        failed = [t for t, f in t1.items() if not isinstance(f, T1Fit) or f.t1 is None]
        report.stages.append(StageOutcome(name="t1", ok=not failed, message=f"no T1 at T={failed}" if failed else ""))
    else:
        _skip(report, "t1", "no relaxation traces")
    report.rows = _fit_rows(dataset.label, odmr, t1)

    fits = [f for f in odmr.values() if isinstance(f, OdmrFit)]
    d_points = [_point(f.temperature, f.d, f.d_sigma) for f in fits if f.d is not None]
    azz_points = [_point(f.temperature, f.a_zz, f.a_zz_sigma) for f in fits]
    report.series["zfs_thermal"] = d_points
    report.series["azz_thermal"] = azz_points

    # thermal models
    zfs_result: FitResult | None = None
    if d_points:
        zfs_result = _run_stage(report, "zfs_thermal", lambda: fit_thermal(d_points, initial_guess(d_points)))
        if zfs_result is not None:
            report.thermal["zfs_thermal"] = params_from_result(zfs_result)
            report.models.extend(_thermal_rows(dataset.label, "zfs_thermal", zfs_result))
    elif spectra:
        _skip(report, "zfs_thermal", "no two-branch spectra (D not measured)")

    homega_d = zfs_result.value("homega") if zfs_result is not None else None
    if azz_points:
        fixed = {"homega": homega_d} if homega_d is not None else None

        def _azz() -> FitResult:
            init = initial_guess(azz_points)
            if homega_d is not None:
                init = init.model_copy(update={"homega": homega_d})
            return fit_thermal(azz_points, init, fixed=fixed)

        azz_result = _run_stage(report, "azz_thermal", _azz)
        if azz_result is not None:
            report.thermal["azz_thermal"] = params_from_result(azz_result)
            report.models.extend(_thermal_rows(dataset.label, "azz_thermal", azz_result))

    chi: float | None = None
    if d_points:
        lo, hi = config.susceptibility_window
        sus = _run_stage(report, "susceptibility", lambda: fit_susceptibility(d_points, lo, hi))
        if sus is not None:
            chi = sus.chi
            report.models.append(
                ModelRow(dataset=dataset.label, model="susceptibility", parameter="chi_mhz_per_k", value=sus.chi, sigma=sus.sigma)
            )

    # relaxation
    rate_points = []
    for temperature, outcome in sorted(t1.items()):
        if isinstance(outcome, T1Fit) and outcome.t1 is not None:
            sigma = outcome.t1_sigma / outcome.t1**2 if outcome.t1_sigma else None
            rate_points.append(_point(temperature, 1.0 / outcome.t1, sigma))
    report.series["relaxation"] = rate_points
    if rate_points:
        if config.homega_policy == "fixed":
            homega = config.homega_mev if config.homega_mev is not None else homega_d
            if homega is None:
                report.warnings.append("no fixed homega available (no D(T) fit); relaxation energy left free")
        else:
            homega = None

        def _relax() -> FitResult:
            _, result = fit_relaxation(rate_points, homega=homega, mode_count=config.relaxation_modes)
            return result

        relax = _run_stage(report, "relaxation", _relax)
        if relax is not None:
            report.relaxation = relaxation_params(relax, config.relaxation_modes)
            for name, value in relax.all_values().items():
                report.models.append(
                    ModelRow(
                        dataset=dataset.label,
                        model="relaxation",
                        parameter=name,
                        value=value,
                        sigma=None if name in relax.fixed else relax.sigma(name),
                    )
                )
    elif traces:
        _skip(report, "relaxation", "no usable T1 values")

    # sensitivity at the spectrum nearest room temperature
    if fits:
        nearest = min(fits, key=lambda f: (abs(f.temperature - SENSITIVITY_TEMPERATURE), f.temperature))
        sens = _run_stage(report, "sensitivity", lambda: sensitivity_report(nearest.model, config.photon_rate_hz, chi))
        if sens is not None:
            for parameter, value in (
                ("temperature_k", nearest.temperature),
                ("eta_b_gauss_per_rthz", sens.eta_b),
                ("eta_t_k_per_rthz", sens.eta_t),
                ("max_slope_per_hz", sens.slope_per_hz),
                ("max_slope_at_mhz", sens.at_mhz),
            ):
                if value is not None:
                    report.models.append(
                        ModelRow(dataset=dataset.label, model="sensitivity", parameter=parameter, value=value)
                    )

    logger.info(
        "%s: %d temperature(s), stages %s",
        dataset.label,
        len(report.rows),
        ", ".join(f"{s.name}={'ok' if s.ok else 'fail'}" for s in report.stages),
    )
    return report


def run_pipeline(config: RunConfig, datasets: Dataset | Sequence[Dataset]) -> RunReport:
    if isinstance(datasets, Dataset):
        datasets = [datasets]
    labels = [d.label for d in datasets]
    if not labels:
        raise DataError("no datasets supplied")
    if len(set(labels)) != len(labels):
        raise DataError(f"dataset labels must be unique, got {labels}")

    reports = [run_dataset(config, d) for d in datasets]
    aggregates = aggregate_models(reports) if len(reports) > 1 else []
    return RunReport(config=config.as_dict(), seed=config.seed, datasets=reports, aggregates=aggregates)
