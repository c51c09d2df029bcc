from __future__ import annotations

import logging
from pathlib import Path

from hbn_spin_phonon.domain.report import AGGREGATE_LABEL, DatasetReport, ModelRow, RunReport
from hbn_spin_phonon.storage.csv_store import CsvStore

logger = logging.getLogger(__name__)

_THERMAL_TITLES = {"zfs_thermal": "D(T)", "azz_thermal": "|A_zz|(T)"}


def _fmt(value: float | None, digits: int = 6) -> str:
    if value is None:
        return "n/a"
    return f"{value:.{digits}g}"


def _pm(value: float | None, sigma: float | None) -> str:
    if sigma is None:
        return _fmt(value)
    return f"{_fmt(value)} ± {_fmt(sigma, 3)}"


def _param(rows: list[ModelRow], model: str, parameter: str) -> ModelRow | None:
    for r in rows:
        if r.model == model and r.parameter == parameter:
            return r
    return None


def _dataset_lines(ds: DatasetReport) -> list[str]:
    lines = [f"## {ds.label}", ""]
    lines.append(f"temperatures fitted: {len(ds.rows)}")
    for stage in ds.stages:
        mark = "ok" if stage.ok else "FAILED"
        lines.append(f"- stage {stage.name}: {mark}" + (f" ({stage.message})" if stage.message else ""))
    lines.append("")

    for model, title in _THERMAL_TITLES.items():
        if _param(ds.models, model, "nu0") is None:
            continue
        nu0 = _param(ds.models, model, "nu0")
        c = _param(ds.models, model, "c_nu")
        w = _param(ds.models, model, "homega_mev")
        zero = _param(ds.models, model, "nu_0k")
        lines.append(f"{title}: nu = nu0 + c (n(homega, T) + 1/2)")
        lines.append(f"  nu0 = {_pm(nu0.value, nu0.sigma)} MHz")
        lines.append(f"  c = {_pm(c.value, c.sigma)} MHz")
        lines.append(f"  homega = {_pm(w.value, w.sigma)} meV")
        if zero is not None:
            lines.append(f"  nu(0 K) = nu0 + c/2 = {_fmt(zero.value, 9)} MHz")
        lines.append("")

    chi = _param(ds.models, "susceptibility", "chi_mhz_per_k")
    if chi is not None:
        lines.append(f"susceptibility dD/dT = {_pm(chi.value, chi.sigma)} MHz/K")
        lines.append("")

    a_s = _param(ds.models, "relaxation", "a_s")
    if a_s is not None:
        lines.append("relaxation: Gamma(T) = sum_i a_i n_i (n_i + 1) + a_s")
        for r in ds.models:
            if r.model == "relaxation":
                lines.append(f"  {r.parameter} = {_pm(r.value, r.sigma)}")
        lines.append("")

    sens = [r for r in ds.models if r.model == "sensitivity"]
    if sens:
        lines.append("sensitivity:")
        for r in sens:
            lines.append(f"  {r.parameter} = {_fmt(r.value)}")
        lines.append("")

    if ds.warnings:
        lines.append("warnings:")
        lines.extend(f"- {w}" for w in ds.warnings)
        lines.append("")
    return lines


def render_report_text(report: RunReport) -> str:
    """Deterministic plain-text summary (no timestamps)."""
    lines = ["# hBN V_B- spin-phonon analysis", ""]
    lines.append(f"seed: {report.seed}")
    for key in sorted(report.config):
        lines.append(f"{key}: {report.config[key]}")
    lines.append("")
    if not report.datasets:
        lines.append("(no datasets)")
        lines.append("")
    for ds in report.datasets:
        lines.extend(_dataset_lines(ds))

    if report.aggregates:
        lines.append(f"## {AGGREGATE_LABEL} (mean ± std over {len(report.datasets)} datasets)")
        lines.append("")
        for r in report.aggregates:
            lines.append(f"  {r.model}.{r.parameter} = {_pm(r.value, r.sigma)}")
        lines.append("")
    return "\n".join(lines).rstrip() + "\n"


def write_report(report: RunReport, out_dir: str | Path, *, plots: bool = True) -> list[Path]:
    """fits.csv, models.csv, report.txt and (optionally) per-dataset SVG plots."""
    out = Path(out_dir)
    store = CsvStore(out)
    written = [store.write_fits(report.fit_rows), store.write_models(report.model_rows)]
    report_path = out / "report.txt"
    report_path.write_text(render_report_text(report), encoding="utf-8")
    written.append(report_path)
    if plots:
        from hbn_spin_phonon.reports.plots import plot_dataset

        for ds in report.datasets:
            written.extend(plot_dataset(ds, out))
    logger.info("wrote %d file(s) to %s", len(written), out)
    return written
