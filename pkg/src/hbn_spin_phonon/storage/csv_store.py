from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np
import pandas as pd

from hbn_spin_phonon.domain.dataset import RelaxationTrace
from hbn_spin_phonon.domain.report import FIT_COLUMNS, MODEL_COLUMNS, FitRow, ModelRow
from hbn_spin_phonon.domain.spectrum import OdmrSpectrum
from hbn_spin_phonon.errors import DataError

logger = logging.getLogger(__name__)

SPECTRUM_COLUMNS = ["temperature_k", "frequency_mhz", "contrast"]
TRACE_COLUMNS = ["temperature_k", "time_ms", "signal"]
FLOAT_FORMAT = "%.12g"


@dataclass(frozen=True)
class ParseResult:
    items: list = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def _read_long_csv(path: Path, required: list[str]) -> pd.DataFrame:
    """Read a long-format CSV as floats; line numbers in errors are 1-based file lines."""
    if not path.exists() or not path.is_file():
        raise DataError(f"file not found: {path}")
    try:
        raw = pd.read_csv(path, dtype=str, skipinitialspace=True, skip_blank_lines=False)
    except pd.errors.EmptyDataError:
        raise DataError(f"{path}: empty file (no header)") from None
    raw.columns = [str(c).strip().lower() for c in raw.columns]
    missing = [c for c in required if c not in raw.columns]
    if missing:
        raise DataError(f"{path}: missing column(s) {', '.join(missing)}")
    raw = raw[required]
    raw = raw[~raw.isna().all(axis=1)]
    if raw.empty:
        raise DataError(f"{path}: empty dataset")

    numeric = raw.apply(lambda col: pd.to_numeric(col.str.strip(), errors="coerce"))
    bad = numeric.isna().any(axis=1) | ~np.isfinite(numeric.to_numpy(dtype=float)).all(axis=1)
    if bad.any():
        lines = [int(i) + 2 for i in numeric.index[bad]]
        shown = ", ".join(str(n) for n in lines[:10])
        raise DataError(f"{path}: malformed (non-numeric) row(s) at line {shown}")
    numeric["line"] = numeric.index + 2
    return numeric


def _dedupe_last(frame: pd.DataFrame, keys: list[str], path: Path, warnings: list[str]) -> pd.DataFrame:
    dup = frame.duplicated(subset=keys, keep="last")
    if dup.any():
        lines = ", ".join(str(n) for n in frame.loc[dup, "line"].tolist()[:10])
        message = f"{path}: {int(dup.sum())} duplicate {'/'.join(keys)} row(s) superseded by later rows (line {lines})"
        warnings.append(message)
        logger.warning(message)
    return frame[~dup]


def _sorted_within(frame: pd.DataFrame, key: str, path: Path, temperature: float, warnings: list[str]) -> pd.DataFrame:
    if not frame[key].is_monotonic_increasing:
        message = f"{path}: T={temperature:g} K {key} not sorted; sorted on load"
        warnings.append(message)
        logger.warning(message)
    return frame.sort_values(key, kind="mergesort")


def parse_spectrum_csv(path: str | Path) -> ParseResult:
    """
    Long-format spectra (`temperature_k, frequency_mhz, contrast`), one OdmrSpectrum
    per temperature in ascending temperature order.
    """
    path = Path(path)
    frame = _read_long_csv(path, SPECTRUM_COLUMNS)
    warnings: list[str] = []
    frame = _dedupe_last(frame, ["temperature_k", "frequency_mhz"], path, warnings)

    spectra: list[OdmrSpectrum] = []
    for temperature, group in frame.groupby("temperature_k", sort=True):
        group = _sorted_within(group, "frequency_mhz", path, float(temperature), warnings)
        spectra.append(
            OdmrSpectrum.from_arrays(
                group["frequency_mhz"].to_numpy(),
                group["contrast"].to_numpy(),
                temperature=float(temperature),
                metadata={"source": str(path)},
            )
        )
    return ParseResult(items=spectra, warnings=warnings)


def parse_trace_csv(path: str | Path) -> ParseResult:
    """
    Long-format relaxation traces (`temperature_k, time_ms, signal`); negative-time rows
    are rejected, duplicate (temperature, time) pairs keep the last row.
    """
    path = Path(path)
    frame = _read_long_csv(path, TRACE_COLUMNS)
    warnings: list[str] = []

    negative = frame["time_ms"] < 0
    for line, t in frame.loc[negative, ["line", "time_ms"]].itertuples(index=False):
        message = f"{path}:{int(line)}: negative time {t:g} ms rejected"
        warnings.append(message)
        logger.warning(message)
    frame = frame[~negative]
    if frame.empty:
        raise DataError(f"{path}: empty dataset")
    frame = _dedupe_last(frame, ["temperature_k", "time_ms"], path, warnings)

    traces: list[RelaxationTrace] = []
    for temperature, group in frame.groupby("temperature_k", sort=True):
        group = _sorted_within(group, "time_ms", path, float(temperature), warnings)
        traces.append(
            RelaxationTrace(
                temperature=float(temperature),
                time_ms=tuple(float(x) for x in group["time_ms"]),
                signal=tuple(float(x) for x in group["signal"]),
            )
        )
    return ParseResult(items=traces, warnings=warnings)


def _none_if_nan(value):
    if value is None:
        return None
    if isinstance(value, float) and math.isnan(value):
        return None
    return value


@dataclass(frozen=True)
class CsvStore:
    """Result tables under one output directory."""

    out_dir: Path

    @property
    def fits_path(self) -> Path:
        return self.out_dir / "fits.csv"

    @property
    def models_path(self) -> Path:
        return self.out_dir / "models.csv"

    def ensure_dir(self) -> None:
        self.out_dir.mkdir(parents=True, exist_ok=True)

    def write_fits(self, rows: Iterable[FitRow]) -> Path:
        self.ensure_dir()
        frame = pd.DataFrame([r.model_dump() for r in rows], columns=FIT_COLUMNS)
        frame.to_csv(self.fits_path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        return self.fits_path

    def write_models(self, rows: Iterable[ModelRow]) -> Path:
        self.ensure_dir()
        frame = pd.DataFrame([r.model_dump() for r in rows], columns=MODEL_COLUMNS)
        frame.to_csv(self.models_path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        return self.models_path

    def read_fits(self) -> list[FitRow]:
        frame = pd.read_csv(self.fits_path, dtype={"dataset": str})
        out = []
        for rec in frame.to_dict("records"):
            values = {k: _none_if_nan(v) for k, v in rec.items()}
            values["converged"] = str(values.get("converged")).strip() in ("True", "true", "1")
            out.append(FitRow(**values))
        return out

    def read_models(self) -> list[ModelRow]:
        frame = pd.read_csv(self.models_path, dtype={"dataset": str, "model": str, "parameter": str})
        return [ModelRow(**{k: _none_if_nan(v) for k, v in rec.items()}) for rec in frame.to_dict("records")]


def write_spectra_csv(spectra: Iterable[OdmrSpectrum], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frames = [
        pd.DataFrame({"temperature_k": s.temperature, "frequency_mhz": s.frequency, "contrast": s.contrast})
        for s in spectra
    ]
    frame = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=SPECTRUM_COLUMNS)
    frame.to_csv(path, index=False, columns=SPECTRUM_COLUMNS, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def write_traces_csv(traces: Iterable[RelaxationTrace], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frames = [
        pd.DataFrame({"temperature_k": tr.temperature, "time_ms": tr.time_ms, "signal": tr.signal}) for tr in traces
    ]
    frame = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=TRACE_COLUMNS)
    frame.to_csv(path, index=False, columns=TRACE_COLUMNS, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path
