from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
from pydantic import ValidationError

from hbn_spin_phonon.config import RunConfig, load_config
from hbn_spin_phonon.domain.dataset import Dataset
from hbn_spin_phonon.domain.fits import SeriesPoint
from hbn_spin_phonon.errors import EXIT_DATA, EXIT_FIT, EXIT_OK, EXIT_USAGE, ConfigError, DataError, ToolkitError
from hbn_spin_phonon.logging_setup import configure_logging

logger = logging.getLogger("hbn_spin_phonon.cli")

FLOAT_FORMAT = "%.12g"


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # usage errors exit 1
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.replace(";", ",").split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("run configuration (overrides --config and HBN_* variables)")
    g.add_argument("--config", type=Path, help="flat `key = value` config file")
    g.add_argument("--isotope", choices=["N15", "N14"])
    g.add_argument("--field-gauss", type=float)
    g.add_argument("--zfs-mhz", type=float)
    g.add_argument("--amplitude-mode", choices=["ratio_binomial", "free"])
    g.add_argument("--susceptibility-window", type=_floats, metavar="TMIN,TMAX")
    g.add_argument("--homega-policy", choices=["fixed", "free"])
    g.add_argument("--homega-mev", type=float)
    g.add_argument("--relaxation-modes", type=int)
    g.add_argument("--photon-rate-hz", type=float)
    g.add_argument("--output-dir", type=Path)
    g.add_argument("--plots", action=argparse.BooleanOptionalAction, default=None)
    g.add_argument("--seed", type=int)
    g.add_argument("--workers", type=int)


_CONFIG_KEYS = (
    "isotope",
    "field_gauss",
    "zfs_mhz",
    "amplitude_mode",
    "susceptibility_window",
    "homega_policy",
    "homega_mev",
    "relaxation_modes",
    "photon_rate_hz",
    "output_dir",
    "plots",
    "seed",
    "workers",
)


def _run_config(args: argparse.Namespace) -> RunConfig:
    overrides: dict[str, Any] = {k: getattr(args, k, None) for k in _CONFIG_KEYS}
    return load_config(getattr(args, "config", None), overrides)


def _print_frame(frame: pd.DataFrame, out: Path | None) -> None:
    if out is not None:
        out.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(out, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        logger.info("wrote %s", out)
    print(frame.to_string(index=False, float_format=lambda v: f"{v:.6g}"))


# ---- subcommands ---------------------------------------------------------


def cmd_simulate(args: argparse.Namespace) -> int:
    from hbn_spin_phonon.pipeline.synthetic import DEFAULT_TEMPERATURES, SYNTHETIC_RELAXATION, synthesize_dataset
    from hbn_spin_phonon.storage.csv_store import write_spectra_csv, write_traces_csv

    config = _run_config(args)
    temperatures = args.temperatures or DEFAULT_TEMPERATURES
    dataset = synthesize_dataset(
        config,
        temperatures,
        label=args.label,
        noise_sigma=args.noise,
        relaxation=None if args.out_traces is None else SYNTHETIC_RELAXATION,
    )
    write_spectra_csv(dataset.spectra, args.out_spectra)
    print(f"spectra: {args.out_spectra} ({len(dataset.spectra)} temperatures)")
    if args.out_traces is not None:
        write_traces_csv(dataset.traces, args.out_traces)
        print(f"traces: {args.out_traces} ({len(dataset.traces)} temperatures)")
    return EXIT_OK


def cmd_fit_odmr(args: argparse.Namespace) -> int:
    from hbn_spin_phonon.fitting.odmr import fit_odmr
    from hbn_spin_phonon.storage.csv_store import parse_spectrum_csv

    config = _run_config(args)
    parsed = parse_spectrum_csv(args.spectra)
    rows = []
    failed = False
    for spectrum in parsed.items:
        fit = fit_odmr(spectrum, config.isotope, config.amplitude_mode, zfs_hint=config.zfs_mhz)
        failed = failed or not fit.result.converged
        rows.append(
            {
                "temperature_k": spectrum.temperature,
                "d_mhz": fit.d,
                "d_sigma_mhz": fit.d_sigma,
                "a_zz_mhz": fit.a_zz,
                "a_zz_sigma_mhz": fit.a_zz_sigma,
                "contrast": fit.contrast,
                "linewidth_mhz": fit.linewidth,
                "converged": fit.result.converged,
            }
        )
    _print_frame(pd.DataFrame(rows), args.out)
    return EXIT_FIT if failed else EXIT_OK


def _read_series(path: Path, x: str, y: str, sigma: str | None) -> list[SeriesPoint]:
    frame = pd.read_csv(path)
    missing = [c for c in (x, y) if c not in frame.columns]
    if missing:
        raise DataError(f"{path}: missing column(s) {', '.join(missing)}")
    keep = frame[[x, y] + ([sigma] if sigma and sigma in frame.columns else [])].dropna(subset=[x, y])
    if keep.empty:
        raise DataError(f"{path}: empty dataset")
    points = []
    for rec in keep.to_dict("records"):
        s = rec.get(sigma) if sigma else None
        points.append(
            SeriesPoint(x=float(rec[x]), y=float(rec[y]), sigma_y=float(s) if s is not None and s == s and s > 0 else None)
        )
    return points


def cmd_fit_thermal(args: argparse.Namespace) -> int:
    from hbn_spin_phonon.fitting.susceptibility import fit_susceptibility
    from hbn_spin_phonon.fitting.thermal import fit_thermal, initial_guess, params_from_result

    config = _run_config(args)
    points = _read_series(args.table, "temperature_k", args.column, args.sigma_column)
    t = np.array([p.x for p in points])
    init = initial_guess(points, args.homega_init)
    fixed = {"homega": config.homega_mev} if config.homega_policy == "fixed" and config.homega_mev else None
    result = fit_thermal(points, init, fixed=fixed)
    params = params_from_result(result)
    print(f"nu0    = {params.nu0:.6f} ± {result.sigma('nu0'):.3g} MHz")
    print(f"c_nu   = {params.c_nu:.6f} ± {result.sigma('c_nu'):.3g} MHz")
    print(f"homega = {params.homega:.6f} ± {result.sigma('homega'):.3g} meV")
    print(f"nu(0 K) = {params.zero_kelvin_value:.6f} MHz")
    lo, hi = config.susceptibility_window
    if int(((t >= lo) & (t <= hi)).sum()) >= 3:
        sus = fit_susceptibility(points, lo, hi)
        print(f"chi({lo:g}-{hi:g} K) = {sus.chi:.6g} ± {sus.sigma:.3g} MHz/K")
    return EXIT_OK if result.converged else EXIT_FIT


def cmd_fit_t1(args: argparse.Namespace) -> int:
    from hbn_spin_phonon.fitting.relaxation import fit_relaxation
    from hbn_spin_phonon.fitting.t1 import fit_t1_trace
    from hbn_spin_phonon.storage.csv_store import parse_trace_csv

    config = _run_config(args)
    parsed = parse_trace_csv(args.traces)
    rows = []
    for trace in parsed.items:
        t, s = trace.as_arrays()
        fit = fit_t1_trace([SeriesPoint(x=float(a), y=float(b)) for a, b in zip(t, s)])
        rows.append({"temperature_k": trace.temperature, "t1_ms": fit.t1, "t1_sigma_ms": fit.t1_sigma, "flagged": fit.flagged})
    frame = pd.DataFrame(rows)
    _print_frame(frame, args.out)

    good = frame.dropna(subset=["t1_ms"])
    if args.relaxation and len(good) >= 2 * config.relaxation_modes + 2:
        points = [SeriesPoint(x=float(r.temperature_k), y=1.0 / float(r.t1_ms)) for r in good.itertuples()]
        homega = config.homega_mev if config.homega_policy == "fixed" else None
        _, result = fit_relaxation(points, homega=homega, mode_count=config.relaxation_modes)
        for name, value in result.all_values().items():
            print(f"{name} = {value:.6g}")
        return EXIT_OK if result.converged else EXIT_FIT
    return EXIT_OK


def cmd_phonon_sum(args: argparse.Namespace) -> int:
    from hbn_spin_phonon.analysis.phonon_sum import dominant_mode, evaluate_mode_sum, load_mode_table, mode_contributions

    table = load_mode_table(args.table, nu0_ref=args.nu0, nu0_override_path=args.nu0_override)
    temperatures = np.asarray(args.temperatures, dtype=float)
    values = np.atleast_1d(evaluate_mode_sum(table, temperatures))
    _print_frame(pd.DataFrame({"temperature_k": temperatures, "nu_mhz": values}), args.out)
    dom = dominant_mode(table)
    print(f"dominant mode: #{dom.index} ({dom.energy:g} meV, c = {dom.curvature_coeff:g} MHz)")
    top = mode_contributions(table, float(temperatures.max()))[: args.top]
    for c in top:
        print(f"  #{c.mode.index}: {c.shift_mhz:+.6g} MHz at {temperatures.max():g} K")
    return EXIT_OK


def cmd_sensitivity(args: argparse.Namespace) -> int:
    from hbn_spin_phonon.analysis.sensitivity import SensitivityInput, eta_b_lorentzian, evaluate_sensitivity

    config = _run_config(args)
    rate = config.photon_rate_hz
    closed_form = args.c_m is not None and args.fwhm is not None
    if args.slope is None and not closed_form:
        raise ConfigError("give --slope, or --c-m and --fwhm")
    inp = SensitivityInput(
        photon_rate=rate, max_slope=args.slope, chi=args.chi, c_m=args.c_m, delta_nu=args.fwhm
    )
    if args.slope is None:
        print(f"eta_B (closed form) = {eta_b_lorentzian(args.c_m, args.fwhm, rate):.6g} G/sqrt(Hz)")
    eta_b, eta_temp = evaluate_sensitivity(inp)
    print(f"max slope = {inp.slope_per_hz():.6g} 1/Hz")
    print(f"eta_B = {eta_b:.6g} G/sqrt(Hz)")
    if eta_temp is not None:
        print(f"eta_T = {eta_temp:.6g} K/sqrt(Hz)")
    return EXIT_OK


def cmd_polarization(args: argparse.Namespace) -> int:
    from hbn_spin_phonon.analysis.polarization import (
        binomial_weights,
        eslac_field,
        extract_polarization,
        polarization_series,
    )

    if args.amplitudes is not None:
        fit = extract_polarization(args.amplitudes, args.ordering)
        print(f"p = {fit.p:.9f} (residual {fit.residual:.3g})")
    if args.p is not None:
        print("weights (X = 0..3): " + ", ".join(f"{w:.6g}" for w in binomial_weights(args.p)))
    if args.excited_zfs is not None:
        print(f"esLAC field = {eslac_field(args.excited_zfs):.6g} G")
    if args.spectra is not None:
        from hbn_spin_phonon.storage.csv_store import parse_spectrum_csv

        points = polarization_series(parse_spectrum_csv(args.spectra).items, args.branch)
        _print_frame(pd.DataFrame([{"label": p.label, "p": p.p, "residual": p.residual} for p in points]), args.out)
    if args.amplitudes is None and args.p is None and args.excited_zfs is None and args.spectra is None:
        raise ConfigError("nothing to do: give --amplitudes, --p, --excited-zfs or --spectra")
    return EXIT_OK


def _parse_dataset_arg(value: str) -> tuple[str, Path, Path | None]:
    parts = value.split(":")
    if len(parts) not in (2, 3) or not parts[0] or not parts[1]:
        raise ConfigError(f"--dataset expects LABEL:SPECTRA[:TRACES], got {value!r}")
    return parts[0], Path(parts[1]), Path(parts[2]) if len(parts) == 3 and parts[2] else None


def cmd_pipeline(args: argparse.Namespace) -> int:
    from hbn_spin_phonon.pipeline.run_pipeline import run_pipeline
    from hbn_spin_phonon.pipeline.synthetic import synthesize_dataset
    from hbn_spin_phonon.reports.generator import write_report
    from hbn_spin_phonon.storage.csv_store import parse_spectrum_csv, parse_trace_csv

    config = _run_config(args)
    datasets: list[Dataset] = []
    for value in args.dataset or []:
        label, spectra_path, traces_path = _parse_dataset_arg(value)
        spectra = parse_spectrum_csv(spectra_path)
        traces = parse_trace_csv(traces_path) if traces_path else None
        datasets.append(
            Dataset(
                label=label,
                spectra=spectra.items,
                traces=traces.items if traces else [],
                provenance=[str(spectra_path)] + ([str(traces_path)] if traces_path else []),
            )
        )
    if args.synthetic:
        datasets.append(synthesize_dataset(config, label="SYN1"))
    if not datasets:
        raise ConfigError("no datasets: give --dataset LABEL:SPECTRA[:TRACES] or --synthetic")

    report = run_pipeline(config, datasets)
    written = write_report(report, config.output_dir, plots=config.plots)
    for path in written:
        print(path)
    return EXIT_FIT if report.has_fit_failures else EXIT_OK


# ---- entry point ---------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hbn-spin-phonon", description="hBN V_B- spin-phonon spectroscopy toolkit")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument("-q", "--quiet", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="write synthetic long-format spectrum (and trace) CSVs")
    _config_flags(p)
    p.add_argument("--out-spectra", type=Path, required=True)
    p.add_argument("--out-traces", type=Path)
    p.add_argument("--temperatures", type=_floats)
    p.add_argument("--noise", type=float, default=1e-4, help="contrast noise sigma")
    p.add_argument("--label", default="SYN1")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit-odmr", help="fit every spectrum in a long-format CSV")
    _config_flags(p)
    p.add_argument("spectra", type=Path)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_fit_odmr)

    p = sub.add_parser("fit-thermal", help="fit nu(T) = nu0 + c (n + 1/2) to one column of a table")
    _config_flags(p)
    p.add_argument("table", type=Path, help="CSV with temperature_k and the value column (e.g. fits.csv)")
    p.add_argument("--column", default="d_mhz")
    p.add_argument("--sigma-column")
    p.add_argument("--homega-init", type=float, default=18.0)
    p.set_defaults(func=cmd_fit_thermal)

    p = sub.add_parser("fit-t1", help="fit T1 per temperature from a long-format trace CSV")
    _config_flags(p)
    p.add_argument("traces", type=Path)
    p.add_argument("--relaxation", action="store_true", help="also fit Gamma(T) = 1/T1")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_fit_t1)

    p = sub.add_parser("phonon-sum", help="evaluate nu(T) from a phonon mode table")
    p.add_argument("table", type=Path)
    p.add_argument("--temperatures", type=_floats, default=[0.0, 100.0, 200.0, 300.0])
    p.add_argument("--nu0", type=float, default=0.0)
    p.add_argument("--nu0-override", type=Path)
    p.add_argument("--top", type=int, default=5)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_phonon_sum)

    p = sub.add_parser("sensitivity", help="DC magnetometry / thermometry sensitivity")
    _config_flags(p)
    p.add_argument("--slope", type=float, help="max |dC/dnu| per Hz")
    p.add_argument("--c-m", type=float, help="single-Lorentzian contrast")
    p.add_argument("--fwhm", type=float, help="single-Lorentzian FWHM (MHz)")
    p.add_argument("--chi", type=float, help="temperature susceptibility (MHz/K)")
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser("polarization", help="nuclear polarization from hyperfine line amplitudes")
    p.add_argument("--amplitudes", type=_floats)
    p.add_argument("--ordering", choices=["ascending_mI", "descending_mI"], default="ascending_mI")
    p.add_argument("--p", type=float)
    p.add_argument("--excited-zfs", type=float, help="excited-state splitting (MHz) for the esLAC field")
    p.add_argument("--spectra", type=Path, help="long-format CSV of 15N spectra to extract p from")
    p.add_argument("--branch", choices=["minus", "plus"], default="plus")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_polarization)

    p = sub.add_parser("pipeline", help="full batch analysis; writes fits.csv, models.csv, report.txt, plots")
    _config_flags(p)
    p.add_argument("--dataset", action="append", metavar="LABEL:SPECTRA[:TRACES]")
    p.add_argument("--synthetic", action="store_true", help="add a synthetic dataset")
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(-1 if args.quiet else args.verbose)
    try:
        return int(args.func(args))
    except ConfigError as exc:
        logger.error("%s", exc)
        return EXIT_USAGE
    except ValidationError as exc:
        logger.error("invalid input: %s", exc)
        return EXIT_DATA
    except ToolkitError as exc:
        logger.error("%s", exc)
        return exc.exit_code
    except OSError as exc:
        logger.error("I/O error: %s", exc)
        return EXIT_DATA
