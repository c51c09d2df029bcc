"""
ODMR spectrum fits: two groups of equally spaced Lorentzians sharing one hyperfine splitting.

Parameters are named f_<branch> (group center), w_<branch> (FWHM), split (common
spacing) and either s_<branch> (ratio_binomial: amplitude of the tallest line, the
others follow the multiplicity ratio) or a_<branch>_<k> (free: one per line).
"""
from __future__ import annotations

import itertools
import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.ndimage import uniform_filter1d
from scipy.optimize import nnls
from scipy.signal import find_peaks, peak_widths

from hbn_spin_phonon.analysis.lineshape import lorentzian
from hbn_spin_phonon.domain.fits import FitResult, series
from hbn_spin_phonon.domain.spectrum import MIN_FIT_SAMPLES, OdmrModelParams, OdmrSpectrum
from hbn_spin_phonon.domain.spin import Branch, Isotope
from hbn_spin_phonon.errors import DataError
from hbn_spin_phonon.fitting.engine import DEFAULT_OPTIONS, FitOptions, least_squares_fit
from hbn_spin_phonon.spin.transitions import multiplicity_weights

logger = logging.getLogger(__name__)

SMOOTH_WINDOW = 5
PICK_PROMINENCE = 0.3
RESOLVE_PROMINENCE = 0.05
# |A_zz| class values for hBN V_B-, used only when the spacing cannot be read off the data
NOMINAL_SPLITTING = {Isotope.N15: 64.0, Isotope.N14: 47.0}
DEFAULT_ZFS_HINT = 3480.0

BRANCHES = (Branch.minus, Branch.plus)


class AmplitudeMode(str, Enum):
    ratio_binomial = "ratio_binomial"
    free = "free"


@dataclass(frozen=True)
class OdmrFit:
    result: FitResult
    model: OdmrModelParams
    d: float | None
    d_sigma: float | None
    a_zz: float
    a_zz_sigma: float
    branches: tuple[Branch, ...]
    temperature: float | None = None
    warnings: list[str] = field(default_factory=list)

    @property
    def contrast(self) -> float:
        return self.model.max_amplitude()

    @property
    def linewidth(self) -> float:
        return float(np.mean([self.model.widths[BRANCHES.index(b)] for b in self.branches]))


@dataclass(frozen=True)
class _Layout:
    branches: tuple[Branch, ...]
    line_count: int
    weights: dict[Branch, np.ndarray]
    mode: AmplitudeMode

    @property
    def offsets(self) -> np.ndarray:
        n = self.line_count
        return np.arange(n, dtype=float) - (n - 1) / 2.0

    def amplitudes(self, branch: Branch, p: Mapping[str, float]) -> np.ndarray:
        tag = branch.value
        if self.mode is AmplitudeMode.ratio_binomial:
            return p[f"s_{tag}"] * self.weights[branch]
        return np.array([p[f"a_{tag}_{k}"] for k in range(self.line_count)])

    def amplitude_names(self, branch: Branch) -> list[str]:
        if self.mode is AmplitudeMode.ratio_binomial:
            return [f"s_{branch.value}"]
        return [f"a_{branch.value}_{k}" for k in range(self.line_count)]

    def unit_columns(self, nu: np.ndarray, branch: Branch, center: float, split: float, width: float) -> np.ndarray:
        """Design columns for the linear amplitude problem of one branch."""
        lines = lorentzian(nu[:, None], center + self.offsets[None, :] * split, width, 1.0)
        if self.mode is AmplitudeMode.ratio_binomial:
            return (lines @ self.weights[branch])[:, None]
        return lines

    def model(self, nu: np.ndarray, p: Mapping[str, float]) -> np.ndarray:
        split = p["split"]
        if split <= 0:
            raise DataError("hyperfine splitting must be > 0")
        out = np.zeros_like(nu)
        for branch in self.branches:
            width = p[f"w_{branch.value}"]
            if width <= 0:
                raise DataError("linewidth must be > 0")
            positions = p[f"f_{branch.value}"] + self.offsets * split
            out = out + lorentzian(nu[:, None], positions[None, :], width, self.amplitudes(branch, p)[None, :]).sum(axis=1)
        return out


def _line_weights(isotope: Isotope, overrides: Mapping[Branch, Sequence[float]] | None) -> dict[Branch, np.ndarray]:
    base = multiplicity_weights(isotope)
    out = {}
    for branch in BRANCHES:
        w = np.asarray(overrides[branch], dtype=float) if overrides and branch in overrides else base
        if w.shape != base.shape or np.any(w < 0) or w.max() <= 0:
            raise DataError(f"line weights for {branch.value} must be {base.size} nonnegative values, got {w}")
        out[branch] = w / w.max()
    return out


def _pick_groups(
    f: np.ndarray, smooth: np.ndarray, nominal: float, branches: tuple[Branch, ...] | None, zfs_hint: float
) -> tuple[dict[Branch, np.ndarray], np.ndarray]:
    top = float(smooth.max())
    peaks, _ = find_peaks(smooth, prominence=PICK_PROMINENCE * top)
    if peaks.size == 0:
        peaks = np.array([int(np.argmax(smooth))])
    pf = f[peaks]
    gaps = np.diff(pf)

    split_at = None
    if gaps.size:
        j = int(np.argmax(gaps))
        others = np.delete(gaps, j)
        reference = float(np.median(others)) if others.size else nominal
        if gaps[j] > 2.5 * reference:
            split_at = j + 1

    if branches is None:
        if split_at is not None:
            branches = BRANCHES
        else:
            branches = (Branch.minus,) if pf.mean() < zfs_hint else (Branch.plus,)

    if len(branches) == 2:
        if split_at is not None:
            groups = {Branch.minus: pf[:split_at], Branch.plus: pf[split_at:]}
        else:
            mirrored = 2.0 * zfs_hint - pf
            low_side = pf.mean() < zfs_hint
            groups = {
                Branch.minus: pf if low_side else np.sort(mirrored),
                Branch.plus: np.sort(mirrored) if low_side else pf,
            }
    else:
        groups = {branches[0]: pf}
    return groups, peaks


def _initial_guess(
    spectrum: OdmrSpectrum,
    layout_for,
    isotope: Isotope,
    branches: tuple[Branch, ...] | None,
    zfs_hint: float,
) -> tuple[_Layout, dict[str, float], list[str]]:
    f, c = spectrum.as_arrays()
    df = float(np.median(np.diff(f)))
    smooth = uniform_filter1d(c, size=min(SMOOTH_WINDOW, c.size), mode="nearest")
    top = float(smooth.max())
    if top <= 0:
        raise DataError("spectrum has no positive contrast")
    nominal = NOMINAL_SPLITTING[isotope]

    groups, peaks = _pick_groups(f, smooth, nominal, branches, zfs_hint)
    layout: _Layout = layout_for(tuple(b for b in BRANCHES if b in groups))

    spacings = np.concatenate([np.diff(g) for g in groups.values()])
    split = float(np.median(spacings)) if spacings.size else nominal
    widths = peak_widths(smooth, peaks, rel_height=0.5)[0] * df
    width = float(np.median(widths)) if widths.size else split / 3.0
    width = float(np.clip(width, 2.0 * df, max(split, 2.0 * df)))

    warnings: list[str] = []
    resolvable, _ = find_peaks(smooth, prominence=RESOLVE_PROMINENCE * top)
    expected = layout.line_count * len(layout.branches)
    if resolvable.size < expected:
        warnings.append(
            f"only {resolvable.size} resolvable peaks for {expected} model lines; fit may be ill-conditioned"
        )

    # the picked peaks need not straddle the group center: try half-spacing shifts
    base = {b: float(np.mean(groups[b])) for b in layout.branches}
    best: tuple[float, dict[Branch, float], np.ndarray] | None = None
    for shifts in itertools.product(range(-2, 3), repeat=len(layout.branches)):
        centers = {b: base[b] + k * split / 2.0 for b, k in zip(layout.branches, shifts)}
        if len(layout.branches) == 2 and centers[Branch.minus] >= centers[Branch.plus]:
            continue
        design = np.hstack([layout.unit_columns(f, b, centers[b], split, width) for b in layout.branches])
        coef, rnorm = nnls(design, c)
        if best is None or rnorm < best[0]:
            best = (rnorm, centers, coef)
    if best is None:
        raise DataError("could not place the branch groups; supply an explicit init")
    _, centers, coef = best

    init: dict[str, float] = {"split": split}
    offset = 0
    for branch in layout.branches:
        tag = branch.value
        init[f"f_{tag}"] = centers[branch]
        init[f"w_{tag}"] = width
        for name in layout.amplitude_names(branch):
            init[name] = max(float(coef[offset]), 1e-3 * top)
            offset += 1
    return layout, init, warnings


def _init_from_params(layout: _Layout, params: OdmrModelParams) -> dict[str, float]:
    init: dict[str, float] = {"split": params.hyperfine_splitting}
    for branch in layout.branches:
        g = BRANCHES.index(branch)
        tag = branch.value
        init[f"f_{tag}"] = params.branch_centers[g]
        init[f"w_{tag}"] = params.widths[g]
        amps = params.amplitudes[g]
        if layout.mode is AmplitudeMode.ratio_binomial:
            init[f"s_{tag}"] = max(amps)
        else:
            init.update({f"a_{tag}_{k}": a for k, a in enumerate(amps)})
    return init


def _to_model_params(layout: _Layout, values: Mapping[str, float]) -> OdmrModelParams:
    split = values["split"]
    n = layout.line_count
    centers: dict[Branch, float] = {}
    widths: dict[Branch, float] = {}
    amplitudes: dict[Branch, tuple[float, ...]] = {}
    for branch in layout.branches:
        centers[branch] = values[f"f_{branch.value}"]
        widths[branch] = values[f"w_{branch.value}"]
        amplitudes[branch] = tuple(float(a) for a in np.clip(layout.amplitudes(branch, values), 0.0, None))
    if len(layout.branches) == 1:
        active = layout.branches[0]
        other = Branch.plus if active is Branch.minus else Branch.minus
        gap = 1.0 + n * split
        centers[other] = centers[active] + (gap if other is Branch.plus else -gap)
        widths[other] = widths[active]
        amplitudes[other] = (0.0,) * n
    return OdmrModelParams(
        branch_centers=(centers[Branch.minus], centers[Branch.plus]),
        hyperfine_splitting=split,
        widths=(widths[Branch.minus], widths[Branch.plus]),
        amplitudes=(amplitudes[Branch.minus], amplitudes[Branch.plus]),
        line_count=n,
    )


def _d_sigma(result: FitResult) -> float:
    names = list(result.params)
    cov = result.covariance_matrix()
    i, j = names.index("f_minus"), names.index("f_plus")
    var = cov[i, i] + cov[j, j] + 2.0 * cov[i, j]
    return 0.5 * float(np.sqrt(max(var, 0.0)))


def fit_odmr(
    spectrum: OdmrSpectrum,
    isotope: Isotope | str = Isotope.N15,
    amplitude_mode: AmplitudeMode | str = AmplitudeMode.ratio_binomial,
    init: OdmrModelParams | None = None,
    *,
    branches: Sequence[Branch | str] | None = None,
    line_weights: Mapping[Branch, Sequence[float]] | None = None,
    zfs_hint: float = DEFAULT_ZFS_HINT,
    options: FitOptions = DEFAULT_OPTIONS,
) -> OdmrFit:
    """
    Fit one spectrum; returns the fitted model, D (mean of the group centers, None for
    single-branch spectra) and |A_zz| (the common spacing).

    Without `init` the starting point comes from peak picking on a smoothed copy of
    the data. `line_weights` replaces the multiplicity ratio per branch (e.g. with
    polarized binomial weights) in ratio_binomial mode.
    """
    isotope = Isotope(isotope)
    mode = AmplitudeMode(amplitude_mode)
    if len(spectrum) < MIN_FIT_SAMPLES:
        raise DataError(f"spectrum needs >= {MIN_FIT_SAMPLES} samples to fit, got {len(spectrum)}")
    weights = _line_weights(isotope, line_weights)

    def layout_for(active: tuple[Branch, ...]) -> _Layout:
        return _Layout(branches=active, line_count=isotope.lines_per_branch, weights=weights, mode=mode)

    requested = tuple(Branch(b) for b in branches) if branches is not None else None
    if requested is not None:
        requested = tuple(b for b in BRANCHES if b in requested)
        if not requested:
            raise DataError("at least one branch must be fitted")

    if init is not None:
        if init.line_count != isotope.lines_per_branch:
            raise DataError(f"init has {init.line_count} lines per branch, {isotope.value} needs {isotope.lines_per_branch}")
        active = requested or tuple(BRANCHES[g] for g in init.active_branches())
        if not active:
            raise DataError("init has no active branch")
        layout = layout_for(active)
        start = _init_from_params(layout, init)
        warnings: list[str] = []
    else:
        layout, start, warnings = _initial_guess(spectrum, layout_for, isotope, requested, zfs_hint)

    f, c = spectrum.as_arrays()
    bounds: dict[str, tuple[float | None, float | None]] = {"split": (1e-6, None)}
    for branch in layout.branches:
        bounds[f"w_{branch.value}"] = (1e-6, None)
        bounds.update({name: (0.0, None) for name in layout.amplitude_names(branch)})

    result = least_squares_fit(layout.model, series(f, c), start, bounds=bounds, options=options)
    warnings = warnings + result.warnings
    if not result.converged:
        warnings.append("ODMR fit did not converge")
    for message in warnings:
        logger.warning("fit_odmr (T=%s): %s", spectrum.temperature, message)

    values = result.all_values()
    if len(layout.branches) == 2 and values["f_minus"] >= values["f_plus"]:
        raise DataError("fitted branch centers crossed; supply an explicit init")
    model = _to_model_params(layout, values)
    both = len(layout.branches) == 2
    return OdmrFit(
        result=result,
        model=model,
        d=model.zfs if both else None,
        d_sigma=_d_sigma(result) if both else None,
        a_zz=abs(values["split"]),
        a_zz_sigma=result.sigma("split"),
        branches=layout.branches,
        temperature=spectrum.temperature,
        warnings=warnings,
    )
