from __future__ import annotations

import numpy as np
import pytest

from hbn_spin_phonon.domain.spectrum import OdmrModelParams
from hbn_spin_phonon.domain.spin import Isotope
from hbn_spin_phonon.spin.transitions import multiplicity_weights


def n15_params(
    f_minus: float = 3228.0,
    f_plus: float = 3732.0,
    split: float = 64.0,
    width: float = 20.0,
    contrast: float = 0.08,
) -> OdmrModelParams:
    """1:3:3:1 lines per branch; weights sum to 1, so the tallest line is 3/8 of `contrast`."""
    amps = tuple(float(contrast * w) for w in multiplicity_weights(Isotope.N15))
    return OdmrModelParams(
        branch_centers=(f_minus, f_plus),
        hyperfine_splitting=split,
        widths=(width, width),
        amplitudes=(amps, amps),
        line_count=4,
    )


def single_peak_params(center: float = 3480.0, fwhm: float = 20.0, amplitude: float = 0.1) -> OdmrModelParams:
    """One active line: the minus branch's first line at `center`, everything else zero."""
    split = 1000.0
    return OdmrModelParams(
        branch_centers=(center + 1.5 * split, center + 1.5 * split + 10_000.0),
        hyperfine_splitting=split,
        widths=(fwhm, fwhm),
        amplitudes=((amplitude, 0.0, 0.0, 0.0), (0.0, 0.0, 0.0, 0.0)),
        line_count=4,
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def odmr_grid() -> np.ndarray:
    return np.arange(3000.0, 3960.0 + 1e-9, 2.0)
