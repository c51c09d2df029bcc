from __future__ import annotations

import numpy as np
import pytest
from pydantic import ValidationError

from hbn_spin_phonon.analysis.lineshape import synthesize_spectrum
from hbn_spin_phonon.analysis.polarization import (
    Ordering,
    PolarizationState,
    binomial_weights,
    branch_ordering,
    eslac_field,
    extract_polarization,
    flip_flop_coefficients,
    polarization_series,
    polarized_amplitude_model,
)
from hbn_spin_phonon.domain.spectrum import OdmrModelParams
from hbn_spin_phonon.domain.spin import Branch, HyperfineTensor
from hbn_spin_phonon.errors import DataError


@pytest.mark.parametrize(
    "p,expected",
    [
        (0.5, (1 / 8, 3 / 8, 3 / 8, 1 / 8)),
        (1.0, (0.0, 0.0, 0.0, 1.0)),
        (0.0, (1.0, 0.0, 0.0, 0.0)),
        (0.3, (0.343, 0.441, 0.189, 0.027)),
    ],
)
def test_binomial_weights(p, expected):
    assert binomial_weights(p) == pytest.approx(expected, abs=1e-12)


def test_binomial_weights_rejects_out_of_range():
    with pytest.raises(DataError):
        binomial_weights(1.2)
    with pytest.raises(DataError):
        binomial_weights(-0.1)


def test_polarization_state():
    state = PolarizationState.from_p(0.3)
    assert sum(state.weights) == pytest.approx(1.0)
    with pytest.raises(ValidationError):
        PolarizationState(p_up=0.5, weights=(0.5, 0.5, 0.5, 0.5))


def test_extract_unpolarized_any_scale():
    fit = extract_polarization([2.0, 6.0, 6.0, 2.0])
    assert fit.p == pytest.approx(0.5, abs=1e-9)
    assert fit.residual == pytest.approx(0.0, abs=1e-16)


def test_extract_matches_bruteforce_scan():
    amps = np.array([0.343, 0.441, 0.189, 0.027])
    fit = extract_polarization(amps)
    assert fit.p == pytest.approx(0.3, abs=1e-6)
    grid = np.linspace(0.0, 1.0, 1_000_001)
    k = np.arange(4)
    from scipy.special import comb

    weights = comb(3, k)[None, :] * grid[:, None] ** k * (1 - grid[:, None]) ** (3 - k)
    brute = grid[np.argmin(((weights - amps) ** 2).sum(axis=1))]
    assert fit.p == pytest.approx(brute, abs=1e-6)


def test_extract_descending_order():
    fit = extract_polarization([0.027, 0.189, 0.441, 0.343], Ordering.descending_mI)
    assert fit.p == pytest.approx(0.3, abs=1e-6)
    assert extract_polarization([0.027, 0.189, 0.441, 0.343], "descending_mI").p == pytest.approx(fit.p)


def test_extract_noisy_amplitudes_stay_in_range():
    fit = extract_polarization([0.0, 0.0, 0.1, 5.0])
    assert 0.0 <= fit.p <= 1.0
    assert fit.p > 0.9


@pytest.mark.parametrize("amps", [[1.0, 2.0, 3.0], [0.0, 0.0, 0.0, 0.0], [1.0, -1.0, 1.0, 1.0]])
def test_extract_rejects_bad_amplitudes(amps):
    with pytest.raises(DataError):
        extract_polarization(amps)


def test_branch_ordering():
    assert branch_ordering(Branch.minus) is Ordering.ascending_mI
    assert branch_ordering("plus") is Ordering.descending_mI


def test_polarized_amplitude_model():
    assert polarized_amplitude_model(0.5, Branch.plus) == pytest.approx([1 / 8, 3 / 8, 3 / 8, 1 / 8])
    plus = polarized_amplitude_model(0.3, Branch.plus)
    assert plus[0] == pytest.approx(0.027)
    assert polarized_amplitude_model(0.3, Branch.minus)[0] == pytest.approx(0.343)


@pytest.mark.parametrize("branch", [Branch.minus, Branch.plus])
def test_amplitude_model_round_trip(branch):
    for p in np.linspace(0.0, 1.0, 11):
        amps = polarized_amplitude_model(p, branch)
        assert extract_polarization(amps, branch_ordering(branch)).p == pytest.approx(p, abs=1e-9)


def test_flip_flop_symmetric_tensor():
    coeffs = flip_flop_coefficients(HyperfineTensor(a_xx=3.0, a_yy=3.0))
    assert coeffs.a1 == pytest.approx(1.5)
    assert coeffs.a2 == pytest.approx(0.0)
    assert coeffs.leakage == pytest.approx(0.0)


def test_flip_flop_general_tensor():
    coeffs = flip_flop_coefficients(HyperfineTensor(a_xx=4.0, a_yy=2.0, a_xy=2.0))
    assert coeffs.a1 == pytest.approx(1.5)
    assert coeffs.a2 == pytest.approx(0.5 - 1.0j)
    assert abs(coeffs.a2) == pytest.approx(1.11803, abs=1e-5)


def test_flip_flop_pure_offdiagonal():
    coeffs = flip_flop_coefficients(HyperfineTensor(a_xy=2.0))
    assert coeffs.a1 == 0.0
    assert coeffs.a2 == pytest.approx(-1.0j)
    assert coeffs.leakage is None


@pytest.mark.parametrize("zfs,field", [(2128.0, 760.0), (2.8, 1.0)])
def test_eslac_field(zfs, field):
    assert eslac_field(zfs) == pytest.approx(field)


def test_eslac_field_rejects_zero():
    with pytest.raises(DataError):
        eslac_field(0.0)


def _polarized_spectrum(p: float, label: str):
    model = OdmrModelParams(
        branch_centers=(3228.0, 3732.0),
        hyperfine_splitting=64.0,
        widths=(20.0, 20.0),
        amplitudes=(
            tuple(0.1 * polarized_amplitude_model(p, Branch.minus)),
            tuple(0.1 * polarized_amplitude_model(p, Branch.plus)),
        ),
    )
    return synthesize_spectrum(model, np.arange(3000.0, 3960.1, 2.0), metadata={"label": label})


def test_polarization_series_recovers_p():
    spectra = [_polarized_spectrum(0.5, "low"), _polarized_spectrum(0.3, "high")]
    points = polarization_series(spectra, Branch.plus)
    assert [pt.label for pt in points] == ["low", "high"]
    assert points[0].p == pytest.approx(0.5, abs=1e-4)
    assert points[1].p == pytest.approx(0.3, abs=1e-4)
    assert len(points[1].amplitudes) == 4
