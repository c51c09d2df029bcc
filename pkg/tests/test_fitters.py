from __future__ import annotations

import numpy as np
import pytest

from conftest import n15_params
from hbn_spin_phonon.analysis.lineshape import synthesize_spectrum
from hbn_spin_phonon.analysis.polarization import polarized_amplitude_model
from hbn_spin_phonon.analysis.phonon_sum import bose_occupation
from hbn_spin_phonon.constants import CONSTANTS
from hbn_spin_phonon.domain.fits import RelaxationMode, RelaxationParams, ThermalModelParams, series
from hbn_spin_phonon.domain.spectrum import OdmrModelParams, OdmrSpectrum
from hbn_spin_phonon.domain.spin import Branch, Isotope
from hbn_spin_phonon.errors import DataError
from hbn_spin_phonon.fitting import (
    AmplitudeMode,
    fit_odmr,
    fit_relaxation,
    fit_susceptibility,
    fit_t1_trace,
    fit_thermal,
    relaxation_model_eval,
    t1_from_rate,
    thermal_model_derivative,
    thermal_model_eval,
    zero_kelvin_value,
)
from hbn_spin_phonon.fitting.thermal import initial_guess, params_from_result

THERMAL_TRUTH = ThermalModelParams(nu0=3600.0, c_nu=-200.0, homega=18.4)


# ---- ODMR ----------------------------------------------------------------


def test_fit_odmr_noiseless_n15(odmr_grid):
    spectrum = synthesize_spectrum(n15_params(), odmr_grid)
    fit = fit_odmr(spectrum, Isotope.N15)
    assert fit.d == pytest.approx(3480.0, abs=1e-4)
    assert fit.a_zz == pytest.approx(64.0, abs=1e-4)
    assert fit.branches == (Branch.minus, Branch.plus)
    assert fit.linewidth == pytest.approx(20.0, abs=1e-4)
    assert fit.contrast == pytest.approx(0.08 * 3 / 8, rel=1e-4)


def test_fit_odmr_translation(odmr_grid):
    base = fit_odmr(synthesize_spectrum(n15_params(), odmr_grid), Isotope.N15)
    shifted = fit_odmr(synthesize_spectrum(n15_params(3238.0, 3742.0), odmr_grid), Isotope.N15)
    assert shifted.d - base.d == pytest.approx(10.0, abs=1e-4)
    assert shifted.a_zz == pytest.approx(base.a_zz, abs=1e-4)


def test_fit_odmr_free_amplitudes(odmr_grid):
    truth = n15_params()
    fit = fit_odmr(synthesize_spectrum(truth, odmr_grid), Isotope.N15, AmplitudeMode.free)
    for got, want in zip(fit.model.amplitudes, truth.amplitudes):
        assert got == pytest.approx(want, abs=1e-6)
    assert fit.d == pytest.approx(3480.0, abs=1e-4)


def test_fit_odmr_single_branch(odmr_grid):
    truth = OdmrModelParams(
        branch_centers=(3228.0, 3732.0),
        hyperfine_splitting=64.0,
        widths=(20.0, 20.0),
        amplitudes=((0.02, 0.06, 0.06, 0.02), (0.0, 0.0, 0.0, 0.0)),
    )
    fit = fit_odmr(synthesize_spectrum(truth, odmr_grid), Isotope.N15)
    assert fit.branches == (Branch.minus,)
    assert fit.d is None
    assert fit.model.branch_centers[0] == pytest.approx(3228.0, abs=1e-4)
    assert fit.a_zz == pytest.approx(64.0, abs=1e-4)


def test_fit_odmr_n14_with_init():
    weights = np.array([1, 3, 6, 7, 6, 3, 1]) / 7.0
    truth = OdmrModelParams(
        branch_centers=(3228.0, 3732.0),
        hyperfine_splitting=47.0,
        widths=(20.0, 20.0),
        amplitudes=(tuple(0.05 * weights), tuple(0.05 * weights)),
        line_count=7,
    )
    grid = np.arange(2950.0, 4010.1, 2.0)
    init = truth.model_copy(update={"branch_centers": (3220.0, 3740.0), "hyperfine_splitting": 45.0})
    fit = fit_odmr(synthesize_spectrum(truth, grid), Isotope.N14, init=init)
    assert fit.d == pytest.approx(3480.0, abs=1e-4)
    assert fit.a_zz == pytest.approx(47.0, abs=1e-4)


def test_fit_odmr_polarized_line_weights(odmr_grid):
    weights = {branch: polarized_amplitude_model(0.3, branch) for branch in (Branch.minus, Branch.plus)}
    truth = OdmrModelParams(
        branch_centers=(3228.0, 3732.0),
        hyperfine_splitting=64.0,
        widths=(20.0, 20.0),
        amplitudes=tuple(tuple(float(0.08 * w) for w in weights[b]) for b in (Branch.minus, Branch.plus)),
    )
    init = truth.model_copy(update={"branch_centers": (3222.0, 3738.0), "hyperfine_splitting": 61.0})

    exact = fit_odmr(synthesize_spectrum(truth, odmr_grid), Isotope.N15, init=init, line_weights=weights)
    assert exact.d == pytest.approx(3480.0, abs=1e-4)
    assert exact.a_zz == pytest.approx(64.0, abs=1e-4)

    noisy_spectrum = synthesize_spectrum(truth, odmr_grid, noise_sigma=0.05 * truth.max_amplitude(), seed=5)
    noisy = fit_odmr(noisy_spectrum, Isotope.N15, init=init, line_weights=weights)
    assert abs(noisy.d - 3480.0) <= 3.0 * noisy.d_sigma
    assert abs(noisy.a_zz - 64.0) <= 3.0 * noisy.a_zz_sigma


def test_fit_odmr_too_few_samples():
    spectrum = OdmrSpectrum.from_arrays(np.arange(5.0), np.zeros(5))
    with pytest.raises(DataError):
        fit_odmr(spectrum, Isotope.N15)


def test_fit_odmr_flat_spectrum_rejected(odmr_grid):
    spectrum = OdmrSpectrum.from_arrays(odmr_grid, np.zeros(odmr_grid.size))
    with pytest.raises(DataError):
        fit_odmr(spectrum, Isotope.N15)


@pytest.mark.slow
def test_fit_odmr_monte_carlo(odmr_grid):
    truth = n15_params()
    inside = 0
    for seed in range(100):
        spectrum = synthesize_spectrum(truth, odmr_grid, noise_sigma=0.05 * truth.max_amplitude(), seed=seed)
        fit = fit_odmr(spectrum, Isotope.N15)
        if abs(fit.d - 3480.0) <= 3.0 * fit.d_sigma:
            inside += 1
    assert inside >= 90


# ---- thermal -------------------------------------------------------------


def _thermal_points(temps, params=THERMAL_TRUTH):
    return series(temps, thermal_model_eval(params, np.asarray(temps, dtype=float)))


def test_thermal_model_values():
    assert thermal_model_eval(THERMAL_TRUTH, 300.0) == pytest.approx(3307.24, abs=0.01)
    assert thermal_model_eval(THERMAL_TRUTH, 0.0) == pytest.approx(3500.0)
    assert zero_kelvin_value(THERMAL_TRUTH) == pytest.approx(3500.0)


def test_thermal_derivative_matches_finite_difference():
    h = 1e-3
    numeric = (thermal_model_eval(THERMAL_TRUTH, 300.0 + h) - thermal_model_eval(THERMAL_TRUTH, 300.0 - h)) / (2 * h)
    assert thermal_model_derivative(THERMAL_TRUTH, 300.0) == pytest.approx(numeric, rel=1e-6)


def test_thermal_round_trip():
    temps = list(range(10, 350, 40)) + [350]
    points = _thermal_points(temps)
    result = fit_thermal(points, initial_guess(points))
    fitted = params_from_result(result)
    assert fitted.nu0 == pytest.approx(3600.0, rel=1e-3)
    assert fitted.c_nu == pytest.approx(-200.0, rel=1e-3)
    assert fitted.homega == pytest.approx(18.4, rel=1e-3)
    assert result.converged


def test_fitted_thermal_model_is_decreasing(rng):
    temps = np.linspace(10.0, 350.0, 18)
    points = series(temps, thermal_model_eval(THERMAL_TRUTH, temps) + rng.normal(0.0, 0.5, temps.size))
    fitted = params_from_result(fit_thermal(points, initial_guess(points)))
    assert fitted.c_nu < 0
    # below ~20 K the thermal shift is under float resolution at 3.5 GHz
    grid = np.linspace(20.0, 500.0, 5000)
    assert np.all(np.diff(thermal_model_eval(fitted, grid)) < 0)


def test_thermal_fixed_homega():
    temps = list(range(10, 350, 40)) + [350]
    points = _thermal_points(temps)
    init = ThermalModelParams(nu0=3590.0, c_nu=-150.0, homega=18.4)
    result = fit_thermal(points, init, fixed={"homega": 18.4})
    assert "homega" not in result.params
    assert result.value("c_nu") == pytest.approx(-200.0, rel=1e-6)


@pytest.mark.parametrize("temps", [[100.0, 120.0, 140.0, 160.0], [10.0, 50.0, 90.0]])
def test_thermal_preconditions(temps):
    with pytest.raises(DataError):
        fit_thermal(_thermal_points(temps), THERMAL_TRUTH)


# ---- susceptibility ------------------------------------------------------


def test_susceptibility_exact_line():
    temps = np.arange(250.0, 351.0, 10.0)
    sus = fit_susceptibility(series(temps, 3500.0 - 0.77 * temps))
    assert sus.chi == pytest.approx(-0.77, abs=1e-12)
    assert sus.n_points == 11


def test_susceptibility_against_analytic_derivative():
    temps = np.arange(250.0, 351.0, 10.0)
    sus = fit_susceptibility(_thermal_points(temps))
    x = THERMAL_TRUTH.homega / (CONSTANTS.k_b * 300.0)
    analytic = THERMAL_TRUTH.c_nu * (x / 300.0) * np.exp(x) / np.expm1(x) ** 2
    assert sus.chi == pytest.approx(analytic, rel=0.1)


def test_susceptibility_window_filters_points():
    temps = np.array([10.0, 100.0, 260.0, 300.0, 340.0])
    nus = np.array([0.0, 0.0, 260.0, 300.0, 340.0]) * 2.0
    assert fit_susceptibility(series(temps, nus)).chi == pytest.approx(2.0)


def test_susceptibility_errors():
    with pytest.raises(DataError):
        fit_susceptibility(series([10.0, 20.0, 30.0], [1.0, 2.0, 3.0]))
    with pytest.raises(DataError):
        fit_susceptibility(series([260.0, 300.0, 340.0], [1.0, 2.0, 3.0]), t_min=350.0, t_max=250.0)


# ---- T1 ------------------------------------------------------------------


def test_t1_exact_decay():
    t = np.linspace(0.0, 10.0, 10)
    fit = fit_t1_trace(series(t, 0.2 + 0.8 * np.exp(-t / 2.5)))
    assert fit.t1 == pytest.approx(2.5, rel=1e-6)
    assert not fit.flagged


def test_t1_recovery_trace():
    t = np.linspace(0.0, 10.0, 10)
    fit = fit_t1_trace(series(t, 1.0 - 0.8 * np.exp(-t / 2.5)))
    assert fit.t1 == pytest.approx(2.5, rel=1e-6)
    assert fit.result.value("c1") == pytest.approx(-0.8, rel=1e-6)


def test_t1_constant_signal_flagged():
    fit = fit_t1_trace(series(np.linspace(0.0, 10.0, 10), np.full(10, 0.5)))
    assert fit.flagged
    assert fit.t1 is None


def test_t1_preconditions():
    with pytest.raises(DataError):
        fit_t1_trace(series([0.0, 1.0, 2.0], [1.0, 0.5, 0.2]))
    with pytest.raises(DataError):
        fit_t1_trace(series([0.0, 2.0, 1.0, 3.0, 4.0], [1.0, 0.5, 0.6, 0.2, 0.1]))


# ---- relaxation ----------------------------------------------------------

RELAX_TRUTH = RelaxationParams(modes=(RelaxationMode(a=4.0, homega=18.4),), a_s=0.01)


def _rate_points(params=RELAX_TRUTH):
    temps = np.arange(60.0, 351.0, 10.0)
    return series(temps, relaxation_model_eval(params, temps))


def test_relaxation_zero_temperature_limit():
    assert relaxation_model_eval(RELAX_TRUTH, 0.0) == pytest.approx(0.01)


def test_relaxation_fixed_energy_round_trip():
    params, result = fit_relaxation(_rate_points(), homega=18.4)
    assert params.modes[0].a == pytest.approx(4.0, rel=1e-3)
    assert params.a_s == pytest.approx(0.01, rel=1e-3)
    assert result.fixed == {"homega_1": 18.4}


def test_relaxation_free_energy_round_trip():
    params, result = fit_relaxation(_rate_points())
    assert params.modes[0].homega == pytest.approx(18.4, rel=1e-3)
    assert params.modes[0].a == pytest.approx(4.0, rel=1e-3)
    assert result.converged


def test_relaxation_high_temperature_power_law():
    params, _ = fit_relaxation(_rate_points(), homega=18.4)
    no_floor = params.model_copy(update={"a_s": 0.0})
    ratio = relaxation_model_eval(no_floor, 300.0) / relaxation_model_eval(no_floor, 150.0)
    assert ratio == pytest.approx(4.0, rel=0.15)


def test_relaxation_two_modes():
    truth = RelaxationParams(modes=(RelaxationMode(a=4.0, homega=18.4), RelaxationMode(a=20.0, homega=60.0)), a_s=0.02)
    params, _ = fit_relaxation(_rate_points(truth), homega=[18.4, 60.0], mode_count=2)
    assert [m.a for m in params.modes] == pytest.approx([4.0, 20.0], rel=1e-3)


def test_relaxation_preconditions():
    with pytest.raises(DataError):
        fit_relaxation(series([100.0, 200.0, 300.0], [1.0, 2.0, 3.0]))
    with pytest.raises(DataError):
        fit_relaxation(series([100.0, 150.0, 200.0, 300.0], [1.0, 0.0, 2.0, 3.0]))


def test_t1_from_rate():
    assert t1_from_rate(0.5) == pytest.approx(2.0)
    with pytest.raises(DataError):
        t1_from_rate(0.0)
    n = bose_occupation(18.4, 300.0)
    assert t1_from_rate(4.0 * n * (n + 1)) == pytest.approx(1 / (4.0 * n * (n + 1)))


@pytest.mark.slow
def test_thermal_monte_carlo_median_energy():
    temps = np.linspace(10.0, 350.0, 12)
    clean = thermal_model_eval(THERMAL_TRUTH, temps)
    energies = []
    for seed in range(100):
        noisy = clean + np.random.default_rng(seed).normal(0.0, 0.1, temps.size)
        points = series(temps, noisy)
        fitted = params_from_result(fit_thermal(points, initial_guess(points)))
        assert zero_kelvin_value(fitted) == pytest.approx(fitted.nu0 + 0.5 * fitted.c_nu, abs=1e-9)
        energies.append(fitted.homega)
    assert np.median(energies) == pytest.approx(18.4, rel=0.05)
