from __future__ import annotations

import math

import numpy as np
import pytest
from pydantic import ValidationError

from hbn_spin_phonon.analysis.phonon_sum import (
    bose_occupation,
    bose_occupation_derivative_energy,
    combine_curvature,
    curvature_from_samples,
    dominant_mode,
    evaluate_mode_sum,
    load_mode_table,
    mode_contributions,
    raman_dominance_ratio,
)
from hbn_spin_phonon.constants import CONSTANTS
from hbn_spin_phonon.domain.phonon import PhononMode, PhononModeTable
from hbn_spin_phonon.errors import DataError


def _table(*pairs, nu0_ref=3600.0):
    modes = tuple(PhononMode(index=i, energy=e, curvature_coeff=c) for i, (e, c) in enumerate(pairs, start=1))
    return PhononModeTable(modes=modes, nu0_ref=nu0_ref)


def test_bose_occupation_values():
    assert bose_occupation(18.4, 0.0) == 0.0
    assert bose_occupation(18.4, 300.0) == pytest.approx(0.96382, rel=1e-4)
    t = 18.4 / CONSTANTS.k_b
    assert bose_occupation(18.4, t) == pytest.approx(1.0 / (math.e - 1.0), rel=1e-12)
    assert bose_occupation(18.4, t) == pytest.approx(0.581977, rel=1e-6)


def test_bose_occupation_broadcasts_and_is_monotone():
    temps = np.linspace(0.0, 400.0, 41)
    n = bose_occupation(18.4, temps)
    assert n.shape == temps.shape
    assert np.all(np.diff(n) >= 0)
    # no overflow warnings at very low temperature
    assert bose_occupation(200.0, 0.5) == 0.0


def test_bose_occupation_rejects_bad_inputs():
    with pytest.raises(DataError):
        bose_occupation(0.0, 300.0)
    with pytest.raises(DataError):
        bose_occupation(18.4, -1.0)


def test_bose_occupation_energy_derivative():
    h = 1e-5
    numeric = (bose_occupation(18.4 + h, 250.0) - bose_occupation(18.4 - h, 250.0)) / (2 * h)
    assert bose_occupation_derivative_energy(18.4, 250.0) == pytest.approx(numeric, rel=1e-6)


def test_single_mode_matches_thermal_model():
    table = _table((18.4, -200.0))
    for t in (0.0, 100.0, 300.0):
        expected = 3600.0 - 200.0 * (bose_occupation(18.4, t) + 0.5)
        assert evaluate_mode_sum(table, t) == pytest.approx(expected, abs=1e-9)
    assert evaluate_mode_sum(table, 300.0) == pytest.approx(3307.24, abs=0.01)


def test_zero_temperature_is_zero_point_shift():
    table = _table((10.0, -50.0), (30.0, -20.0), (55.0, 3.0))
    assert evaluate_mode_sum(table, 0.0) == pytest.approx(3600.0 + 0.5 * (-50.0 - 20.0 + 3.0), abs=1e-12)


def test_two_mode_sum_oracle():
    table = _table((10.0, -50.0), (30.0, -20.0))

    def occupation(e, t):
        return 1.0 / (math.exp(e / (CONSTANTS.k_b * t)) - 1.0)

    expected = 3600.0 - 50.0 * (occupation(10.0, 200.0) + 0.5) - 20.0 * (occupation(30.0, 200.0) + 0.5)
    assert evaluate_mode_sum(table, 200.0) == pytest.approx(expected, abs=1e-9)
    values = evaluate_mode_sum(table, np.array([0.0, 200.0]))
    assert values[1] == pytest.approx(expected, abs=1e-9)


def test_high_temperature_linearity():
    table = _table((10.0, -50.0), (30.0, -20.0))
    t_min = 5 * 30.0 / CONSTANTS.k_b
    temps = np.linspace(t_min, 2 * t_min, 5)
    values = evaluate_mode_sum(table, temps)
    slopes = np.diff(values) / np.diff(temps)
    asymptotic = sum(c * CONSTANTS.k_b / e for e, c in ((10.0, -50.0), (30.0, -20.0)))
    assert slopes == pytest.approx([asymptotic] * 4, rel=0.02)


def test_nu0_override_interpolates():
    table = _table((18.4, -200.0)).model_copy(update={"nu0_override": ((0.0, 3600.0), (400.0, 3580.0))})
    n = bose_occupation(18.4, 200.0)
    assert evaluate_mode_sum(table, 200.0) == pytest.approx(3590.0 - 200.0 * (n + 0.5))


def test_mode_contributions_sorted():
    table = _table((10.0, -5.0), (30.0, -50.0), (50.0, 3.0))
    contributions = mode_contributions(table, 300.0)
    assert contributions[0].mode.curvature_coeff == -50.0
    total = sum(c.shift_mhz for c in contributions)
    assert 3600.0 + total == pytest.approx(evaluate_mode_sum(table, 300.0))


def test_dominant_mode():
    assert dominant_mode(_table((18.4, -200.0))).energy == 18.4
    assert dominant_mode(_table((10.0, -5.0), (30.0, -50.0), (50.0, 3.0))).curvature_coeff == -50.0
    assert dominant_mode(_table((20.0, 7.0), (12.0, -7.0))).energy == 12.0


def test_table_rejects_empty_and_bad_energy():
    with pytest.raises(ValidationError):
        PhononModeTable(modes=())
    with pytest.raises(ValidationError):
        PhononMode(index=1, energy=0.0, curvature_coeff=1.0)


@pytest.mark.parametrize(
    "f,expected",
    [
        (lambda q: 3 + 4 * q**2, 8.0),
        (lambda q: 3 + 4 * q, 0.0),
        (lambda q: q**4, 0.02),
    ],
)
def test_curvature_from_samples(f, expected):
    d = 0.1
    assert curvature_from_samples(f(-d), f(0.0), f(d), d) == pytest.approx(expected, abs=1e-9)


def test_curvature_rejects_nonpositive_step():
    with pytest.raises(DataError):
        curvature_from_samples(1.0, 1.0, 1.0, 0.0)


def test_combine_curvature_is_linear_and_inverse_in_energy():
    base = combine_curvature(10.0, 20.0, 14.0)
    assert combine_curvature(20.0, 20.0, 14.0) == pytest.approx(2 * base)
    assert combine_curvature(10.0, 40.0, 14.0) == pytest.approx(base / 2)
    assert combine_curvature(10.0, 20.0, 28.0) == pytest.approx(base / 2)
    # hbar^2/(M E) for 14 amu at 20 meV is ~0.0148 A^2
    assert base == pytest.approx(0.5 * 10.0 * 0.01481, rel=1e-2)


def test_raman_dominance_ratio_is_small():
    ratio = raman_dominance_ratio(3480.0, 18.4)
    expected = (2 * math.pi * 3480.0 / (18.4 * CONSTANTS.mev_to_mhz)) ** 2
    assert ratio == pytest.approx(expected)
    assert ratio < 1e-4


def test_load_mode_table_combined(tmp_path):
    path = tmp_path / "modes.csv"
    path.write_text("index,energy_mev,curvature_mhz\n1,18.4,-200\n2,30.0,-20\n")
    table = load_mode_table(path, nu0_ref=3600.0)
    assert [m.energy for m in table.modes] == [18.4, 30.0]
    assert table.nu0_ref == 3600.0
    assert table.source_label == str(path)


def test_load_mode_table_raw_columns(tmp_path):
    path = tmp_path / "modes.tsv"
    path.write_text("index\tenergy_mev\td2nu_mhz_per_A2\tmass_amu\n1\t20.0\t10.0\t14.0\n")
    table = load_mode_table(path)
    assert table.modes[0].curvature_coeff == pytest.approx(combine_curvature(10.0, 20.0, 14.0))


def test_load_mode_table_with_override(tmp_path):
    path = tmp_path / "modes.csv"
    path.write_text("index,energy_mev,curvature_mhz\n1,18.4,-200\n")
    override = tmp_path / "nu0.csv"
    override.write_text("temperature_k,nu0_mhz\n400,3580\n0,3600\n")
    table = load_mode_table(path, nu0_ref=3600.0, nu0_override_path=override)
    assert table.nu0_override == ((0.0, 3600.0), (400.0, 3580.0))


@pytest.mark.parametrize(
    "body,message",
    [
        ("index,energy_mev,curvature_mhz\n", "empty"),
        ("index,energy,curvature\n1,2,3\n", "missing columns"),
        ("index,energy_mev,curvature_mhz\n1,abc,3\n", "line(s) 2"),
        ("index,energy_mev,curvature_mhz\n1,18.4,-200\n2,0,-3\n", "zero/negative"),
        ("index,energy_mev,curvature_mhz\n1,18.4,-200\n1,20.0,-3\n", "unique"),
    ],
)
def test_load_mode_table_errors(tmp_path, body, message):
    path = tmp_path / "modes.csv"
    path.write_text(body)
    with pytest.raises(DataError, match=message.replace("(", r"\(").replace(")", r"\)")):
        load_mode_table(path)


def test_raman_dominance_ratio_reference_value():
    assert raman_dominance_ratio(3480.0, 26.0) == pytest.approx(1.2e-5, rel=0.02)
