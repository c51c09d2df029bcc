from __future__ import annotations

import pytest

from hbn_spin_phonon.config import RunConfig
from hbn_spin_phonon.domain.dataset import Dataset
from hbn_spin_phonon.domain.report import AGGREGATE_LABEL, RunReport
from hbn_spin_phonon.errors import DataError
from hbn_spin_phonon.pipeline import aggregate_models, run_dataset, run_pipeline, synthesize_dataset
from hbn_spin_phonon.pipeline.synthetic import SYNTHETIC_ZFS
from hbn_spin_phonon.reports import render_report_text, write_report


@pytest.fixture(scope="module")
def config() -> RunConfig:
    return RunConfig(workers=1, plots=False)


@pytest.fixture(scope="module")
def synthetic(config) -> Dataset:
    return synthesize_dataset(config, seed=7)


@pytest.fixture(scope="module")
def report(config, synthetic):
    return run_dataset(config, synthetic)


def test_synthetic_dataset_shape(synthetic):
    assert len(synthetic.spectra) == 12
    assert len(synthetic.traces) == 12
    assert synthetic.provenance[0].startswith("synthetic")


def test_pipeline_recovers_thermal_model(report):
    assert report.model_value("zfs_thermal", "homega_mev") == pytest.approx(SYNTHETIC_ZFS.homega, rel=0.05)
    assert report.model_value("zfs_thermal", "c_nu") == pytest.approx(SYNTHETIC_ZFS.c_nu, rel=0.05)
    nu0 = report.model_value("zfs_thermal", "nu0")
    c = report.model_value("zfs_thermal", "c_nu")
    assert report.model_value("zfs_thermal", "nu_0k") == pytest.approx(nu0 + c / 2, abs=1e-9)


def test_pipeline_stages_and_rows(report):
    for name in ("odmr", "t1", "zfs_thermal", "azz_thermal", "susceptibility", "relaxation", "sensitivity"):
        stage = report.stage(name)
        assert stage is not None and stage.ok, name
    assert [row.temperature_k for row in report.rows] == sorted(row.temperature_k for row in report.rows)
    assert all(row.d_mhz is not None and row.t1_ms is not None for row in report.rows)
    assert report.model_value("susceptibility", "chi_mhz_per_k") < 0
    # nearest grid temperature to 300 K
    assert report.model_value("sensitivity", "temperature_k") == pytest.approx(10.0 + 9 * 340.0 / 11)
    assert report.model_value("relaxation", "a_1") == pytest.approx(4.0, rel=0.1)


def test_spectra_only_skips_relaxation(config, synthetic):
    spectra_only = synthetic.model_copy(update={"traces": [], "label": "SPEC"})
    out = run_dataset(config, spectra_only)
    assert out.stage("t1").skipped
    assert out.stage("zfs_thermal").ok
    assert out.stage("relaxation") is None
    assert all(row.t1_ms is None for row in out.rows)
    text = render_report_text(RunReport(datasets=[out]))
    assert "skipped: no relaxation traces" in text


def test_removing_a_temperature_changes_only_its_row(config, synthetic, report):
    trimmed = synthetic.model_copy(update={"spectra": synthetic.spectra[1:], "traces": synthetic.traces[1:]})
    other = run_dataset(config, trimmed)
    assert other.rows == report.rows[1:]


def test_identical_datasets_aggregate_to_zero_std(config, synthetic):
    second = synthetic.model_copy(update={"label": "SYN2"})
    run = run_pipeline(config, [synthetic, second])
    assert run.aggregates
    assert all(row.dataset == AGGREGATE_LABEL for row in run.aggregates)
    assert all(row.sigma == 0.0 for row in run.aggregates)


def test_aggregate_sample_std(report):
    a = report.model_copy(update={"models": [m.model_copy(update={"value": 1.0}) for m in report.models[:1]]})
    b = report.model_copy(update={"models": [m.model_copy(update={"value": 3.0}) for m in report.models[:1]]})
    (row,) = aggregate_models([a, b])
    assert row.value == pytest.approx(2.0)
    assert row.sigma == pytest.approx(2**0.5)


def test_pipeline_rejects_duplicate_labels_and_empty(config, synthetic):
    with pytest.raises(DataError):
        run_pipeline(config, [synthetic, synthetic])
    with pytest.raises(DataError):
        run_dataset(config, Dataset(label="EMPTY"))


def test_pipeline_is_deterministic(tmp_path):
    cfg = RunConfig(workers=2, plots=False, seed=3)
    outputs = []
    for run in ("a", "b"):
        data = synthesize_dataset(cfg)
        written = write_report(run_pipeline(cfg, data), tmp_path / run, plots=False)
        outputs.append({p.name: p.read_bytes() for p in written})
    assert outputs[0] == outputs[1]
    assert set(outputs[0]) == {"fits.csv", "models.csv", "report.txt"}


def test_write_report_outputs(tmp_path, config, report):
    run = RunReport(config=config.as_dict(), datasets=[report])
    written = write_report(run, tmp_path, plots=True)
    names = {p.name for p in written}
    assert {"fits.csv", "models.csv", "report.txt"} <= names
    assert "SYN1_zfs_thermal.svg" in names
    models = (tmp_path / "models.csv").read_text()
    for parameter in ("nu0", "c_nu", "homega_mev"):
        assert f"zfs_thermal,{parameter}," in models
    assert "nu(0 K) = nu0 + c/2" in (tmp_path / "report.txt").read_text()


def test_plots_off_writes_no_svg(tmp_path, config, report):
    write_report(RunReport(datasets=[report]), tmp_path, plots=False)
    assert not list(tmp_path.glob("*.svg"))


def test_empty_report_headers_only(tmp_path):
    write_report(RunReport(), tmp_path, plots=True)
    assert len((tmp_path / "fits.csv").read_text().splitlines()) == 1
    assert len((tmp_path / "models.csv").read_text().splitlines()) == 1
    assert "(no datasets)" in (tmp_path / "report.txt").read_text()
