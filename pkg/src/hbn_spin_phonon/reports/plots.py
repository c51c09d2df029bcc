from __future__ import annotations

import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from hbn_spin_phonon.domain.report import DatasetReport  # noqa: E402
from hbn_spin_phonon.fitting.relaxation import relaxation_model_eval  # noqa: E402
from hbn_spin_phonon.fitting.thermal import thermal_model_eval  # noqa: E402

logger = logging.getLogger(__name__)

# byte-identical SVGs across runs
SVG_RC = {"svg.hashsalt": "hbn-spin-phonon", "svg.fonttype": "path"}

_LABELS = {
    "zfs_thermal": ("D (MHz)", "Zero-field splitting"),
    "azz_thermal": ("|A_zz| (MHz)", "Hyperfine splitting"),
    "relaxation": ("Gamma = 1/T1 (1/ms)", "Relaxation rate"),
}


def _save(fig, path: Path) -> Path:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def plot_dataset(report: DatasetReport, out_dir: Path) -> list[Path]:
    """Data points plus fitted curve for every model the dataset has data for."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    with matplotlib.rc_context(SVG_RC):
        for name, points in sorted(report.series.items()):
            if not points or name not in _LABELS:
                continue
            ylabel, title = _LABELS[name]
            t = np.array([p.x for p in points])
            y = np.array([p.y for p in points])
            fig, ax = plt.subplots(figsize=(5.0, 3.6))
            sig = [p.sigma_y for p in points]
            if all(s is not None for s in sig):
                ax.errorbar(t, y, yerr=sig, fmt="o", ms=4, capsize=2, label="data")
            else:
                ax.plot(t, y, "o", ms=4, label="data")

            grid = np.linspace(max(t.min() * 0.9, 1.0), t.max() * 1.05, 300)
            curve = None
            if name in report.thermal:
                curve = thermal_model_eval(report.thermal[name], grid)
            elif name == "relaxation" and report.relaxation is not None:
                curve = relaxation_model_eval(report.relaxation, grid)
            if curve is not None:
                ax.plot(grid, curve, "-", lw=1.2, label="fit")
            if name == "relaxation":
                ax.set_yscale("log")

            ax.set_xlabel("T (K)")
            ax.set_ylabel(ylabel)
            ax.set_title(f"{report.label}: {title}")
            ax.grid(True, alpha=0.3)
            ax.legend(frameon=False)
            fig.tight_layout()
            written.append(_save(fig, out_dir / f"{report.label}_{name}.svg"))
    logger.debug("plots for %s: %s", report.label, [p.name for p in written])
    return written
