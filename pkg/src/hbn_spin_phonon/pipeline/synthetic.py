from __future__ import annotations

import logging

import numpy as np

from hbn_spin_phonon.analysis.lineshape import synthesize_spectrum
from hbn_spin_phonon.config import RunConfig
from hbn_spin_phonon.constants import CONSTANTS
from hbn_spin_phonon.domain.dataset import Dataset, RelaxationTrace
from hbn_spin_phonon.domain.fits import RelaxationMode, RelaxationParams, ThermalModelParams
from hbn_spin_phonon.domain.spectrum import OdmrModelParams
from hbn_spin_phonon.fitting.relaxation import relaxation_model_eval
from hbn_spin_phonon.fitting.thermal import thermal_model_eval
from hbn_spin_phonon.spin.transitions import multiplicity_weights

logger = logging.getLogger(__name__)

# D(300 K) ~ 3480 MHz and |A_zz|(300 K) ~ 64 MHz for h10B15N-class samples
SYNTHETIC_ZFS = ThermalModelParams(nu0=3772.8, c_nu=-200.0, homega=18.4)
SYNTHETIC_AZZ = ThermalModelParams(nu0=68.556, c_nu=-3.113, homega=18.4)
SYNTHETIC_RELAXATION = RelaxationParams(modes=(RelaxationMode(a=4.0, homega=18.4),), a_s=0.01)
DEFAULT_TEMPERATURES = tuple(float(t) for t in np.linspace(10.0, 350.0, 12))


def synthesize_dataset(
    config: RunConfig,
    temperatures=DEFAULT_TEMPERATURES,
    seed: int | None = None,
    *,
    label: str = "SYN1",
    zfs_model: ThermalModelParams = SYNTHETIC_ZFS,
    azz_model: ThermalModelParams = SYNTHETIC_AZZ,
    relaxation: RelaxationParams | None = SYNTHETIC_RELAXATION,
    contrast: float = 0.03,
    linewidth: float = 20.0,
    noise_sigma: float = 1e-4,
    trace_noise: float = 2e-3,
    step_mhz: float = 2.0,
) -> Dataset:
    """
    Synthetic fixture: one two-branch ODMR spectrum per temperature with D(T) and
    |A_zz|(T) from the single-mode model, plus one T1 trace per temperature from Gamma(T).
    All randomness comes from `seed` (config.seed when None).
    """
    rng = np.random.default_rng(config.seed if seed is None else seed)
    weights = multiplicity_weights(config.isotope)
    amps = tuple(float(a) for a in contrast * weights / weights.max())
    n_lines = config.isotope.lines_per_branch
    zeeman = CONSTANTS.gamma_e * config.field_gauss

    spectra = []
    traces = []
    for t in sorted(float(x) for x in temperatures):
        d = float(thermal_model_eval(zfs_model, t))
        split = float(thermal_model_eval(azz_model, t))
        params = OdmrModelParams(
            branch_centers=(d - zeeman, d + zeeman),
            hyperfine_splitting=split,
            widths=(linewidth, linewidth),
            amplitudes=(amps, amps),
            line_count=n_lines,
        )
        margin = (n_lines / 2.0 + 1.0) * split + 3.0 * linewidth
        grid = np.arange(d - zeeman - margin, d + zeeman + margin + step_mhz / 2, step_mhz)
        spectra.append(
            synthesize_spectrum(
                params,
                grid,
                noise_sigma=noise_sigma,
                seed=int(rng.integers(0, 2**32)),
                temperature=t,
                field=config.field_gauss,
                metadata={"label": f"{label}@{t:g}K", "synthetic": True},
            )
        )

        if relaxation is not None:
            t1 = 1.0 / float(relaxation_model_eval(relaxation, t))
            times = np.linspace(0.0, 5.0 * t1, 16)
            signal = 0.2 + 0.8 * np.exp(-times / t1) + rng.normal(0.0, trace_noise, times.size)
            traces.append(RelaxationTrace(temperature=t, time_ms=tuple(times), signal=tuple(signal)))

    logger.info("synthesized %s: %d spectra, %d traces", label, len(spectra), len(traces))
    return Dataset(
        label=label,
        spectra=spectra,
        traces=traces,
        provenance=[f"synthetic (seed={config.seed if seed is None else seed}, isotope={config.isotope.value})"],
    )
