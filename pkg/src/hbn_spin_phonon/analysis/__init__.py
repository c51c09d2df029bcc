from .lineshape import (
    SlopeMaximum,
    lorentzian,
    lorentzian_derivative,
    lorentzian_eval,
    max_abs_derivative,
    model_derivative,
    model_eval,
    synthesize_spectrum,
)
from .phonon_sum import (
    bose_occupation,
    combine_curvature,
    curvature_from_samples,
    dominant_mode,
    evaluate_mode_sum,
    load_mode_table,
    mode_contributions,
    raman_dominance_ratio,
)
from .sensitivity import (
    SensitivityInput,
    SensitivityReport,
    eta_b_general,
    eta_b_lorentzian,
    eta_t,
    evaluate_sensitivity,
    sensitivity_report,
)
from .polarization import (
    FlipFlopCoeffs,
    Ordering,
    binomial_weights,
    eslac_field,
    extract_polarization,
    flip_flop_coefficients,
    polarization_series,
    polarized_amplitude_model,
)

__all__ = [
    "FlipFlopCoeffs",
    "Ordering",
    "SensitivityInput",
    "SensitivityReport",
    "SlopeMaximum",
    "binomial_weights",
    "bose_occupation",
    "combine_curvature",
    "curvature_from_samples",
    "dominant_mode",
    "eslac_field",
    "eta_b_general",
    "eta_b_lorentzian",
    "eta_t",
    "evaluate_mode_sum",
    "evaluate_sensitivity",
    "extract_polarization",
    "flip_flop_coefficients",
    "load_mode_table",
    "lorentzian",
    "lorentzian_derivative",
    "lorentzian_eval",
    "max_abs_derivative",
    "mode_contributions",
    "model_derivative",
    "model_eval",
    "polarization_series",
    "polarized_amplitude_model",
    "raman_dominance_ratio",
    "sensitivity_report",
    "synthesize_spectrum",
]
