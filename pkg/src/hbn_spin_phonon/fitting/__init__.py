from .engine import FitOptions, least_squares_fit, numerical_jacobian
from .odmr import AmplitudeMode, OdmrFit, fit_odmr
from .relaxation import fit_relaxation, relaxation_model_eval, t1_from_rate
from .susceptibility import Susceptibility, fit_susceptibility
from .t1 import T1Fit, fit_t1_trace
from .thermal import fit_thermal, thermal_model_derivative, thermal_model_eval, zero_kelvin_value

__all__ = [
    "AmplitudeMode",
    "FitOptions",
    "OdmrFit",
    "Susceptibility",
    "T1Fit",
    "fit_odmr",
    "fit_relaxation",
    "fit_susceptibility",
    "fit_t1_trace",
    "fit_thermal",
    "least_squares_fit",
    "numerical_jacobian",
    "relaxation_model_eval",
    "t1_from_rate",
    "thermal_model_derivative",
    "thermal_model_eval",
    "zero_kelvin_value",
]
