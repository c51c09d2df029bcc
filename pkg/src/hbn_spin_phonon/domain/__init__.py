from .dataset import Dataset, RelaxationTrace
from .fits import (
    FitResult,
    RelaxationMode,
    RelaxationParams,
    SeriesPoint,
    ThermalModelParams,
)
from .phonon import PhononMode, PhononModeTable
from .report import AGGREGATE_LABEL, DatasetReport, FitRow, ModelRow, RunReport, StageOutcome
from .spectrum import LorentzianPeak, OdmrModelParams, OdmrSpectrum
from .spin import Branch, HyperfineTensor, Isotope, SpinOperatorSet, SpinSystem, TransitionLine

__all__ = [
    "AGGREGATE_LABEL",
    "DatasetReport",
    "FitRow",
    "ModelRow",
    "RunReport",
    "StageOutcome",
    "Branch",
    "Dataset",
    "FitResult",
    "HyperfineTensor",
    "Isotope",
    "LorentzianPeak",
    "OdmrModelParams",
    "OdmrSpectrum",
    "PhononMode",
    "PhononModeTable",
    "RelaxationMode",
    "RelaxationParams",
    "RelaxationTrace",
    "SeriesPoint",
    "SpinOperatorSet",
    "SpinSystem",
    "ThermalModelParams",
    "TransitionLine",
]
