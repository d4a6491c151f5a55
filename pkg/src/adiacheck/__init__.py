"""Adiabaticity checks for time-dependent quantum systems."""

__version__ = "0.1.0"

from .conditions import ConditionReport, align_dual, compare_dual_conditions, evaluate_conditions
from .dynamics import integrate_coefficients, integrate_schrodinger, project_onto_adiabatic, survival_probability
from .errors import AdiacheckError, ConfigInvalid, NumericalError
from .grid import TimeGrid
from .models import DualModel, FunctionModel, LandauZenerModel, Schedule, SpinHalfModel, StaticModel
from .oracles import SpinHalfClosedForm, regime_classify, spinhalf_survival
from .spectral import Analysis, analyze

__all__ = [
    "Analysis",
    "AdiacheckError",
    "ConditionReport",
    "ConfigInvalid",
    "DualModel",
    "FunctionModel",
    "LandauZenerModel",
    "NumericalError",
    "Schedule",
    "SpinHalfClosedForm",
    "SpinHalfModel",
    "StaticModel",
    "TimeGrid",
    "align_dual",
    "analyze",
    "compare_dual_conditions",
    "evaluate_conditions",
    "integrate_coefficients",
    "integrate_schrodinger",
    "project_onto_adiabatic",
    "regime_classify",
    "spinhalf_survival",
]
