"""Multiparameter SU(2) phase sensing: Fisher bounds, single-shot Bayesian
sensor optimization, estimation domains and maximum-likelihood benchmarks."""
from .bayes import GaussianPrior, cost_coefficients
from .exceptions import DegenerateInputError, DescentViolationError, InvalidPovmError
from .info import Povm, cond_probs, fim, qfim, sld_povm, trace_inverse
from .io import load_sensor, save_sensor
from .optimize import AnnealSchedule, CompassOptimizer, optimize
from .sensor import SensorSolution
from .spin import encode, make_spin_system, unitary

__version__ = "0.1.0"

__all__ = [
    "AnnealSchedule", "CompassOptimizer", "DegenerateInputError", "DescentViolationError",
    "GaussianPrior", "InvalidPovmError", "Povm", "SensorSolution", "cond_probs", "cost_coefficients",
    "encode", "fim", "load_sensor", "make_spin_system", "optimize", "qfim", "save_sensor",
    "sld_povm", "trace_inverse", "unitary",
]
