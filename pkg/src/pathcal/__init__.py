"""Calibration of linearly decomposed radio pathloss models by the QMM (Gram system) and SVD solvers."""

__version__ = "0.1.0"

from .calibration import (CalibrationResult, DesignMatrix, GramSystem, MeasurementSet, calibrate,
                          condition_estimate, decompose, design_matrix, fitted, gram_system, predict,
                          predict_many, residual_seminorm, solve_qmm, solve_svd)
from .errors import (DataError, DegenerateRange, DomainError, PathcalError, RampOffGridWarning,
                     SingularGram, ZeroMeasurement)
from .metrics import GrgConfig, GrgReport, grg_mape, mpe, rmse
from .registry import (BasisFunction, Factor, ModelSpec, Monomial, Scenario, builtin_models,
                       eval_basis, get_model, recombine, to_alternative)
