"""Spectra of operators linearized at localized rotating waves.

Analytical layers (admissibility conditions, symmetry set, dispersion set,
decay bounds) cross-validated against a numerical pipeline (freezing
method, sparse operator assembly, shift-invert eigensolver) for the
cubic-quintic complex Ginzburg-Landau equation.
"""

from .coeffs import (
    ConditionReport,
    SpectralConstants,
    SystemCoefficients,
    admissible_p_range,
    check_conditions,
    first_antieigenvalue,
    spectral_constants,
)
from .discretize import Grid
from .dispersion import (
    DispersionQuery,
    density_classifier,
    dispersion_eigenvalues,
    sample_dispersion_set,
)
from .freeze import FreezeConfig, FreezeResult, run_freezing
from .model_qcgl import QcglParams
from .spectra import decay_bounds, fit_decay_rate, shift_invert_eigs
from .symmetry import symmetry_eigentriples, symmetry_set

__all__ = [
    "ConditionReport",
    "SpectralConstants",
    "SystemCoefficients",
    "admissible_p_range",
    "check_conditions",
    "first_antieigenvalue",
    "spectral_constants",
    "Grid",
    "DispersionQuery",
    "density_classifier",
    "dispersion_eigenvalues",
    "sample_dispersion_set",
    "FreezeConfig",
    "FreezeResult",
    "run_freezing",
    "QcglParams",
    "decay_bounds",
    "fit_decay_rate",
    "shift_invert_eigs",
    "symmetry_eigentriples",
    "symmetry_set",
]

__version__ = "0.1.0"
