"""Exact system-apparatus correlations for a multi-level system coupled
linearly to a bosonic field."""

__version__ = "0.1.0"

from .model import ModelError, ProbeSet, SpectralData, SystemSpec, ohmic, power_law, validate_model
from .quadrature import QuadratureError, QuadratureSettings
from .kernels import TimeKernels, classify_decoherence, compute_kernels
from .generating import K_diag, K_offdiag, moment
from .expectation import (
    ObservableSpec,
    ProbabilityResult,
    conditional_probability,
    effective_expectation,
    expectation_value,
    joint_probability,
    quantum_residual,
)
from .onedim import OneDimModel, closed_kernels, export_spectral
from .bell import BellConfig, bell_f, optimal_config, violation_scan

__all__ = [
    "BellConfig", "K_diag", "K_offdiag", "ModelError", "ObservableSpec", "OneDimModel",
    "ProbabilityResult", "ProbeSet", "QuadratureError", "QuadratureSettings", "SpectralData",
    "SystemSpec", "TimeKernels", "bell_f", "classify_decoherence", "closed_kernels",
    "compute_kernels", "conditional_probability", "effective_expectation", "export_spectral",
    "expectation_value", "joint_probability", "moment", "ohmic", "optimal_config",
    "power_law", "quantum_residual", "validate_model", "violation_scan",
]
