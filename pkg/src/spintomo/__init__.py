"""Simulation and reconstruction of collective-spin excitation statistics.

Simulates quantum-nondemolition quadrature measurements of collective
atomic spin states, probe shot noise included, and reconstructs the
excitation-number distribution by phase-averaged maximum-likelihood
fitting with AIC model selection.
"""

from .kernels import (KernelMatrix, build_kernel_matrix, fock_quad_density,
                      hermite, kernel_A, phase_averaged_density)
from .mle import (ReconstructionResult, aic, em_step, fit_fixed_k,
                  log_likelihood, select_model)
from .simulate import (MeasurementConfig, PhysicalParams, QuadratureHistogram,
                       eta_from_physical, linearization_error, simulate_histogram,
                       simulate_q, simulate_shot, smeared_density)
from .spinproj import (SpinProjection, folded_compare, gaussian_limit,
                       pz_distribution, wigner_d_column)
from .states import (NumberDistribution, SpinStateModel, css, dicke,
                     number_distribution, number_mixture, quad_density,
                     sample_quadrature, squeezed_vacuum)

__version__ = "0.1.0"

__all__ = [
    "KernelMatrix", "MeasurementConfig", "NumberDistribution", "PhysicalParams",
    "QuadratureHistogram", "ReconstructionResult", "SpinProjection",
    "SpinStateModel", "aic", "build_kernel_matrix", "css", "dicke", "em_step",
    "eta_from_physical", "fit_fixed_k", "fock_quad_density", "folded_compare",
    "gaussian_limit", "hermite", "kernel_A", "linearization_error",
    "log_likelihood", "number_distribution", "number_mixture",
    "phase_averaged_density", "pz_distribution", "quad_density",
    "sample_quadrature", "select_model", "simulate_histogram", "simulate_q",
    "simulate_shot", "smeared_density", "squeezed_vacuum", "wigner_d_column",
]
