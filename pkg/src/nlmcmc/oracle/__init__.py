"""Exact finite-state oracle: stochastic matrices, weighted norms, jump kernels,
mean-field flows, and the numerical verification of the contraction, lower-bound,
regularity, and propagation-of-chaos claims at desk scale."""

from .finite import (
    DriftCheck,
    DriftSpec,
    check_drift,
    compute_R_G,
    contraction_coefficient,
    finite_jump_kernel,
    kernel_norm,
    mean_field_flow,
    osc,
    psi_g,
    random_kernel,
    random_measure,
    stationary,
    theta_lower_bound,
    validate_kernel,
    validate_measure,
    verify_invariance,
    verify_psi_reg,
    verify_unif_lb,
    weighted_tv,
)
from .instances import FiniteInstance, bundled_four_state, bundled_poc_instance
from .longtime import TheoryReport, fit_decay_rate, longtime_report
from .poc import (
    mc_convergence_experiment,
    poc_experiment,
    simulate_finite_ips,
)

__all__ = [
    "DriftCheck",
    "DriftSpec",
    "FiniteInstance",
    "TheoryReport",
    "bundled_four_state",
    "bundled_poc_instance",
    "check_drift",
    "compute_R_G",
    "contraction_coefficient",
    "finite_jump_kernel",
    "fit_decay_rate",
    "kernel_norm",
    "longtime_report",
    "mc_convergence_experiment",
    "mean_field_flow",
    "osc",
    "poc_experiment",
    "psi_g",
    "random_kernel",
    "random_measure",
    "simulate_finite_ips",
    "stationary",
    "theta_lower_bound",
    "validate_kernel",
    "validate_measure",
    "verify_invariance",
    "verify_psi_reg",
    "verify_unif_lb",
    "weighted_tv",
]
