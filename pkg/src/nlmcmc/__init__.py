"""Interacting-particle nonlinear MCMC with a finite-state verification oracle."""

__version__ = "0.1.0"

from .core import (
    DivergenceError,
    Ensemble,
    LogTarget,
    RngStream,
    WeightedNormSpec,
    check_gradient,
    make_stream,
    weight_Vbeta,
)
from .interaction import (
    BgWeights,
    Branch,
    JumpConfig,
    JumpKind,
    PotentialPair,
    ar_accept_prob,
    ar_jump,
    bg_jump,
    bg_weights,
    k_eta_step,
    log_potential,
)
from .ips import (
    IpsConfig,
    KernelConfig,
    RunTrace,
    particle_average,
    simulate_growing_history,
    simulate_ips,
)
from .metrics import CalibrationInput, KernelSpec, calibration_errors, entropy, mmd2_unbiased
from .samplers import (
    LangevinConfig,
    RmsState,
    init_rms,
    mala_step,
    rms_mala_step,
    rms_ula_step,
    step_decay,
    ula_step,
)

__all__ = [
    "BgWeights",
    "Branch",
    "CalibrationInput",
    "DivergenceError",
    "Ensemble",
    "IpsConfig",
    "JumpConfig",
    "JumpKind",
    "KernelConfig",
    "KernelSpec",
    "LangevinConfig",
    "LogTarget",
    "PotentialPair",
    "RngStream",
    "RmsState",
    "RunTrace",
    "WeightedNormSpec",
    "ar_accept_prob",
    "ar_jump",
    "bg_jump",
    "bg_weights",
    "calibration_errors",
    "check_gradient",
    "entropy",
    "init_rms",
    "k_eta_step",
    "log_potential",
    "make_stream",
    "mala_step",
    "mmd2_unbiased",
    "particle_average",
    "rms_mala_step",
    "rms_ula_step",
    "simulate_growing_history",
    "simulate_ips",
    "step_decay",
    "ula_step",
    "weight_Vbeta",
]
