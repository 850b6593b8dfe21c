"""Long-time convergence report for a finite mixture-kernel instance.

Runs the exact mean-field recursion, measures contraction and decay rates,
and checks the geometric-plus-polynomial envelope
rho^n ||mu_0 - pi|| + C n max(rho, delta)^n against the exact TV sequence.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .finite import (
    contraction_coefficient,
    finite_jump_kernel,
    mean_field_flow,
    stationary,
    validate_kernel,
    verify_invariance,
    weighted_tv,
)


def fit_decay_rate(values, lo: float = 1e-10, hi: float = 1e-2):
    """Least-squares slope of log(values) over the window values in [lo, hi].

    The window avoids both the transient and the floating-noise floor; if it
    holds fewer than two points it is widened to everything above 1e-13.
    Returns (rate, slope) with rate = exp(slope).
    """
    values = np.asarray(values, dtype=float)
    n = np.arange(values.size)
    mask = (values >= lo) & (values <= hi)
    if mask.sum() < 2:
        mask = values > 1e-13
        mask[: values.size // 10] = False
    if mask.sum() < 2:
        return 0.0, -np.inf
    slope = np.polyfit(n[mask], np.log(values[mask]), 1)[0]
    return float(np.exp(slope)), float(slope)


@dataclass
class TheoryReport:
    kind: str
    epsilon: float
    case: int
    gamma_hat: float
    delta_hat: float
    rho_hat: float
    eps_K: float
    eps_J_max: float
    tail_slope: float
    tail_slope_bound: float
    fitted_C: float
    bound_factor: float
    first_bound_violation: Optional[int]
    residual_bg: float
    residual_ar: float
    tv_mu: np.ndarray = field(repr=False, default=None)
    tv_eta: np.ndarray = field(repr=False, default=None)
    eps_J_per_step: np.ndarray = field(repr=False, default=None)

    def to_dict(self) -> dict:
        out = {}
        for key, value in self.__dict__.items():
            if isinstance(value, np.ndarray):
                out[key] = value.tolist()
            elif isinstance(value, (np.floating, np.integer)):
                out[key] = value.item()
            else:
                out[key] = value
        return out


def longtime_report(
    K,
    Q,
    epsilon: float,
    mu0,
    eta0,
    n_max: int = 200,
    kind: str = "bg",
    V=None,
    beta: float = 0.0,
    bound_factor: float = 10.0,
) -> TheoryReport:
    """Measure gamma, delta, rho and check the convergence envelope exactly.

    The envelope constant C is fitted at n = 1 and inflated by bound_factor;
    the first step (if any) where the inflated envelope fails is reported.
    The weighted norm uses V_beta = 1 + beta V (plain TV by default; for the
    state-dependent jump no canonical V exists, so the weight is caller-chosen).
    """
    K = validate_kernel(K)
    Q = validate_kernel(Q)
    kind = getattr(kind, "value", kind)
    S = K.shape[0]
    vb = np.ones(S) if V is None else 1.0 + beta * np.asarray(V, dtype=float)

    pi = stationary(K)
    eta_star = stationary(Q)
    G = pi / eta_star
    mus, etas = mean_field_flow(K, Q, G, epsilon, mu0, eta0, n_max, kind)

    tv_mu = np.array([weighted_tv(mu, pi, vb) for mu in mus])
    tv_eta = np.array([weighted_tv(eta, eta_star, np.ones(S)) for eta in etas])
    eps_J = np.array(
        [contraction_coefficient(finite_jump_kernel(G, eta, kind)) for eta in etas]
    )

    gamma_hat = contraction_coefficient(K)
    delta_hat, _ = fit_decay_rate(tv_eta)
    if kind == "bg":
        case = 1
        rho_hat = (1.0 - epsilon) * gamma_hat
    else:
        case = 2
        J_star = finite_jump_kernel(G, eta_star, kind)
        norm_J = float(np.max((J_star @ vb) / vb))
        rho_hat = (1.0 - epsilon) * gamma_hat + epsilon * norm_J

    rate = max(rho_hat, delta_hat)
    fitted_C = 0.0
    if n_max >= 1 and rate > 0:
        fitted_C = max(0.0, (tv_mu[1] - rho_hat * tv_mu[0]) / rate)

    first_violation = None
    n_grid = np.arange(n_max + 1)
    with np.errstate(over="ignore"):
        envelope = rho_hat**n_grid * tv_mu[0] + bound_factor * fitted_C * n_grid * rate**n_grid
    bad = np.flatnonzero(tv_mu > envelope + 1e-12)
    if bad.size:
        first_violation = int(bad[0])

    _, tail_slope = fit_decay_rate(tv_mu)
    res_bg, res_ar = verify_invariance(K, Q, epsilon)

    return TheoryReport(
        kind=kind,
        epsilon=float(epsilon),
        case=case,
        gamma_hat=gamma_hat,
        delta_hat=delta_hat,
        rho_hat=rho_hat,
        eps_K=gamma_hat,
        eps_J_max=float(eps_J.max()),
        tail_slope=tail_slope,
        tail_slope_bound=float(np.log(rate)) if rate > 0 else -np.inf,
        fitted_C=fitted_C,
        bound_factor=bound_factor,
        first_bound_violation=first_violation,
        residual_bg=res_bg,
        residual_ar=res_ar,
        tv_mu=tv_mu,
        tv_eta=tv_eta,
        eps_J_per_step=eps_J,
    )
