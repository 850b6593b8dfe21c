"""Exact arithmetic on finite state spaces.

Measures are probability vectors, kernels are row-stochastic matrices, and
every norm and inequality below is evaluated in closed form. Total variation
follows the two-sided convention ||mu - nu||_tv = sup_{|f|<=1} |mu(f) - nu(f)|
= sum |mu - nu|, so two disjoint point masses are at distance 2.

All arithmetic is double precision; identities that hold exactly are checked
against explicit residual tolerances (typically 1e-12) by the callers.
"""

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from ..core import (
    EmptyLevelSetError,
    EmptySupportError,
    PotentialUndefinedError,
    ReducibleOrPeriodicError,
)

ATOL = 1e-12


def validate_measure(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or np.any(p < 0) or abs(p.sum() - 1.0) > ATOL:
        raise ValueError("expected a probability vector")
    return p


def validate_kernel(P) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise ValueError("expected a square matrix")
    if np.any(P < 0) or np.max(np.abs(P.sum(axis=1) - 1.0)) > ATOL:
        raise ValueError("expected a row-stochastic matrix")
    return P


def stationary(P, tol: float = 1e-14, max_iter: int = 200_000) -> np.ndarray:
    """Left fixed vector of P by power iteration, to an L1 residual of tol."""
    P = validate_kernel(P)
    pi = np.full(P.shape[0], 1.0 / P.shape[0])
    for _ in range(max_iter):
        nxt = pi @ P
        nxt = nxt / nxt.sum()
        if np.abs(nxt @ P - nxt).sum() <= tol:
            return nxt
        pi = nxt
    raise ReducibleOrPeriodicError(
        f"power iteration did not reach residual {tol} in {max_iter} iterations"
    )


def weighted_tv(mu, nu, w) -> float:
    """Weighted total variation sum_x w(x) |mu(x) - nu(x)|."""
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    w = np.asarray(w, dtype=float)
    if mu.shape != nu.shape or mu.shape != w.shape:
        raise ValueError("mu, nu and w must have matching lengths")
    return float(np.sum(w * np.abs(mu - nu)))


def kernel_norm(P, Q, w) -> float:
    """max_x ||P(x,.) - Q(x,.)||_{tv,w} / w(x)."""
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    w = np.asarray(w, dtype=float)
    if P.shape != Q.shape:
        raise ValueError("kernels must have matching shapes")
    row_tv = np.sum(w[None, :] * np.abs(P - Q), axis=1)
    return float(np.max(row_tv / w))


def contraction_coefficient(P) -> float:
    """Dobrushin coefficient: max over state pairs of half the row L1 distance."""
    P = np.asarray(P, dtype=float)
    diffs = np.abs(P[:, None, :] - P[None, :, :]).sum(axis=2)
    return float(0.5 * diffs.max())


def osc(f) -> float:
    """Maximum oscillation max f - min f."""
    f = np.asarray(f, dtype=float)
    return float(f.max() - f.min())


@dataclass
class DriftSpec:
    """Lyapunov data for a kernel pair: K-drift (V, a, b) and Q-drift (U, xi, c)."""

    V: np.ndarray
    U: np.ndarray
    a: float
    b: float
    xi: float
    c: float

    def __post_init__(self):
        self.V = np.asarray(self.V, dtype=float)
        self.U = np.asarray(self.U, dtype=float)
        if not (0.0 < self.a < 1.0 and 0.0 < self.xi < 1.0):
            raise ValueError("drift factors must lie in (0, 1)")
        if np.any(self.V < 0) or np.any(self.U < 1):
            raise ValueError("need V >= 0 and U >= 1")


class DriftCheck(NamedTuple):
    holds: bool
    a: float
    b_min: float


def check_drift(P, V, a: float, b: Optional[float] = None) -> DriftCheck:
    """Verify (PV)(x) <= a V(x) + b everywhere; returns the minimal b for this a."""
    P = np.asarray(P, dtype=float)
    V = np.asarray(V, dtype=float)
    b_min = float(np.max(P @ V - a * V))
    holds = b_min <= (b if b is not None else b_min) + ATOL
    return DriftCheck(holds=bool(holds), a=float(a), b_min=b_min)


def psi_g(G, eta) -> np.ndarray:
    """Boltzmann-Gibbs transform of a finite measure: G * eta / eta(G)."""
    G = np.asarray(G, dtype=float)
    eta = np.asarray(eta, dtype=float)
    mass = float(G @ eta)
    if mass <= 0:
        raise EmptySupportError("eta(G) = 0; Boltzmann-Gibbs transform undefined")
    return G * eta / mass


def finite_jump_kernel(G, eta, kind: str = "bg") -> np.ndarray:
    """Exact matrix form of the jump kernel indexed by eta.

    "bg": every row equals the G-reweighted measure. "ar": row x puts mass
    alpha(x, y) eta(y) on y != x, the remainder staying at x, with
    alpha = min(1, G(y)/G(x)).
    """
    G = np.asarray(G, dtype=float)
    eta = validate_measure(eta)
    kind = getattr(kind, "value", kind)
    if kind == "bg":
        row = psi_g(G, eta)
        return np.tile(row, (eta.size, 1))
    if kind == "ar":
        if np.any(G <= 0):
            raise PotentialUndefinedError("accept-reject ratios need a positive potential")
        alpha = np.minimum(1.0, G[None, :] / G[:, None])
        J = alpha * eta[None, :]
        stay = 1.0 - J.sum(axis=1)
        return J + np.diag(stay)
    raise ValueError(f"unknown jump kind {kind!r}")


def mixture_kernel(K, G, eta, epsilon: float, kind: str = "bg") -> np.ndarray:
    """(1 - eps) K + eps J_eta as an exact matrix."""
    K = np.asarray(K, dtype=float)
    return (1.0 - epsilon) * K + epsilon * finite_jump_kernel(G, eta, kind)


def mean_field_flow(K, Q, G, epsilon: float, mu0, eta0, n: int, kind: str = "bg"):
    """Exact recursion eta_{k+1} = eta_k Q, mu_{k+1} = mu_k K_{eta_{k+1}}.

    Returns (mus, etas) with shapes (n + 1, S).
    """
    K = validate_kernel(K)
    Q = validate_kernel(Q)
    mu = validate_measure(mu0)
    eta = validate_measure(eta0)
    mus = [mu]
    etas = [eta]
    for _ in range(n):
        eta = eta @ Q
        mu = mu @ mixture_kernel(K, G, eta, epsilon, kind)
        mus.append(mu)
        etas.append(eta)
    return np.stack(mus), np.stack(etas)


def verify_invariance(K, Q, epsilon: float, G=None):
    """L1 residuals of pi under the BG and AR mixture kernels at eta = eta*.

    pi and eta* are the exact stationary vectors of K and Q, and the potential
    is their pointwise ratio, so both residuals are zero up to rounding.
    """
    K = validate_kernel(K)
    Q = validate_kernel(Q)
    pi = stationary(K)
    eta_star = stationary(Q)
    if np.any(eta_star <= 0):
        raise PotentialUndefinedError("eta* vanishes somewhere; potential undefined")
    if G is None:
        G = pi / eta_star
    res = {}
    for kind in ("bg", "ar"):
        P = mixture_kernel(K, G, eta_star, epsilon, kind)
        res[kind] = float(np.abs(pi @ P - pi).sum())
    return res["bg"], res["ar"]


def theta_lower_bound(G, U, R: float) -> float:
    """min of G over the sublevel set {U <= R}."""
    G = np.asarray(G, dtype=float)
    U = np.asarray(U, dtype=float)
    mask = U <= R
    if not np.any(mask):
        raise EmptyLevelSetError(f"no state satisfies U <= {R}")
    return float(G[mask].min())


def verify_unif_lb(Q, G, U, xi: float, c: float, eta0, n_max: int = 500):
    """Worst slack of the a priori lower bound on eta_n(G) over n <= n_max.

    The bound is theta(R*) (1 - (xi^n eta_0(U) + c/(1 - xi)) / R*), with R*
    picked by brute force over the distinct values of U (the bound is
    piecewise constant in R between them). Requires the Q-drift to hold.
    """
    Q = validate_kernel(Q)
    G = np.asarray(G, dtype=float)
    U = np.asarray(U, dtype=float)
    eta = validate_measure(eta0)
    if not check_drift(Q, U, xi, c).holds:
        raise ValueError("Q does not satisfy the required drift for (U, xi, c)")

    tail = c / (1.0 - xi)
    candidates = np.unique(U)
    best_R, best_val = None, -np.inf
    for R in candidates:
        val = theta_lower_bound(G, U, R) * (1.0 - tail / R)
        if val > best_val:
            best_R, best_val = float(R), val

    theta_star = theta_lower_bound(G, U, best_R)
    eta0_U = float(eta @ U)
    worst = np.inf
    worst_n = 0
    for n in range(n_max + 1):
        bound = theta_star * (1.0 - (xi**n * eta0_U + tail) / best_R)
        slack = float(G @ eta) - bound
        if slack < worst:
            worst, worst_n = slack, n
        eta = eta @ Q
    return worst, {"R_star": best_R, "theta_star": theta_star, "worst_n": worst_n}


def verify_psi_reg(G, V, beta: float, etas, etas_prime):
    """Max of LHS/RHS for the Boltzmann-Gibbs Lipschitz bound over measure pairs.

    LHS is ||Psi_G(eta) - Psi_G(eta')|| in the (1 + beta V)-weighted total
    variation; RHS multiplies ||eta - eta'|| by the explicit constant
    (||G||_beta + ||G||_inf) / max(eta(G), eta'(G))
      + min(eta(V), eta'(V)) beta ||G||_beta ||G||_inf / (eta(G) eta'(G)).
    Pairs with eta = eta' count as ratio 0.
    """
    G = np.asarray(G, dtype=float)
    V = np.asarray(V, dtype=float)
    etas = np.atleast_2d(np.asarray(etas, dtype=float))
    etas_p = np.atleast_2d(np.asarray(etas_prime, dtype=float))
    vb = 1.0 + beta * V
    g_inf = float(np.abs(G).max())
    g_beta = float(np.max(np.abs(G) / vb))

    def transform(ms):
        mass = ms @ G
        return G[None, :] * ms / mass[:, None], mass

    psi, mass = transform(etas)
    psi_p, mass_p = transform(etas_p)
    lhs = np.sum(vb[None, :] * np.abs(psi - psi_p), axis=1)
    const = (g_beta + g_inf) / np.maximum(mass, mass_p) + np.minimum(
        etas @ V, etas_p @ V
    ) * beta * g_beta * g_inf / (mass * mass_p)
    rhs = const * np.sum(vb[None, :] * np.abs(etas - etas_p), axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratios = np.where(lhs == 0.0, 0.0, lhs / rhs)
    return float(np.max(ratios))


def compute_R_G(G, m: float, u: float) -> float:
    """Propagation-of-chaos growth factor for a bounded potential.

    1 + (osc/m)^2 (1 + (osc/m) sqrt(u)) exp((osc/m)^2 u), nondecreasing in u
    and equal to 1 for constant G.
    """
    if m <= 0:
        raise ValueError("need a positive lower bound m on eta(G)")
    if u < 0:
        raise ValueError("u must be nonnegative")
    ratio = osc(G) / m
    return float(1.0 + ratio**2 * (1.0 + ratio * np.sqrt(u)) * np.exp(ratio**2 * u))


def random_kernel(rng: np.random.Generator, n_states: int, floor: float = 0.05) -> np.ndarray:
    """Random row-stochastic matrix, floored to keep it irreducible and aperiodic."""
    rows = rng.dirichlet(np.ones(n_states), size=n_states)
    return (1.0 - floor) * rows + floor / n_states


def random_measure(rng: np.random.Generator, n_states: int, floor: float = 0.0) -> np.ndarray:
    p = rng.dirichlet(np.ones(n_states))
    return (1.0 - floor) * p + floor / n_states
