"""Nonlinear jump interactions over empirical measures.

The potential G = pi / eta* acts as a multiplicative change of measure from
the auxiliary density to the primary target. Two jump kernels are built on
it: Boltzmann-Gibbs selection (draw from the G-reweighted auxiliary ensemble,
independent of the current state) and accept-reject (propose uniformly from
the auxiliary ensemble, thin with the potential ratio). Mixing either jump
with a linear kernel at rate epsilon yields the interacting transition.

Everything is computed in log space: all weights and acceptance ratios are
invariant under positive rescaling of either unnormalized density.
"""

import enum
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .core import EmptySupportError, PotentialUndefinedError


class Branch(enum.Enum):
    LINEAR = "linear"
    JUMP = "jump"


class JumpKind(enum.Enum):
    BG = "bg"
    AR = "ar"


@dataclass
class JumpConfig:
    """Jump probability and interaction kind for the mixture kernel."""

    epsilon: float
    kind: JumpKind = JumpKind.BG

    def __post_init__(self):
        if isinstance(self.kind, str):
            self.kind = JumpKind(self.kind)
        # 0 and 1 are accepted as degenerate configs (pure linear / pure jump).
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in [0, 1], got {self.epsilon}")


@dataclass
class PotentialPair:
    """Primary target pi and auxiliary target eta*, with log G = log pi - log eta*."""

    pi: object
    eta_star: object

    def log_potential_batch(self, xs: np.ndarray) -> np.ndarray:
        """log G at each row; -inf where pi vanishes, NaN where eta* vanishes."""
        with np.errstate(invalid="ignore"):
            return np.asarray(self.pi.log_density(xs), dtype=float) - np.asarray(
                self.eta_star.log_density(xs), dtype=float
            )


def log_potential(pair: PotentialPair, x: np.ndarray) -> float:
    """log G(x) = log pi(x) - log eta*(x)."""
    log_eta = float(pair.eta_star.log_density(np.asarray(x, dtype=float)))
    if log_eta == -np.inf:
        raise PotentialUndefinedError("auxiliary density vanishes; log G undefined")
    return float(pair.pi.log_density(np.asarray(x, dtype=float))) - log_eta


@dataclass
class BgWeights:
    """Normalized Boltzmann-Gibbs selection weights over an auxiliary ensemble."""

    log_weights: np.ndarray
    normalized_weights: np.ndarray

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.normalized_weights)


def bg_weights(pair: PotentialPair, states: np.ndarray) -> BgWeights:
    """Selection weights proportional to G at each auxiliary particle.

    Particles where the potential is undefined or zero get weight 0; if no
    particle carries positive weight the empirical measure has no mass under
    G and the transform is undefined.
    """
    states = np.atleast_2d(np.asarray(states, dtype=float))
    log_g = pair.log_potential_batch(states)
    # Zero-density eta* (log G undefined or +inf) contributes weight 0.
    log_g = np.where(np.isfinite(log_g) | (log_g == -np.inf), log_g, -np.inf)
    if np.all(log_g == -np.inf):
        raise EmptySupportError("all particles have zero potential weight")
    norm = logsumexp(log_g)
    weights = np.exp(log_g - norm)
    weights = weights / weights.sum()
    return BgWeights(log_weights=log_g, normalized_weights=weights)


def categorical_index(weights: BgWeights, u: float) -> int:
    """Inverse-CDF lookup with a single uniform; ties break to the lowest index."""
    return int(np.searchsorted(weights.cumulative, u, side="right"))


def bg_jump(
    pair: PotentialPair,
    states: np.ndarray,
    rng: np.random.Generator,
    weights: BgWeights | None = None,
) -> np.ndarray:
    """Draw one state from the G-reweighted auxiliary ensemble (a copy)."""
    states = np.atleast_2d(np.asarray(states, dtype=float))
    if weights is None:
        weights = bg_weights(pair, states)
    j = categorical_index(weights, rng.random())
    return states[min(j, len(states) - 1)].copy()


def ar_accept_prob(pair: PotentialPair, x: np.ndarray, y: np.ndarray) -> float:
    """min(1, G(y) / G(x)), computed as exp(min(0, log G(y) - log G(x)))."""
    log_gx = log_potential(pair, x)
    if log_gx == -np.inf:
        raise PotentialUndefinedError("current state has zero potential")
    try:
        log_gy = log_potential(pair, y)
    except PotentialUndefinedError:
        return 0.0
    return float(np.exp(min(0.0, log_gy - log_gx)))


def ar_jump(
    pair: PotentialPair, x: np.ndarray, states: np.ndarray, rng: np.random.Generator
):
    """Accept-reject jump against the auxiliary ensemble.

    Proposes a uniform member of the ensemble and accepts with probability
    min(1, G(proposal)/G(x)); the two-stage draw leaves a stay probability of
    exactly 1 - mean_j alpha(x, Y^j). Returns (state, jumped flag).
    """
    states = np.atleast_2d(np.asarray(states, dtype=float))
    j = int(rng.integers(len(states)))
    alpha = ar_accept_prob(pair, x, states[j])
    if rng.random() < alpha:
        return states[j].copy(), True
    return np.asarray(x, dtype=float), False


def k_eta_step(
    linear_step,
    pair: PotentialPair,
    jump: JumpConfig,
    x: np.ndarray,
    states: np.ndarray,
    coin_rng: np.random.Generator,
    rng: np.random.Generator,
    weights: BgWeights | None = None,
):
    """One transition of the mixture kernel (1 - eps) K + eps J_eta.

    ``linear_step`` is called as ``linear_step(x, rng)`` on the no-jump branch.
    The jump/no-jump coin comes from the dedicated ``coin_rng`` stream so the
    linear kernel's own draws stay aligned across branch patterns. Returns
    (state, branch taken).
    """
    if coin_rng.random() < jump.epsilon:
        if jump.kind is JumpKind.BG:
            return bg_jump(pair, states, rng, weights=weights), Branch.JUMP
        new_x, _ = ar_jump(pair, x, states, rng)
        return new_x, Branch.JUMP
    return linear_step(x, rng), Branch.LINEAR
