"""Shared domain types: states, log-targets, ensembles, RNG streams, weighted norms.

States are plain float64 numpy vectors of length ``d``. Log-densities are
unnormalized throughout; every downstream weight and acceptance ratio is
computed in log space and is invariant to additive log-constants.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

State = np.ndarray


class DivergenceError(RuntimeError):
    """A sampler produced a non-finite state or gradient.

    Carries the offending states and their particle indices so the driver
    can record the event and apply its divergence policy.
    """

    def __init__(self, message, states=None, indices=None):
        super().__init__(message)
        self.states = states
        self.indices = indices


class GradientUnavailableError(ValueError):
    """Operation requires a gradient but the target does not provide one."""


class DomainError(ValueError):
    """A log-density or gradient evaluation returned a non-finite value."""


class PotentialUndefinedError(ValueError):
    """log G = log pi - log eta* is undefined (auxiliary density is zero)."""


class EmptySupportError(ValueError):
    """Every particle carries zero potential weight; eta(G) = 0."""


class EmptyLevelSetError(ValueError):
    """A sublevel set {U <= R} is empty."""


class ReducibleOrPeriodicError(RuntimeError):
    """Power iteration failed to converge to a stationary distribution."""


class UnsupportedFamilyError(ValueError):
    """Exact sampling is not available for this target family."""


class ConfigError(ValueError):
    """Invalid run configuration; carries the offending key path."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass
class LogTarget:
    """An unnormalized log-density on R^d with an optional gradient.

    ``log_density`` and ``gradient`` must accept arrays of shape ``(..., dim)``
    and broadcast over leading axes; all targets shipped with this package do.
    A return of ``-inf`` marks a zero-density region and is legal; samplers
    treat proposals into such regions as rejected.
    """

    dim: int
    log_density: Callable[[np.ndarray], np.ndarray]
    gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None
    label: str = ""

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be a positive integer")


@dataclass
class RngStream:
    """A reproducible, independent random stream keyed by (seed, stream_id).

    Identical keys reproduce identical draw sequences; distinct stream ids
    are independent by construction of the underlying SeedSequence tree.
    """

    seed: int
    stream_id: tuple

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=tuple(self.stream_id))
        return np.random.default_rng(ss)


def make_stream(seed: int, *stream_id) -> np.random.Generator:
    """Shorthand for ``RngStream(seed, stream_id).generator()``."""
    return RngStream(seed, tuple(stream_id)).generator()


# Stream namespaces used by the particle drivers. Particle i of the primary
# ensemble reads only (PRIMARY, i); its jump/no-jump coin reads (COIN, i).
NS_PRIMARY = 0
NS_COIN = 1
NS_AUXILIARY = 2
NS_METRIC = 3


@dataclass
class Ensemble:
    """N particle states plus per-particle sampler state and RNG streams.

    ``states`` has shape ``(N, d)``. ``aux`` holds optional per-particle
    sampler state such as the RMS squared-gradient accumulator, shape
    ``(N, d)``. Particle i's evolution reads only ``rngs[i]``.
    """

    states: np.ndarray
    rngs: list
    aux: Optional[np.ndarray] = None

    def __post_init__(self):
        self.states = np.atleast_2d(np.asarray(self.states, dtype=float))
        if self.states.ndim != 2 or self.states.shape[0] < 1:
            raise ValueError("states must be a nonempty (N, d) array")
        if len(self.states) != len(self.rngs):
            raise ValueError("need exactly one rng stream per particle")

    @property
    def n_particles(self) -> int:
        return self.states.shape[0]

    @property
    def dim(self) -> int:
        return self.states.shape[1]


@dataclass
class WeightedNormSpec:
    """Weight V_beta(x) = 1 + beta * V(x) for weighted total-variation norms."""

    V: Callable[[np.ndarray], np.ndarray]
    beta: float = 0.0

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")


def weight_Vbeta(spec: WeightedNormSpec, x: np.ndarray) -> float:
    """Evaluate 1 + beta * V(x); always >= 1 for nonnegative V."""
    return 1.0 + spec.beta * float(spec.V(np.asarray(x, dtype=float)))


def check_gradient(target: LogTarget, x: State, h: float = 1e-5) -> float:
    """Max abs error between the analytic gradient and central differences.

    Parameters
    ----------
    target : LogTarget
        Must provide a gradient.
    x : array
        Point in the interior of the support.
    h : float
        Finite-difference step, > 0.
    """
    if target.gradient is None:
        raise GradientUnavailableError(f"target {target.label!r} has no gradient")
    if h <= 0:
        raise ValueError("h must be positive")
    x = np.asarray(x, dtype=float)
    analytic = np.asarray(target.gradient(x), dtype=float)
    numeric = np.empty_like(x)
    for i in range(x.size):
        step = np.zeros_like(x)
        step[i] = h
        hi = target.log_density(x + step)
        lo = target.log_density(x - step)
        numeric[i] = (hi - lo) / (2.0 * h)
    if not (np.all(np.isfinite(analytic)) and np.all(np.isfinite(numeric))):
        raise DomainError(f"non-finite evaluation near {x!r}")
    return float(np.max(np.abs(analytic - numeric)))
