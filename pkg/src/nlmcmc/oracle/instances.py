"""Bundled finite instances used by the verification suite and the CLI."""

from dataclasses import dataclass, field

import numpy as np

from .finite import stationary, validate_kernel, validate_measure


@dataclass
class FiniteInstance:
    """A frozen (K, Q, epsilon) triple with Lyapunov data and initial laws."""

    label: str
    K: np.ndarray
    Q: np.ndarray
    epsilon: float
    kind: str
    mu0: np.ndarray
    eta0: np.ndarray
    V: np.ndarray
    U: np.ndarray

    def __post_init__(self):
        self.K = validate_kernel(self.K)
        self.Q = validate_kernel(self.Q)
        self.mu0 = validate_measure(self.mu0)
        self.eta0 = validate_measure(self.eta0)
        self.V = np.asarray(self.V, dtype=float)
        self.U = np.asarray(self.U, dtype=float)

    @property
    def pi(self) -> np.ndarray:
        return stationary(self.K)

    @property
    def eta_star(self) -> np.ndarray:
        return stationary(self.Q)

    @property
    def G(self) -> np.ndarray:
        return self.pi / self.eta_star

    @property
    def n_states(self) -> int:
        return self.K.shape[0]


def bundled_four_state() -> FiniteInstance:
    """Default 4-state instance for long-time and invariance checks."""
    K = np.array(
        [
            [0.70, 0.15, 0.10, 0.05],
            [0.20, 0.55, 0.15, 0.10],
            [0.10, 0.20, 0.50, 0.20],
            [0.05, 0.15, 0.20, 0.60],
        ]
    )
    Q = np.array(
        [
            [0.60, 0.20, 0.10, 0.10],
            [0.10, 0.70, 0.10, 0.10],
            [0.10, 0.15, 0.60, 0.15],
            [0.15, 0.10, 0.15, 0.60],
        ]
    )
    return FiniteInstance(
        label="four_state",
        K=K,
        Q=Q,
        epsilon=0.2,
        kind="bg",
        mu0=np.array([1.0, 0.0, 0.0, 0.0]),
        eta0=np.full(4, 0.25),
        V=np.array([0.0, 1.0, 2.0, 3.0]),
        U=np.array([1.0, 2.0, 4.0, 8.0]),
    )


def bundled_poc_instance() -> FiniteInstance:
    """4-state instance with a strongly varying potential for bias-versus-N runs.

    K concentrates near state 0 while Q concentrates near state 3, so the
    potential ratio oscillates enough for the interaction bias to dominate
    Monte Carlo noise at desk-scale repetition counts.
    """
    K = np.array(
        [
            [0.80, 0.10, 0.05, 0.05],
            [0.30, 0.50, 0.10, 0.10],
            [0.25, 0.10, 0.50, 0.15],
            [0.20, 0.10, 0.10, 0.60],
        ]
    )
    Q = np.array(
        [
            [0.40, 0.20, 0.20, 0.20],
            [0.10, 0.50, 0.20, 0.20],
            [0.10, 0.20, 0.40, 0.30],
            [0.05, 0.10, 0.15, 0.70],
        ]
    )
    return FiniteInstance(
        label="four_state_poc",
        K=K,
        Q=Q,
        epsilon=0.5,
        kind="bg",
        mu0=np.array([0.25, 0.25, 0.25, 0.25]),
        eta0=np.full(4, 0.25),
        V=np.array([0.0, 1.0, 2.0, 3.0]),
        U=np.array([1.0, 2.0, 4.0, 8.0]),
    )
