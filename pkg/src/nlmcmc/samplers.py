"""Linear Markov kernels: ULA, MALA, their RMS-preconditioned variants, tempering.

Each sampler exists in two forms that share a single draw protocol per
particle (noise vector first, then the accept uniform where applicable):

* single-state step functions, the reference semantics;
* ``*_ensemble`` functions that advance an ``(N, d)`` block of states with one
  independent generator per particle, vectorizing the arithmetic.

Under matched streams the two forms are bitwise identical, so ensembles of
noninteracting particles coincide with N separate single-chain runs.
"""

from dataclasses import dataclass, replace
from typing import Callable, Union

import numpy as np

from .core import DivergenceError


@dataclass
class LangevinConfig:
    """Step size (fixed or a per-step schedule) and tempering for Langevin kernels.

    The noise of unadjusted kernels is scaled by sqrt(temper_tau), which
    targets the tempered density pi^(1/tau). Metropolized kernels stay exactly
    pi-invariant for any tau, which then only rescales the proposal.
    """

    step_size: Union[float, Callable[[int], float]]
    temper_tau: float = 1.0
    rms_beta: float = 0.9
    rms_eps: float = 1e-9

    def step_at(self, n: int) -> float:
        delta = self.step_size(n) if callable(self.step_size) else self.step_size
        if delta < 0:
            raise ValueError(f"step size must be nonnegative, got {delta} at step {n}")
        return float(delta)

    def __post_init__(self):
        if self.temper_tau <= 0:
            raise ValueError("temper_tau must be positive")
        # beta = 1 is the degenerate frozen-accumulator case and is allowed
        if not 0.0 <= self.rms_beta <= 1.0:
            raise ValueError("rms_beta must lie in [0, 1]")
        if self.rms_eps <= 0:
            raise ValueError("rms_eps must be positive")


def step_decay(base: float, factor: float = 0.1, every: int = 2000) -> Callable[[int], float]:
    """Piecewise-constant schedule n -> base * factor**(n // every)."""
    return lambda n: base * factor ** (n // every)


@dataclass
class RmsState:
    """Per-coordinate exponentially smoothed squared-gradient accumulator."""

    r: np.ndarray
    beta: float = 0.9
    eps: float = 1e-9

    def __post_init__(self):
        self.r = np.asarray(self.r, dtype=float)
        if np.any(self.r < 0):
            raise ValueError("squared-gradient accumulator must be nonnegative")


def init_rms(dim: int, beta: float = 0.9, eps: float = 1e-9) -> RmsState:
    return RmsState(r=np.zeros(dim), beta=beta, eps=eps)


def _draw_normals(rngs, d: int) -> np.ndarray:
    return np.stack([rng.standard_normal(d) for rng in rngs])


def _draw_uniforms(rngs) -> np.ndarray:
    return np.array([rng.random() for rng in rngs])


def _require_finite(states: np.ndarray, context: str) -> None:
    bad = ~np.all(np.isfinite(states), axis=-1)
    if np.any(bad):
        idx = np.flatnonzero(bad)
        raise DivergenceError(
            f"{context}: non-finite state for particle(s) {idx.tolist()}",
            states=states[idx],
            indices=idx,
        )


def ula_ensemble(target, xs, cfg: LangevinConfig, rngs, step: int = 0) -> np.ndarray:
    """One unadjusted Langevin update for each row of ``xs``."""
    xs = np.asarray(xs, dtype=float)
    delta = cfg.step_at(step)
    z = _draw_normals(rngs, xs.shape[1])
    grad = np.asarray(target.gradient(xs), dtype=float)
    out = xs + delta * grad + np.sqrt(2.0 * delta * cfg.temper_tau) * z
    _require_finite(out, "ula")
    return out


def ula_step(target, x, cfg: LangevinConfig, rng, step: int = 0) -> np.ndarray:
    return ula_ensemble(target, np.asarray(x, dtype=float)[None], cfg, [rng], step)[0]


def _mh_accept(log_ratio: np.ndarray, u: np.ndarray) -> np.ndarray:
    # NaN ratios (e.g. -inf minus -inf) are rejections, like any non-finite proposal.
    with np.errstate(invalid="ignore"):
        return u < np.exp(np.minimum(log_ratio, 0.0))


def mala_ensemble(target, xs, cfg: LangevinConfig, rngs, step: int = 0):
    """Metropolis-adjusted Langevin update; returns (states, accepted mask).

    Proposals carrying non-finite density or gradient are auto-rejected.
    A non-finite current state raises a divergence error.
    """
    xs = np.asarray(xs, dtype=float)
    _require_finite(xs, "mala")
    delta = cfg.step_at(step)
    tau = cfg.temper_tau
    z = _draw_normals(rngs, xs.shape[1])

    grad_x = np.asarray(target.gradient(xs), dtype=float)
    if not np.all(np.isfinite(grad_x)):
        idx = np.flatnonzero(~np.all(np.isfinite(grad_x), axis=-1))
        raise DivergenceError(
            f"mala: non-finite gradient for particle(s) {idx.tolist()}",
            states=xs[idx],
            indices=idx,
        )
    mean_fwd = xs + delta * grad_x
    prop = mean_fwd + np.sqrt(2.0 * delta * tau) * z
    u = _draw_uniforms(rngs)
    if delta == 0.0:
        return xs.copy(), np.ones(len(xs), dtype=bool)

    with np.errstate(invalid="ignore", over="ignore"):
        lp_x = np.asarray(target.log_density(xs), dtype=float)
        lp_y = np.asarray(target.log_density(prop), dtype=float)
        grad_y = np.asarray(target.gradient(prop), dtype=float)
        grad_y = np.where(np.isfinite(grad_y), grad_y, 0.0)
        mean_rev = prop + delta * grad_y
        log_q_fwd = -np.sum((prop - mean_fwd) ** 2, axis=-1) / (4.0 * delta * tau)
        log_q_rev = -np.sum((xs - mean_rev) ** 2, axis=-1) / (4.0 * delta * tau)
        log_ratio = lp_y - lp_x + log_q_rev - log_q_fwd

    finite_prop = np.all(np.isfinite(prop), axis=-1) & np.isfinite(lp_y)
    accept = _mh_accept(log_ratio, u) & finite_prop
    out = np.where(accept[:, None], prop, xs)
    return out, accept


def mala_step(target, x, cfg: LangevinConfig, rng, step: int = 0):
    out, accepted = mala_ensemble(target, np.asarray(x, dtype=float)[None], cfg, [rng], step)
    return out[0], bool(accepted[0])


def _rms_update(r, grad, beta):
    return beta * r + (1.0 - beta) * grad**2


def rms_ula_ensemble(target, xs, r, cfg: LangevinConfig, rngs, step: int = 0):
    """RMS-preconditioned ULA; returns (states, updated accumulator)."""
    xs = np.asarray(xs, dtype=float)
    delta = cfg.step_at(step)
    z = _draw_normals(rngs, xs.shape[1])
    grad = np.asarray(target.gradient(xs), dtype=float)
    r_new = _rms_update(np.asarray(r, dtype=float), grad, cfg.rms_beta)
    delta_hat = delta / np.sqrt(r_new + cfg.rms_eps)
    out = xs + delta_hat * grad + np.sqrt(2.0 * delta_hat * cfg.temper_tau) * z
    _require_finite(out, "rms_ula")
    return out, r_new


def rms_ula_step(target, x, rms: RmsState, cfg: LangevinConfig, rng, step: int = 0):
    cfg = replace(cfg, rms_beta=rms.beta, rms_eps=rms.eps)
    out, r_new = rms_ula_ensemble(
        target, np.asarray(x, dtype=float)[None], rms.r[None], cfg, [rng], step
    )
    return out[0], RmsState(r=r_new[0], beta=rms.beta, eps=rms.eps)


def rms_mala_ensemble(target, xs, r, cfg: LangevinConfig, rngs, step: int = 0):
    """Metropolized RMS step; returns (states, accumulator, accepted mask).

    The forward proposal uses the updated accumulator r' = beta r +
    (1 - beta) grad(x)^2; the reverse density pairs it with the accumulator
    the chain would build at the proposal, beta r' + (1 - beta) grad(y)^2,
    normalizers included since the per-coordinate step sizes differ. At
    beta = 0 this is an exact position-dependent Metropolis kernel; for
    beta > 0 the accumulator carries history and the chain is only
    approximately invariant (the exact construction would expand the state
    to (x, r)).
    """
    xs = np.asarray(xs, dtype=float)
    _require_finite(xs, "rms_mala")
    delta = cfg.step_at(step)
    tau = cfg.temper_tau
    z = _draw_normals(rngs, xs.shape[1])

    grad_x = np.asarray(target.gradient(xs), dtype=float)
    if not np.all(np.isfinite(grad_x)):
        idx = np.flatnonzero(~np.all(np.isfinite(grad_x), axis=-1))
        raise DivergenceError(
            f"rms_mala: non-finite gradient for particle(s) {idx.tolist()}",
            states=xs[idx],
            indices=idx,
        )
    r_new = _rms_update(np.asarray(r, dtype=float), grad_x, cfg.rms_beta)
    delta_fwd = delta / np.sqrt(r_new + cfg.rms_eps)

    mean_fwd = xs + delta_fwd * grad_x
    prop = mean_fwd + np.sqrt(2.0 * delta_fwd * tau) * z
    u = _draw_uniforms(rngs)
    if delta == 0.0:
        return xs.copy(), r_new, np.ones(len(xs), dtype=bool)

    with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
        lp_x = np.asarray(target.log_density(xs), dtype=float)
        lp_y = np.asarray(target.log_density(prop), dtype=float)
        grad_y = np.asarray(target.gradient(prop), dtype=float)
        grad_y = np.where(np.isfinite(grad_y), grad_y, 0.0)
        r_rev = _rms_update(r_new, grad_y, cfg.rms_beta)
        delta_rev = delta / np.sqrt(r_rev + cfg.rms_eps)
        mean_rev = prop + delta_rev * grad_y
        log_q_fwd = -np.sum((prop - mean_fwd) ** 2 / (4.0 * delta_fwd * tau), axis=-1)
        log_q_fwd -= 0.5 * np.sum(np.log(delta_fwd), axis=-1)
        log_q_rev = -np.sum((xs - mean_rev) ** 2 / (4.0 * delta_rev * tau), axis=-1)
        log_q_rev -= 0.5 * np.sum(np.log(delta_rev), axis=-1)
        log_ratio = lp_y - lp_x + log_q_rev - log_q_fwd

    finite_prop = np.all(np.isfinite(prop), axis=-1) & np.isfinite(lp_y)
    accept = _mh_accept(log_ratio, u) & finite_prop
    out = np.where(accept[:, None], prop, xs)
    return out, r_new, accept


def rms_mala_step(target, x, rms: RmsState, cfg: LangevinConfig, rng, step: int = 0):
    cfg = replace(cfg, rms_beta=rms.beta, rms_eps=rms.eps)
    out, r_new, accepted = rms_mala_ensemble(
        target, np.asarray(x, dtype=float)[None], rms.r[None], cfg, [rng], step
    )
    return out[0], RmsState(r=r_new[0], beta=rms.beta, eps=rms.eps), bool(accepted[0])


SAMPLER_NAMES = ("ula", "mala", "rms_ula", "rms_mala")


def uses_rms(name: str) -> bool:
    return name in ("rms_ula", "rms_mala")


def ensemble_step(name: str, target, xs, r, cfg: LangevinConfig, rngs, step: int):
    """Dispatch one ensemble update; returns (states, rms or None, accepted or None)."""
    if name == "ula":
        return ula_ensemble(target, xs, cfg, rngs, step), None, None
    if name == "mala":
        out, acc = mala_ensemble(target, xs, cfg, rngs, step)
        return out, None, acc
    if name == "rms_ula":
        out, r_new = rms_ula_ensemble(target, xs, r, cfg, rngs, step)
        return out, r_new, None
    if name == "rms_mala":
        out, r_new, acc = rms_mala_ensemble(target, xs, r, cfg, rngs, step)
        return out, r_new, acc
    raise ValueError(f"unknown sampler {name!r}; expected one of {SAMPLER_NAMES}")
