"""Interacting-particle simulation drivers.

``simulate_ips`` advances N auxiliary particles by Q, freezes their empirical
measure, then advances each primary particle by the mixture kernel against
that frozen snapshot — strictly in that order within every step. Peak storage
is independent of the number of steps.

``simulate_growing_history`` is the single-trajectory comparison variant: one
auxiliary chain whose full past forms the jump measure, so memory grows
linearly with time.
"""

import copy
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from .core import (
    NS_AUXILIARY,
    NS_COIN,
    NS_PRIMARY,
    DivergenceError,
    Ensemble,
    make_stream,
)
from .interaction import (
    BgWeights,
    Branch,
    JumpConfig,
    JumpKind,
    PotentialPair,
    ar_jump,
    bg_jump,
    bg_weights,
)
from .samplers import LangevinConfig, ensemble_step, uses_rms

MAX_REINIT_RETRIES = 5


@dataclass
class KernelConfig:
    """A named linear sampler plus its Langevin configuration."""

    sampler: str
    langevin: LangevinConfig


@dataclass
class IpsConfig:
    n_particles: int
    n_sim: int
    primary_kernel: KernelConfig
    init_primary: Callable[[np.random.Generator], np.ndarray]
    jump: Optional[JumpConfig] = None
    auxiliary_kernel: Optional[KernelConfig] = None
    init_auxiliary: Optional[Callable[[np.random.Generator], np.ndarray]] = None
    seed: int = 0
    record_every: int = 1
    divergence_policy: str = "abort"  # "abort" | "reinit"
    stream_ids: Optional[Sequence[int]] = None

    def __post_init__(self):
        if self.n_particles < 1:
            raise ValueError("n_particles must be >= 1")
        if self.n_sim < 0:
            raise ValueError("n_sim must be >= 0")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if self.divergence_policy not in ("abort", "reinit"):
            raise ValueError("divergence_policy must be 'abort' or 'reinit'")
        if self.jump is not None and self.jump.epsilon > 0:
            if self.auxiliary_kernel is None or self.init_auxiliary is None:
                raise ValueError("jump interactions require an auxiliary kernel and init")


@dataclass
class RunTrace:
    """Recorded rows plus final ensembles; one row per recording step."""

    rows: list = field(default_factory=list)
    final_states: Optional[np.ndarray] = None
    final_aux_states: Optional[np.ndarray] = None
    status: str = "ok"
    steps_completed: int = 0

    @property
    def steps(self) -> np.ndarray:
        return np.array([row["step"] for row in self.rows])

    def column(self, name: str) -> np.ndarray:
        return np.array([row.get(name, np.nan) for row in self.rows])


def uniform_box_init(low, high) -> Callable[[np.random.Generator], np.ndarray]:
    low = np.asarray(low, dtype=float)
    high = np.asarray(high, dtype=float)
    return lambda rng: rng.uniform(low, high)


def gaussian_init(mean, sigma: float) -> Callable[[np.random.Generator], np.ndarray]:
    mean = np.asarray(mean, dtype=float)
    return lambda rng: mean + sigma * rng.standard_normal(mean.shape)


def particle_average(states: np.ndarray, f: Callable) -> float:
    """Arithmetic mean of f over the particle ensemble."""
    states = np.atleast_2d(np.asarray(states, dtype=float))
    vals = np.asarray(f(states))
    if vals.shape != (len(states),):
        vals = np.array([float(f(x)) for x in states])
    return float(np.mean(vals))


class _EnsembleState:
    """Mutable particle block: states, optional RMS accumulator, streams."""

    def __init__(self, cfg: KernelConfig, init, rngs, target):
        self.cfg = cfg
        self.rngs = rngs
        self.target = target
        self.states = np.stack([np.atleast_1d(np.asarray(init(r), dtype=float)) for r in rngs])
        self.rms = np.zeros_like(self.states) if uses_rms(cfg.sampler) else None

    def step_subset(self, idx: np.ndarray, step: int) -> None:
        if len(idx) == 0:
            return
        rngs = [self.rngs[i] for i in idx]
        r = self.rms[idx] if self.rms is not None else None
        out, r_new, _ = ensemble_step(
            self.cfg.sampler, self.target, self.states[idx], r, self.cfg.langevin, rngs, step
        )
        self.states[idx] = out
        if r_new is not None:
            self.rms[idx] = r_new

    def reinit(self, idx: np.ndarray, init) -> None:
        for i in idx:
            self.states[i] = np.atleast_1d(np.asarray(init(self.rngs[i]), dtype=float))
            if self.rms is not None:
                self.rms[i] = 0.0

    def as_ensemble(self) -> Ensemble:
        return Ensemble(states=self.states.copy(), rngs=self.rngs, aux=copy.copy(self.rms))


def _step_with_policy(block: _EnsembleState, idx, step, policy, init, diverged_counter):
    """Run one substep, applying the divergence policy on failure.

    Under "reinit", diverged particles are redrawn from the initial
    distribution and the substep is retried (bounded); the retry redraws
    independent randomness for the subset, which leaves the law of the
    non-diverged updates unchanged. Under "abort" the error propagates.
    """
    for _ in range(MAX_REINIT_RETRIES):
        try:
            block.step_subset(idx, step)
            return diverged_counter
        except DivergenceError as err:
            if policy == "abort":
                raise
            bad = np.asarray(idx)[np.asarray(err.indices)]
            diverged_counter += len(bad)
            block.reinit(bad, init)
    raise DivergenceError(f"divergence persisted after {MAX_REINIT_RETRIES} re-initializations")


def _record(trace, step, jumps, linears, diverged, hooks, xs, ys, pair):
    row = {
        "step": step,
        "jump_count": int(jumps),
        "linear_count": int(linears),
        "diverged_count": int(diverged),
        "jump_rate": float(jumps) / max(jumps + linears, 1),
    }
    for hook in hooks:
        row.update(hook(step, xs, ys, pair))
    trace.rows.append(row)


def mean_log_potential_hook(pair: PotentialPair):
    """Records the log of the ensemble-average potential over the auxiliary block."""

    def hook(step, xs, ys, _pair):
        if ys is None or len(ys) == 0:
            return {"mean_log_G": float("nan")}
        log_g = pair.log_potential_batch(np.atleast_2d(ys))
        log_g = np.where(np.isfinite(log_g), log_g, -np.inf)
        return {"mean_log_G": float(logsumexp(log_g) - np.log(len(log_g)))}

    return hook


def simulate_ips(cfg: IpsConfig, pair: Optional[PotentialPair], hooks=()) -> RunTrace:
    """Fixed-N interacting particle run.

    Per step: advance every auxiliary particle by Q, freeze the auxiliary
    ensemble, then advance every primary particle by the mixture kernel
    against the frozen snapshot. With no jump configured the primary
    particles are N independent linear chains.
    """
    n = cfg.n_particles
    ids = list(cfg.stream_ids) if cfg.stream_ids is not None else list(range(n))
    if len(ids) != n:
        raise ValueError("stream_ids must have one entry per particle")
    # Jumps read the auxiliary block in canonical stream-id order, so a
    # consistent permutation of particles and streams permutes the output.
    order = np.argsort(ids)
    prim_rngs = [make_stream(cfg.seed, NS_PRIMARY, i) for i in ids]
    coin_rngs = [make_stream(cfg.seed, NS_COIN, i) for i in ids]

    primary = _EnsembleState(cfg.primary_kernel, cfg.init_primary, prim_rngs, pair.pi if pair else None)
    interacting = cfg.jump is not None and cfg.jump.epsilon > 0
    auxiliary = None
    if interacting:
        aux_rngs = [make_stream(cfg.seed, NS_AUXILIARY, i) for i in ids]
        auxiliary = _EnsembleState(cfg.auxiliary_kernel, cfg.init_auxiliary, aux_rngs, pair.eta_star)

    trace = RunTrace()
    diverged = 0
    jumps = linears = 0
    aux_view = auxiliary.states if auxiliary is not None else None
    _record(trace, 0, 0, 0, diverged, hooks, primary.states, aux_view, pair)

    for step in range(cfg.n_sim):
        try:
            if auxiliary is not None:
                diverged = _step_with_policy(
                    auxiliary, np.arange(n), step, cfg.divergence_policy, cfg.init_auxiliary, diverged
                )
                frozen = auxiliary.states[order]  # snapshot in canonical order
                weights = bg_weights(pair, frozen) if cfg.jump.kind is JumpKind.BG else None
                coins = np.array([r.random() < cfg.jump.epsilon for r in coin_rngs])
            else:
                frozen, weights = None, None
                coins = np.zeros(n, dtype=bool)

            diverged = _step_with_policy(
                primary, np.flatnonzero(~coins), step, cfg.divergence_policy, cfg.init_primary, diverged
            )
            for i in np.flatnonzero(coins):
                if cfg.jump.kind is JumpKind.BG:
                    primary.states[i] = bg_jump(pair, frozen, prim_rngs[i], weights=weights)
                else:
                    primary.states[i], _ = ar_jump(pair, primary.states[i], frozen, prim_rngs[i])
        except DivergenceError:
            diverged += 1
            trace.status = "diverged"
            break

        jumps += int(coins.sum())
        linears += int(n - coins.sum())
        trace.steps_completed = step + 1
        if (step + 1) % cfg.record_every == 0:
            _record(trace, step + 1, jumps, linears, diverged, hooks, primary.states, aux_view, pair)
            jumps = linears = 0

    trace.final_states = primary.states.copy()
    trace.final_aux_states = auxiliary.states.copy() if auxiliary is not None else None
    return trace


def simulate_growing_history(cfg: IpsConfig, pair: PotentialPair, hooks=()) -> RunTrace:
    """Single-trajectory variant: the jump measure is the auxiliary chain's past.

    One auxiliary trajectory is shared by all primary particles. Each step
    first advances the primary particles against the history accumulated so
    far (so the first step jumps against the lone initial auxiliary state),
    then extends the history by one auxiliary transition. After n steps the
    history holds exactly n + 1 states.
    """
    n = cfg.n_particles
    ids = list(cfg.stream_ids) if cfg.stream_ids is not None else list(range(n))
    prim_rngs = [make_stream(cfg.seed, NS_PRIMARY, i) for i in ids]
    coin_rngs = [make_stream(cfg.seed, NS_COIN, i) for i in ids]
    aux_rng = make_stream(cfg.seed, NS_AUXILIARY, 0)

    if cfg.jump is None or cfg.auxiliary_kernel is None or cfg.init_auxiliary is None:
        raise ValueError("growing-history runs require a jump interaction")

    primary = _EnsembleState(cfg.primary_kernel, cfg.init_primary, prim_rngs, pair.pi)
    aux = _EnsembleState(cfg.auxiliary_kernel, cfg.init_auxiliary, [aux_rng], pair.eta_star)
    history = [aux.states[0].copy()]

    trace = RunTrace()
    diverged = 0
    jumps = linears = 0
    _record(trace, 0, 0, 0, diverged, hooks, primary.states, np.array(history), pair)

    for step in range(cfg.n_sim):
        hist_arr = np.stack(history)
        try:
            weights = bg_weights(pair, hist_arr) if cfg.jump.kind is JumpKind.BG else None
            coins = np.array([r.random() < cfg.jump.epsilon for r in coin_rngs])
            diverged = _step_with_policy(
                primary, np.flatnonzero(~coins), step, cfg.divergence_policy, cfg.init_primary, diverged
            )
            for i in np.flatnonzero(coins):
                if cfg.jump.kind is JumpKind.BG:
                    primary.states[i] = bg_jump(pair, hist_arr, prim_rngs[i], weights=weights)
                else:
                    primary.states[i], _ = ar_jump(pair, primary.states[i], hist_arr, prim_rngs[i])

            diverged = _step_with_policy(
                aux, np.arange(1), step, cfg.divergence_policy, cfg.init_auxiliary, diverged
            )
            history.append(aux.states[0].copy())
        except DivergenceError:
            diverged += 1
            trace.status = "diverged"
            break

        jumps += int(coins.sum())
        linears += int(n - coins.sum())
        trace.steps_completed = step + 1
        if (step + 1) % cfg.record_every == 0:
            _record(trace, step + 1, jumps, linears, diverged, hooks, primary.states, np.stack(history), pair)
            jumps = linears = 0

    trace.final_states = primary.states.copy()
    trace.final_aux_states = np.stack(history)
    return trace
