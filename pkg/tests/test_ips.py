"""Particle drivers: reductions, ordering, exchangeability, memory, divergence."""

import tracemalloc

import numpy as np
import pytest

from nlmcmc.core import NS_PRIMARY, make_stream
from nlmcmc.interaction import JumpConfig, PotentialPair
from nlmcmc.ips import (
    IpsConfig,
    KernelConfig,
    gaussian_init,
    particle_average,
    simulate_growing_history,
    simulate_ips,
    uniform_box_init,
)
from nlmcmc.samplers import LangevinConfig, mala_step
from nlmcmc.targets import isotropic_gaussian
from nlmcmc.core import DivergenceError, LogTarget


def small_pair():
    return PotentialPair(pi=isotropic_gaussian(1.0, 2), eta_star=isotropic_gaussian(3.0, 2))


def mala_kernel(delta=0.1):
    return KernelConfig("mala", LangevinConfig(step_size=delta))


def base_config(**overrides):
    defaults = dict(
        n_particles=6,
        n_sim=40,
        primary_kernel=mala_kernel(),
        init_primary=uniform_box_init([-2.0, -2.0], [2.0, 2.0]),
        jump=JumpConfig(0.3, "bg"),
        auxiliary_kernel=mala_kernel(),
        init_auxiliary=uniform_box_init([-2.0, -2.0], [2.0, 2.0]),
        seed=123,
        record_every=10,
    )
    defaults.update(overrides)
    return IpsConfig(**defaults)


class TestReductionsAndShape:
    def test_no_interaction_equals_independent_chains(self):
        """With the jump disabled the driver is N separate single-chain runs,
        bitwise, under matched per-particle streams."""
        pair = small_pair()
        cfg = base_config(jump=None, auxiliary_kernel=None, init_auxiliary=None, n_sim=25)
        trace = simulate_ips(cfg, pair)

        init = uniform_box_init([-2.0, -2.0], [2.0, 2.0])
        for i in range(cfg.n_particles):
            rng = make_stream(cfg.seed, NS_PRIMARY, i)
            x = init(rng)
            for step in range(cfg.n_sim):
                x, _ = mala_step(pair.pi, x, cfg.primary_kernel.langevin, rng, step)
            np.testing.assert_array_equal(trace.final_states[i], x)

    def test_zero_steps_returns_initial_draws(self):
        pair = small_pair()
        cfg = base_config(n_sim=0)
        trace = simulate_ips(cfg, pair)
        assert len(trace.rows) == 1 and trace.rows[0]["step"] == 0
        init = uniform_box_init([-2.0, -2.0], [2.0, 2.0])
        expected = np.stack([init(make_stream(cfg.seed, NS_PRIMARY, i)) for i in range(6)])
        np.testing.assert_array_equal(trace.final_states, expected)

    @pytest.mark.parametrize("n_sim,every", [(40, 10), (41, 10), (7, 3), (12, 1)])
    def test_row_count_and_monotone_steps(self, n_sim, every):
        pair = small_pair()
        trace = simulate_ips(base_config(n_sim=n_sim, record_every=every), pair)
        assert len(trace.rows) == n_sim // every + 1
        steps = trace.steps
        assert np.all(np.diff(steps) > 0)

    def test_determinism_bitwise(self):
        pair = small_pair()
        a = simulate_ips(base_config(), pair)
        b = simulate_ips(base_config(), pair)
        np.testing.assert_array_equal(a.final_states, b.final_states)
        np.testing.assert_array_equal(a.final_aux_states, b.final_aux_states)


class TestStepOrdering:
    def test_jumps_read_only_frozen_auxiliary_block(self):
        """Pure-jump run: every X state is a member of the auxiliary ensemble
        advanced this step (and never of the previous step's ensemble)."""
        pair = small_pair()
        cfg = base_config(jump=JumpConfig(1.0, "bg"), n_sim=5, record_every=1)

        # independently reproduce the auxiliary trajectory with matched streams
        from nlmcmc.core import NS_AUXILIARY

        init = uniform_box_init([-2.0, -2.0], [2.0, 2.0])
        aux_rngs = [make_stream(cfg.seed, NS_AUXILIARY, i) for i in range(cfg.n_particles)]
        ys = np.stack([init(r) for r in aux_rngs])
        snapshots = [ys.copy()]
        for step in range(cfg.n_sim):
            ys = np.stack(
                [mala_step(pair.eta_star, ys[i], mala_kernel().langevin, aux_rngs[i], step)[0]
                 for i in range(cfg.n_particles)]
            )
            snapshots.append(ys.copy())

        trace = simulate_ips(cfg, pair)
        final = trace.final_states
        last, prev = snapshots[-1], snapshots[-2]
        for x in final:
            in_last = any(np.array_equal(x, y) for y in last)
            in_prev = any(np.array_equal(x, y) for y in prev)
            assert in_last and not in_prev

    def test_exchangeability_under_stream_permutation(self):
        """Permuting particle stream assignments permutes the final ensemble."""
        pair = small_pair()
        perm = [3, 5, 0, 1, 4, 2]
        a = simulate_ips(base_config(), pair)
        b = simulate_ips(base_config(stream_ids=perm), pair)
        np.testing.assert_array_equal(b.final_states, a.final_states[perm])


class TestMemory:
    def test_fixed_n_storage_independent_of_steps(self):
        pair = small_pair()

        def peak(n_sim):
            tracemalloc.start()
            simulate_ips(base_config(n_particles=32, n_sim=n_sim, record_every=n_sim), pair)
            _, high = tracemalloc.get_traced_memory()
            tracemalloc.stop()
            return high

        first = peak(20)
        second = peak(400)
        # allow slack for allocator noise; accumulation of states would add
        # ~400 * 32 * 2 * 8B = 200 kB
        assert second < first + 100_000

    def test_growing_history_length(self):
        pair = small_pair()
        for n in (0, 1, 7, 30):
            cfg = base_config(n_particles=3, n_sim=n, record_every=max(n, 1))
            trace = simulate_growing_history(cfg, pair)
            assert len(trace.final_aux_states) == n + 1


class TestGrowingHistory:
    def test_first_step_jumps_to_initial_auxiliary_state(self):
        """The first update sees only the lone initial auxiliary state, so a
        pure-jump first step moves every particle onto it."""
        pair = small_pair()
        from nlmcmc.core import NS_AUXILIARY

        cfg = base_config(jump=JumpConfig(1.0, "bg"), n_particles=4, n_sim=1, record_every=1)
        init = uniform_box_init([-2.0, -2.0], [2.0, 2.0])
        y0 = init(make_stream(cfg.seed, NS_AUXILIARY, 0))
        trace = simulate_growing_history(cfg, pair)
        for x in trace.final_states:
            np.testing.assert_array_equal(x, y0)

    def test_jump_targets_come_from_history(self):
        pair = small_pair()
        cfg = base_config(jump=JumpConfig(1.0, "bg"), n_particles=4, n_sim=12, record_every=12)
        trace = simulate_growing_history(cfg, pair)
        history = trace.final_aux_states
        for x in trace.final_states:
            assert any(np.array_equal(x, y) for y in history[:-1])

    def test_matches_fixed_run_shape(self):
        pair = small_pair()
        cfg = base_config(n_particles=5, n_sim=20, record_every=5)
        trace = simulate_growing_history(cfg, pair)
        assert trace.final_states.shape == (5, 2)
        assert len(trace.rows) == 5


class TestDivergencePolicies:
    @staticmethod
    def trap_target():
        """Quadratic well with a poisoned gradient outside |x0| < 2."""

        def gradient(x):
            x = np.asarray(x, dtype=float)
            g = -x
            bad = np.abs(x[..., 0]) > 2.0
            return np.where(bad[..., None], np.inf, g)

        return LogTarget(
            dim=1,
            log_density=lambda x: -0.5 * np.sum(np.asarray(x) ** 2, axis=-1),
            gradient=gradient,
            label="trap",
        )

    def _config(self, policy):
        return IpsConfig(
            n_particles=8,
            n_sim=60,
            primary_kernel=KernelConfig("ula", LangevinConfig(step_size=0.4)),
            init_primary=gaussian_init([0.0], 0.1),
            jump=None,
            seed=5,
            record_every=10,
            divergence_policy=policy,
        )

    def test_abort_marks_run_diverged(self):
        pair = PotentialPair(pi=self.trap_target(), eta_star=self.trap_target())
        trace = simulate_ips(self._config("abort"), pair)
        assert trace.status == "diverged"
        assert trace.steps_completed < 60

    def test_reinit_recovers_and_counts(self):
        pair = PotentialPair(pi=self.trap_target(), eta_star=self.trap_target())
        trace = simulate_ips(self._config("reinit"), pair)
        assert trace.status == "ok"
        assert trace.rows[-1]["diverged_count"] > 0
        assert np.all(np.isfinite(trace.final_states))


class TestParticleAverage:
    def test_constant_function(self):
        states = np.random.default_rng(0).normal(size=(50, 2))
        assert particle_average(states, lambda xs: np.ones(len(xs))) == 1.0

    def test_antisymmetric_ensemble(self):
        states = np.array([[1.0, 2.0], [-1.0, -2.0], [0.5, 0.0], [-0.5, 0.0]])
        assert particle_average(states, lambda xs: xs[:, 0]) == pytest.approx(0.0, abs=1e-15)

    def test_scalar_function_fallback(self):
        states = np.array([[1.0], [2.0], [3.0]])
        assert particle_average(states, lambda x: float(np.sum(x))) == pytest.approx(2.0)
