"""Linear kernels: trivial reductions, bias formulas, MH exactness, divergence."""

import numpy as np
import pytest

from nlmcmc.core import DivergenceError, LogTarget, make_stream
from nlmcmc.samplers import (
    LangevinConfig,
    RmsState,
    init_rms,
    mala_ensemble,
    mala_step,
    rms_mala_step,
    rms_ula_step,
    step_decay,
    ula_ensemble,
    ula_step,
)
from nlmcmc.targets import MixtureOfGaussians, isotropic_gaussian

from oracles import ar1_stationary_variance


def product_standard_normal(d: int) -> LogTarget:
    """d independent N(0,1) coordinates; lets one state carry d parallel chains."""
    return LogTarget(
        dim=d,
        log_density=lambda x: -0.5 * np.sum(np.asarray(x) ** 2, axis=-1),
        gradient=lambda x: -np.asarray(x, dtype=float),
        label="product_normal",
    )


class _FixedDraws:
    """Deterministic stand-in for a Generator: scripted normal and uniform draws."""

    def __init__(self, normals, uniforms):
        self._normals = list(normals)
        self._uniforms = list(uniforms)

    def standard_normal(self, d):
        return np.asarray(self._normals.pop(0), dtype=float)

    def random(self):
        return self._uniforms.pop(0)


class TestUla:
    def test_zero_step_is_identity(self):
        target = isotropic_gaussian(1.0, 2)
        x = np.array([0.3, -1.2])
        out = ula_step(target, x, LangevinConfig(step_size=0.0), make_stream(0, 0, 0))
        np.testing.assert_array_equal(out, x)

    def test_stationary_variance_matches_ar1(self):
        """On N(0,1) the chain is AR(1) with variance 1/(1 - delta/2)."""
        delta = 0.1
        d = 4000
        target = product_standard_normal(d)
        cfg = LangevinConfig(step_size=delta)
        rng = make_stream(1, 0, 0)
        x = rng.standard_normal(d)
        for _ in range(400):
            x = ula_step(target, x, cfg, rng)
        collected = []
        for i in range(500):
            x = ula_step(target, x, cfg, rng)
            if i % 25 == 0:
                collected.append(x.copy())
        var = np.concatenate(collected).var()
        assert var == pytest.approx(ar1_stationary_variance(delta), rel=0.02)

    def test_tempered_variance_scales_by_tau(self):
        delta, tau = 0.1, 1e-2
        d = 4000
        target = product_standard_normal(d)
        cfg = LangevinConfig(step_size=delta, temper_tau=tau)
        rng = make_stream(2, 0, 0)
        x = np.zeros(d)
        for _ in range(400):
            x = ula_step(target, x, cfg, rng)
        collected = []
        for i in range(500):
            x = ula_step(target, x, cfg, rng)
            if i % 25 == 0:
                collected.append(x.copy())
        var = np.concatenate(collected).var()
        assert var == pytest.approx(ar1_stationary_variance(delta, tau), rel=0.05)

    @pytest.mark.filterwarnings("ignore:overflow")
    def test_divergence_signals(self):
        target = LogTarget(
            dim=1,
            log_density=lambda x: -np.sum(np.asarray(x) ** 4, axis=-1),
            gradient=lambda x: -4.0 * np.asarray(x, dtype=float) ** 3,
        )
        with pytest.raises(DivergenceError) as err:
            x = np.array([1e200])
            ula_step(target, x, LangevinConfig(step_size=1.0), make_stream(0, 0, 0))
        assert err.value.indices is not None


class TestMala:
    def test_proposal_equal_to_current_accepts(self):
        """A proposal landing exactly at x has acceptance probability 1."""
        target = isotropic_gaussian(1.0, 2)
        delta = 0.2
        x = np.array([1.5, -0.5])
        # choose z so that x + delta * grad + sqrt(2 delta) z == x
        z = -delta * target.gradient(x) / np.sqrt(2.0 * delta)
        rng = _FixedDraws([z], [1.0 - 1e-12])
        out, accepted = mala_step(target, x, LangevinConfig(step_size=delta), rng)
        assert accepted
        np.testing.assert_allclose(out, x, atol=1e-14)

    def test_long_run_variance_exact(self):
        """MH correction makes the chain exact: variance -> 1 within 3 SE."""
        from oracles import batch_means_se_of_variance

        target = isotropic_gaussian(1.0, 1)
        cfg = LangevinConfig(step_size=0.5)
        rng = make_stream(3, 0, 0)
        x = np.zeros(1)
        n = 30_000
        chain = np.empty(n)
        for i in range(n):
            x, _ = mala_step(target, x, cfg, rng)
            chain[i] = x[0]
        chain = chain[2000:]
        se = batch_means_se_of_variance(chain)
        assert abs(chain.var(ddof=1) - 1.0) <= 3 * se

    def test_acceptance_monotone_in_step_size(self):
        target = isotropic_gaussian(1.0, 2)
        rates = {}
        for delta in (0.01, 0.1, 1.0):
            acc = []
            for seed in range(3):
                rng = make_stream(seed, 0, 0)
                x = np.zeros(2)
                hits = 0
                for _ in range(2000):
                    x, ok = mala_step(target, x, LangevinConfig(step_size=delta), rng)
                    hits += ok
                acc.append(hits / 2000)
            rates[delta] = np.mean(acc)
        assert rates[0.01] >= rates[0.1] >= rates[1.0]

    def test_rejects_zero_density_proposal(self):
        """Proposals into zero-density regions are rejected, not fatal."""

        def log_density(x):
            x = np.asarray(x, dtype=float)
            inside = np.abs(x[..., 0]) < 1.0
            return np.where(inside, 0.0, -np.inf)

        target = LogTarget(
            dim=1, log_density=log_density, gradient=lambda x: np.zeros_like(np.asarray(x, dtype=float))
        )
        x = np.array([0.9])
        z = np.array([10.0])  # pushes the proposal far outside
        rng = _FixedDraws([z], [0.0])
        out, accepted = mala_step(target, x, LangevinConfig(step_size=0.5), rng)
        assert not accepted
        np.testing.assert_array_equal(out, x)

    def test_ensemble_matches_single_steps_bitwise(self):
        target = isotropic_gaussian(2.0, 2)
        cfg = LangevinConfig(step_size=0.05)
        xs = np.array([[0.0, 1.0], [2.0, -1.0], [0.5, 0.5]])
        batch_rngs = [make_stream(7, 0, i) for i in range(3)]
        single_rngs = [make_stream(7, 0, i) for i in range(3)]
        batch, acc = mala_ensemble(target, xs, cfg, batch_rngs)
        for i in range(3):
            out, ok = mala_step(target, xs[i], cfg, single_rngs[i])
            np.testing.assert_array_equal(batch[i], out)
            assert ok == acc[i]


class TestRms:
    def test_beta_one_freezes_accumulator(self):
        target = isotropic_gaussian(1.0, 2)
        rms = RmsState(r=np.array([0.5, 2.0]), beta=1.0, eps=1e-9)
        _, new = rms_ula_step(target, np.ones(2), rms, LangevinConfig(step_size=0.01), make_stream(0, 0, 0))
        np.testing.assert_array_equal(new.r, rms.r)

    def test_beta_zero_tracks_squared_gradient(self):
        target = isotropic_gaussian(1.0, 2)
        x = np.array([3.0, -2.0])
        rms = RmsState(r=np.array([5.0, 5.0]), beta=0.0, eps=1e-9)
        _, new = rms_ula_step(target, x, rms, LangevinConfig(step_size=0.01), make_stream(0, 0, 0))
        np.testing.assert_array_equal(new.r, target.gradient(x) ** 2)

    def test_effective_steps_follow_gradient_scale(self):
        """On an anisotropic Gaussian the per-coordinate steps differ by the
        gradient-scale ratio (settings beta=0.9, eps=1e-9)."""
        target = MixtureOfGaussians(
            means=[[0.0, 0.0]], covariances=[np.array([1.0, 100.0])], weights=[1.0]
        )
        x = np.array([1.0, 1.0])
        grad = target.gradient(x)
        rms = init_rms(2, beta=0.9, eps=1e-9)
        delta = 0.01
        _, new = rms_ula_step(target, x, rms, LangevinConfig(step_size=delta), make_stream(0, 0, 0))
        eff = delta / np.sqrt(new.r + 1e-9)
        # eps shifts the tiny-gradient coordinate by ~1e-4 relative
        assert eff[1] / eff[0] == pytest.approx(abs(grad[0]) / abs(grad[1]), rel=1e-3)

    def test_accumulator_stays_nonnegative(self):
        target = isotropic_gaussian(1.0, 3)
        rng = make_stream(5, 0, 0)
        rms = init_rms(3)
        x = rng.standard_normal(3)
        cfg = LangevinConfig(step_size=0.05)
        for _ in range(200):
            x, rms = rms_ula_step(target, x, rms, cfg, rng)
            assert np.all(rms.r >= 0)

    def test_rms_mala_reduces_to_mala_with_uniform_accumulator(self):
        """With beta = 1 and a constant accumulator the metropolized RMS step
        equals plain MALA at stepsize delta / sqrt(r + eps), draw for draw."""
        target = isotropic_gaussian(1.0, 2)
        r0, eps = 4.0, 1e-9
        delta = 0.3
        x = np.array([0.7, -0.2])
        rms = RmsState(r=np.full(2, r0), beta=1.0, eps=eps)
        out_rms, _, acc_rms = rms_mala_step(
            target, x, rms, LangevinConfig(step_size=delta), make_stream(11, 0, 0)
        )
        out_mala, acc_mala = mala_step(
            target, x, LangevinConfig(step_size=delta / np.sqrt(r0 + eps)), make_stream(11, 0, 0)
        )
        np.testing.assert_allclose(out_rms, out_mala, atol=1e-14)
        assert acc_rms == acc_mala

    def test_rms_mala_proposal_equal_to_current_accepts(self):
        """At beta = 0 (memoryless accumulator, a true Markov kernel) a
        proposal landing exactly at x is accepted with probability 1."""
        target = isotropic_gaussian(1.0, 2)
        delta = 0.2
        x = np.array([1.0, 2.0])
        rms = RmsState(r=np.array([5.0, 7.0]), beta=0.0, eps=1e-9)
        r_new = target.gradient(x) ** 2
        delta_hat = delta / np.sqrt(r_new + rms.eps)
        z = -delta_hat * target.gradient(x) / np.sqrt(2.0 * delta_hat)
        rng = _FixedDraws([z], [1.0 - 1e-12])
        out, _, accepted = rms_mala_step(target, x, rms, LangevinConfig(step_size=delta), rng)
        assert accepted
        np.testing.assert_allclose(out, x, atol=1e-13)

    def test_rms_mala_memoryless_is_exact(self):
        """beta = 0 gives a position-dependent Metropolis kernel that is
        exactly invariant: long-run variance matches 1 within 3 SE."""
        from nlmcmc.samplers import rms_mala_ensemble

        target = isotropic_gaussian(1.0, 1)
        cfg = LangevinConfig(step_size=0.3, rms_beta=0.0)
        rngs = [make_stream(31, 0, i) for i in range(24)]
        xs = np.stack([r.standard_normal(1) for r in rngs])
        r = xs**2
        kept = []
        for n in range(3000):
            xs, r, _ = rms_mala_ensemble(target, xs, r, cfg, rngs, n)
            if n >= 500:
                kept.append(xs[:, 0].copy())
        per_chain = np.array(kept).var(axis=0, ddof=1)
        se = per_chain.std(ddof=1) / np.sqrt(24)
        assert abs(per_chain.mean() - 1.0) <= 3 * se

    def test_rms_mala_smoothing_bias_is_bounded(self):
        """beta > 0 carries history, so the kernel is only approximately
        invariant; the variance inflation stays modest at moderate steps."""
        from nlmcmc.samplers import rms_mala_ensemble

        target = isotropic_gaussian(1.0, 1)
        cfg = LangevinConfig(step_size=0.5, rms_beta=0.9)
        rngs = [make_stream(32, 0, i) for i in range(24)]
        xs = np.stack([r.standard_normal(1) for r in rngs])
        r = xs**2
        kept = []
        for n in range(3000):
            xs, r, _ = rms_mala_ensemble(target, xs, r, cfg, rngs, n)
            if n >= 500:
                kept.append(xs[:, 0].copy())
        var = np.array(kept).var(axis=0, ddof=1).mean()
        assert abs(var - 1.0) < 0.1


class TestSchedulesAndDeterminism:
    def test_step_decay_schedule(self):
        sched = step_decay(0.001, 0.1, 2000)
        assert sched(0) == pytest.approx(0.001)
        assert sched(1999) == pytest.approx(0.001)
        assert sched(2000) == pytest.approx(0.0001)
        assert sched(4000) == pytest.approx(1e-5)

    def test_fixed_stream_reproduces_chain(self):
        target = isotropic_gaussian(1.0, 2)
        cfg = LangevinConfig(step_size=0.1)

        def run():
            rng = make_stream(21, 0, 0)
            x = np.zeros(2)
            for i in range(50):
                x, _ = mala_step(target, x, cfg, rng, step=i)
            return x

        np.testing.assert_array_equal(run(), run())

    def test_dimension_preserved(self):
        target = isotropic_gaussian(1.0, 3)
        rng = make_stream(4, 0, 0)
        x = np.zeros(3)
        out = ula_step(target, x, LangevinConfig(step_size=0.1), rng)
        assert out.shape == (3,)
        out, _ = mala_step(target, out, LangevinConfig(step_size=0.1), rng)
        assert out.shape == (3,)
