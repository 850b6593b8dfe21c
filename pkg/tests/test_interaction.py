"""Jump interactions: weights, acceptance ratios, mixture branching, invariances."""

import numpy as np
import pytest

from nlmcmc.core import EmptySupportError, LogTarget, PotentialUndefinedError, make_stream
from nlmcmc.interaction import (
    Branch,
    JumpConfig,
    PotentialPair,
    ar_accept_prob,
    ar_jump,
    bg_jump,
    bg_weights,
    k_eta_step,
    log_potential,
)
from nlmcmc.targets import isotropic_gaussian


def dyadic_target(slope: float, shift: float = 0.0) -> LogTarget:
    """Log-density slope * x0 + shift; with dyadic slope/shift and integer
    states every evaluation and additive rescaling is exact in binary."""
    return LogTarget(
        dim=1,
        log_density=lambda x: slope * np.asarray(x, dtype=float)[..., 0] + shift,
        label=f"dyadic({slope})",
    )


def uniform_box_target(half_width: float) -> LogTarget:
    def log_density(x):
        x = np.asarray(x, dtype=float)
        inside = np.all(np.abs(x) <= half_width, axis=-1)
        return np.where(inside, 0.0, -np.inf)

    return LogTarget(dim=2, log_density=log_density, label="box")


class TestLogPotential:
    def test_identical_targets_give_zero(self):
        t = isotropic_gaussian(1.0, 2)
        pair = PotentialPair(pi=t, eta_star=t)
        rng = np.random.default_rng(0)
        for _ in range(20):
            assert log_potential(pair, rng.normal(size=2)) == 0.0

    def test_gaussian_variance_ratio_at_origin(self):
        """pi = N(0,1), eta* = N(0,4): the density ratio at 0 is 2."""
        pair = PotentialPair(pi=isotropic_gaussian(1.0, 1), eta_star=isotropic_gaussian(2.0, 1))
        assert log_potential(pair, np.zeros(1)) == pytest.approx(np.log(2.0), abs=1e-12)

    def test_rescaling_pi_shifts_uniformly(self):
        base = isotropic_gaussian(1.0, 1)
        scaled = LogTarget(
            dim=1, log_density=lambda x: base.log_density(x) + np.log(10.0)
        )
        aux = isotropic_gaussian(2.0, 1)
        pair = PotentialPair(pi=base, eta_star=aux)
        pair_scaled = PotentialPair(pi=scaled, eta_star=aux)
        rng = np.random.default_rng(1)
        xs = rng.normal(size=(50, 1))
        shifts = pair_scaled.log_potential_batch(xs) - pair.log_potential_batch(xs)
        np.testing.assert_allclose(shifts, np.log(10.0), atol=1e-12)
        w = bg_weights(pair, xs).normalized_weights
        w_scaled = bg_weights(pair_scaled, xs).normalized_weights
        np.testing.assert_allclose(w, w_scaled, atol=1e-14)

    def test_vanishing_auxiliary_density_raises(self):
        pair = PotentialPair(pi=isotropic_gaussian(1.0, 2), eta_star=uniform_box_target(1.0))
        with pytest.raises(PotentialUndefinedError):
            log_potential(pair, np.array([5.0, 5.0]))


class TestBgWeights:
    def test_equal_potentials_give_uniform(self):
        t = isotropic_gaussian(1.0, 2)
        pair = PotentialPair(pi=t, eta_star=t)
        states = np.random.default_rng(0).normal(size=(8, 2))
        np.testing.assert_allclose(bg_weights(pair, states).normalized_weights, 1.0 / 8)

    def test_two_particle_arithmetic(self):
        """G values (1, 3) select with weights (0.25, 0.75)."""
        pair = PotentialPair(pi=dyadic_target(np.log(3.0)), eta_star=dyadic_target(0.0))
        states = np.array([[0.0], [1.0]])  # G = (1, 3)
        np.testing.assert_allclose(
            bg_weights(pair, states).normalized_weights, [0.25, 0.75], atol=1e-15
        )

    def test_zero_density_particle_gets_zero_weight(self):
        pair = PotentialPair(pi=uniform_box_target(1.0), eta_star=isotropic_gaussian(4.0, 2))
        states = np.array([[0.0, 0.0], [0.5, 0.5], [3.0, 3.0]])
        w = bg_weights(pair, states).normalized_weights
        assert w[2] == 0.0 and w[:2].sum() == pytest.approx(1.0)

    def test_empty_support_raises(self):
        pair = PotentialPair(pi=uniform_box_target(1.0), eta_star=isotropic_gaussian(4.0, 2))
        states = np.array([[3.0, 3.0], [-4.0, 2.0]])
        with pytest.raises(EmptySupportError):
            bg_weights(pair, states)


class TestBgJump:
    def test_single_particle_always_selected(self):
        t = isotropic_gaussian(1.0, 2)
        pair = PotentialPair(pi=t, eta_star=t)
        states = np.array([[2.0, -1.0]])
        out = bg_jump(pair, states, make_stream(0, 0, 0))
        np.testing.assert_array_equal(out, states[0])

    def test_selection_frequency_matches_weights(self):
        """Binomial oracle: P(select particle 2) = 0.75 within 0.006 at 1e5 draws."""
        pair = PotentialPair(pi=dyadic_target(np.log(3.0)), eta_star=dyadic_target(0.0))
        states = np.array([[0.0], [1.0]])
        rng = make_stream(42, 0, 0)
        n = 10**5
        hits = sum(bg_jump(pair, states, rng)[0] == 1.0 for _ in range(n))
        assert abs(hits / n - 0.75) < 0.006

    def test_identical_targets_resample_uniformly(self):
        t = isotropic_gaussian(1.0, 1)
        pair = PotentialPair(pi=t, eta_star=t)
        states = np.arange(4.0)[:, None]
        rng = make_stream(7, 0, 0)
        n = 4 * 10**4
        counts = np.zeros(4)
        for _ in range(n):
            counts[int(bg_jump(pair, states, rng)[0])] += 1
        assert np.all(np.abs(counts / n - 0.25) < 0.01)

    def test_output_copy_does_not_alias_ensemble(self):
        t = isotropic_gaussian(1.0, 1)
        pair = PotentialPair(pi=t, eta_star=t)
        states = np.array([[1.0]])
        out = bg_jump(pair, states, make_stream(0, 0, 0))
        out += 99.0
        assert states[0, 0] == 1.0


class TestArAcceptance:
    def test_self_move_accepted(self):
        pair = PotentialPair(pi=isotropic_gaussian(1.0, 1), eta_star=isotropic_gaussian(2.0, 1))
        x = np.array([0.3])
        assert ar_accept_prob(pair, x, x) == 1.0

    def test_log_ratio_arithmetic(self):
        """log G(y) - log G(x) = -log 4 gives acceptance 0.25."""
        pair = PotentialPair(pi=dyadic_target(-np.log(4.0)), eta_star=dyadic_target(0.0))
        assert ar_accept_prob(pair, np.array([0.0]), np.array([1.0])) == pytest.approx(0.25)

    def test_scale_invariance(self):
        base = isotropic_gaussian(1.0, 1)
        scaled = LogTarget(dim=1, log_density=lambda x: base.log_density(x) + 3.7)
        aux = isotropic_gaussian(3.0, 1)
        rng = np.random.default_rng(2)
        for _ in range(25):
            x, y = rng.normal(size=(2, 1))
            a = ar_accept_prob(PotentialPair(base, aux), x, y)
            b = ar_accept_prob(PotentialPair(scaled, aux), x, y)
            assert a == pytest.approx(b, abs=1e-14)

    def test_zero_potential_at_current_state_raises(self):
        pair = PotentialPair(pi=uniform_box_target(1.0), eta_star=isotropic_gaussian(4.0, 2))
        with pytest.raises(PotentialUndefinedError):
            ar_accept_prob(pair, np.array([5.0, 5.0]), np.array([0.0, 0.0]))


class TestArJump:
    def test_single_matching_particle_returns_x(self):
        t = isotropic_gaussian(1.0, 2)
        pair = PotentialPair(pi=t, eta_star=t)
        x = np.array([0.5, 0.5])
        out, _ = ar_jump(pair, x, x[None, :], make_stream(0, 0, 0))
        np.testing.assert_array_equal(out, x)

    def test_identical_targets_always_jump(self):
        t = isotropic_gaussian(1.0, 1)
        pair = PotentialPair(pi=t, eta_star=t)
        states = np.arange(3.0)[:, None]
        rng = make_stream(1, 0, 0)
        for _ in range(200):
            _, jumped = ar_jump(pair, np.array([9.9]), states, rng)
            assert jumped

    def test_stay_rate_matches_one_minus_mean_acceptance(self):
        """With alpha = (1, 0) over two particles the stay probability is 0.5."""
        pair = PotentialPair(pi=uniform_box_target(1.0), eta_star=isotropic_gaussian(4.0, 2))
        x = np.array([0.9, 0.0])
        # inside the box G is proportional to 1/eta*, so a particle farther
        # from the origin than x has alpha = 1; one outside the box has alpha = 0
        states = np.array([[0.0, 0.95], [3.0, 3.0]])
        assert ar_accept_prob(pair, x, states[0]) == 1.0
        assert ar_accept_prob(pair, x, states[1]) == 0.0
        rng = make_stream(3, 0, 0)
        n = 10**5
        stays = sum(not ar_jump(pair, x, states, rng)[1] for _ in range(n))
        assert abs(stays / n - 0.5) < 0.005

    def test_stay_rate_random_ensemble(self):
        pair = PotentialPair(pi=isotropic_gaussian(1.0, 1), eta_star=isotropic_gaussian(2.0, 1))
        rng = np.random.default_rng(4)
        x = np.array([1.4])
        states = rng.normal(0, 2, size=(6, 1))
        alphas = np.array([ar_accept_prob(pair, x, y) for y in states])
        expected_stay = 1.0 - alphas.mean()
        stream = make_stream(5, 0, 0)
        n = 10**5
        stays = sum(not ar_jump(pair, x, states, stream)[1] for _ in range(n))
        se = np.sqrt(expected_stay * (1 - expected_stay) / n)
        assert abs(stays / n - expected_stay) < 4 * se + 1e-12


class TestKEtaStep:
    @staticmethod
    def _pair_and_states():
        pair = PotentialPair(pi=isotropic_gaussian(1.0, 1), eta_star=isotropic_gaussian(2.0, 1))
        states = np.linspace(-1, 1, 5)[:, None]
        return pair, states

    def test_epsilon_zero_always_linear(self):
        pair, states = self._pair_and_states()
        linear = lambda x, rng: x + 1.0
        for _ in range(50):
            out, branch = k_eta_step(
                linear, pair, JumpConfig(0.0, "bg"), np.zeros(1), states,
                make_stream(0, 1, 0), make_stream(0, 0, 0),
            )
            assert branch is Branch.LINEAR

    def test_epsilon_one_bg_ignores_source_state(self):
        """Pure-jump BG: identical streams give identical output whatever x is."""
        pair, states = self._pair_and_states()
        linear = lambda x, rng: x
        outs = []
        for x0 in (np.array([-5.0]), np.array([17.0])):
            out, branch = k_eta_step(
                linear, pair, JumpConfig(1.0, "bg"), x0, states,
                make_stream(2, 1, 0), make_stream(2, 0, 0),
            )
            assert branch is Branch.JUMP
            outs.append(out)
        np.testing.assert_array_equal(outs[0], outs[1])

    def test_jump_frequency_binomial(self):
        """epsilon = 0.1: empirical jump rate within 0.003 over 1e5 steps."""
        pair, states = self._pair_and_states()
        linear = lambda x, rng: x
        coin = make_stream(9, 1, 0)
        dyn = make_stream(9, 0, 0)
        n = 10**5
        jumps = 0
        for _ in range(n):
            _, branch = k_eta_step(linear, pair, JumpConfig(0.1, "bg"), np.zeros(1), states, coin, dyn)
            jumps += branch is Branch.JUMP
        assert abs(jumps / n - 0.1) < 0.003


class TestScaleInvarianceBitwise:
    """Positive rescalings of pi or eta* leave weights, acceptances and draws
    bitwise identical when the additive log-shift is exact in binary."""

    def test_dyadic_rescaling_bitwise(self):
        # integer states, dyadic slopes and shifts: all arithmetic exact
        states = np.arange(-3.0, 4.0)[:, None]
        x = np.array([2.0])
        for shift_pi, shift_aux in [(0.5, 0.0), (0.0, -0.25), (2.0, 0.75)]:
            base = PotentialPair(pi=dyadic_target(0.375), eta_star=dyadic_target(-0.125))
            scaled = PotentialPair(
                pi=dyadic_target(0.375, shift_pi), eta_star=dyadic_target(-0.125, shift_aux)
            )
            w0 = bg_weights(base, states)
            w1 = bg_weights(scaled, states)
            np.testing.assert_array_equal(w0.normalized_weights, w1.normalized_weights)
            for y in states:
                assert ar_accept_prob(base, x, y) == ar_accept_prob(scaled, x, y)
            np.testing.assert_array_equal(
                bg_jump(base, states, make_stream(6, 0, 0)),
                bg_jump(scaled, states, make_stream(6, 0, 0)),
            )
            a = ar_jump(base, x, states, make_stream(8, 0, 0))
            b = ar_jump(scaled, x, states, make_stream(8, 0, 0))
            np.testing.assert_array_equal(a[0], b[0])
            assert a[1] == b[1]

    def test_gaussian_rescaling_draws_identical(self):
        """With generic float shifts the weights agree to 1e-12 and the drawn
        indices under a fixed stream are identical."""
        base_pi = isotropic_gaussian(1.0, 1)
        aux = isotropic_gaussian(2.0, 1)
        scaled_pi = LogTarget(dim=1, log_density=lambda x: base_pi.log_density(x) + 1.234)
        rng = np.random.default_rng(10)
        states = rng.normal(0, 2, size=(32, 1))
        w0 = bg_weights(PotentialPair(base_pi, aux), states)
        w1 = bg_weights(PotentialPair(scaled_pi, aux), states)
        np.testing.assert_allclose(w0.normalized_weights, w1.normalized_weights, atol=1e-12)
        for seed in range(30):
            np.testing.assert_array_equal(
                bg_jump(PotentialPair(base_pi, aux), states, make_stream(seed, 0, 0)),
                bg_jump(PotentialPair(scaled_pi, aux), states, make_stream(seed, 0, 0)),
            )
