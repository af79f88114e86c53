"""Forward filter: exact-arithmetic agreement and recursion structure."""

import numpy as np
import pytest

from ascankit.kalman import kf_filter, kf_step, random_walk_params
from ascankit.model import DegenerateModelError, FilterParams, Trace

from oracles import rational_kf_step


def _rel_err(value: float, exact) -> float:
    exact = float(exact)
    return abs(value - exact) / max(1.0, abs(exact))


class TestKfStep:
    def test_worked_identity_model_example(self):
        # Identity model, q=r=1, flat start: one step from (x=1, p=1) with
        # measurement 2 blends with gain 2/3 -> x_post = 5/3, p_post = 2/3.
        params = FilterParams(f=1, h=1, gu=0, q=1, r=1, x0=0, p0=0)
        x_prior, p_prior, gain, x_post, p_post = kf_step(1.0, 1.0, 2.0, params)
        assert x_prior == 1.0
        assert p_prior == 2.0
        assert gain == pytest.approx(2.0 / 3.0, rel=1e-15)
        assert x_post == pytest.approx(5.0 / 3.0, rel=1e-15)
        assert p_post == pytest.approx(2.0 / 3.0, rel=1e-15)

    def test_worked_random_walk_example(self):
        # One step from rest (x=0, p=1) with measurement 2 under q=0.1, r=1:
        # p_prior = 1.1, gain = 11/21, x_post = 22/21, p_post = 11/21.
        params = FilterParams(f=1, h=1, gu=0, q=0.1, r=1, x0=0, p0=0)
        x_prior, p_prior, gain, x_post, p_post = kf_step(0.0, 1.0, 2.0, params)
        assert x_prior == 0.0
        assert p_prior == 1.1
        assert gain == pytest.approx(11.0 / 21.0, rel=1e-15)
        assert x_post == pytest.approx(22.0 / 21.0, rel=1e-15)
        assert p_post == pytest.approx(11.0 / 21.0, rel=1e-15)

    def test_agrees_with_rational_arithmetic(self):
        rng = np.random.default_rng(20240811)
        for _ in range(300):
            f, h, gu = rng.standard_normal(3) * 2.0
            if h == 0.0:
                h = 1.0
            q, r = 10.0 ** rng.uniform(-6, 2, size=2)
            x_prev, y = rng.standard_normal(2) * 10.0
            p_prev = float(10.0 ** rng.uniform(-6, 2))
            params = FilterParams(f=f, h=h, gu=gu, q=q, r=r, x0=0, p0=0)
            got = kf_step(float(x_prev), p_prev, float(y), params)
            want = rational_kf_step(float(x_prev), p_prev, float(y), f, h, gu, q, r)
            for value, exact in zip(got, want):
                assert _rel_err(value, exact) <= 1e-12

    def test_zero_denominator_raises(self):
        params = FilterParams(f=1, h=0, gu=0, q=1, r=0, x0=0, p0=0)
        with pytest.raises(DegenerateModelError):
            kf_step(0.0, 1.0, 1.0, params)

    def test_r_zero_tracks_measurement_exactly(self):
        params = FilterParams(f=1, h=1, gu=0, q=1, r=0, x0=0, p0=0)
        _, _, gain, x_post, p_post = kf_step(5.0, 2.0, -3.25, params)
        assert gain == 1.0
        assert x_post == -3.25
        assert p_post == 0.0

    def test_zero_prior_variance_ignores_measurement(self):
        params = FilterParams(f=1, h=1, gu=0, q=0, r=1, x0=0, p0=0)
        x_prior, p_prior, gain, x_post, p_post = kf_step(5.0, 0.0, 123.0, params)
        assert p_prior == 0.0
        assert gain == 0.0
        assert x_post == x_prior == 5.0
        assert p_post == 0.0


class TestKfFilter:
    def test_matches_stepwise_recursion(self):
        rng = np.random.default_rng(7)
        samples = rng.standard_normal(64)
        params = FilterParams(f=0.9, h=1.1, gu=0.2, q=0.3, r=0.7, x0=0.5, p0=2.0)
        trajectory = kf_filter(Trace(samples, 1e-6), params)
        x, p = params.x0, params.p0
        for k, y in enumerate(samples):
            x_prior, p_prior, gain, x, p = kf_step(x, p, float(y), params)
            assert trajectory.x_prior[k] == x_prior
            assert trajectory.p_prior[k] == p_prior
            assert trajectory.gain[k] == gain
            assert trajectory.x_post[k] == x
            assert trajectory.p_post[k] == p

    def test_first_sample_gets_a_full_cycle(self):
        # The seed state is the posterior *before* sample 0, so the first
        # prior variance is already p0 + q, not p0.
        params = FilterParams(f=1, h=1, gu=0, q=0.25, r=1.0, x0=0.0, p0=1.0)
        trajectory = kf_filter(Trace([3.0], 1e-6), params)
        assert trajectory.p_prior[0] == 1.25
        assert trajectory.x_prior[0] == 0.0

    def test_variance_sequence_converges_to_fixed_point(self):
        # The steady-state posterior variance of the scalar random walk
        # solves p = r(p + q)/(p + q + r).
        q, r = 0.04, 1.0
        params = FilterParams(f=1, h=1, gu=0, q=q, r=r, x0=0, p0=r)
        trajectory = kf_filter(Trace(np.zeros(4000), 1e-6), params)
        p = trajectory.p_post[-1]
        assert p == pytest.approx(r * (p + q) / (p + q + r), rel=1e-12)

    def test_constant_trace_is_reproduced_exactly(self):
        c = -2.75
        params = FilterParams(f=1, h=1, gu=0, q=0.3, r=0.9, x0=c, p0=0.9)
        trajectory = kf_filter(Trace(np.full(40, c), 1e-6), params)
        assert np.all(trajectory.x_post == c)

    def test_length_one_trace_is_a_single_step(self):
        params = FilterParams(f=0.8, h=1.2, gu=-0.1, q=0.5, r=0.25, x0=1.5, p0=2.0)
        trajectory = kf_filter(Trace([0.75], 1e-6), params)
        assert len(trajectory) == 1
        step = kf_step(params.x0, params.p0, 0.75, params)
        assert (
            trajectory.x_prior[0],
            trajectory.p_prior[0],
            trajectory.gain[0],
            trajectory.x_post[0],
            trajectory.p_post[0],
        ) == step

    def test_white_noise_variance_is_reduced(self):
        rng = np.random.default_rng(99)
        noise = rng.standard_normal(10_000)
        trace = Trace(noise, 1e-6)
        params = random_walk_params(trace, q=1e-4, r=1.0)
        trajectory = kf_filter(trace, params)
        assert np.var(trajectory.x_post) < np.var(noise)

    def test_length_and_dtype(self):
        params = FilterParams(f=1, h=1, gu=0, q=1, r=1, x0=0, p0=1)
        trajectory = kf_filter(Trace(np.arange(5.0), 1e-6), params)
        assert len(trajectory) == 5
        assert trajectory.x_post.dtype == np.float64

    def test_gain_depends_only_on_params(self):
        rng = np.random.default_rng(11)
        params = FilterParams(f=1, h=1, gu=0, q=0.01, r=1.0, x0=0, p0=1.0)
        first = kf_filter(Trace(rng.standard_normal(128), 1e-6), params)
        second = kf_filter(Trace(rng.uniform(-50, 50, 128), 1e-6), params)
        assert np.array_equal(first.gain, second.gain)
        assert 0.0 < first.gain.min() and first.gain.max() < 1.0

    def test_gain_increments_eventually_shrink_monotonically(self):
        params = FilterParams(f=1, h=1, gu=0, q=0.05, r=2.0, x0=0, p0=7.0)
        trajectory = kf_filter(Trace(np.zeros(200), 1e-6), params)
        deltas = np.abs(np.diff(trajectory.gain))
        tail = deltas[5:]
        assert np.all(tail[1:] <= tail[:-1])
        assert tail[-1] < 1e-12

    def test_first_gain_decreases_as_r_grows(self):
        gains = []
        for r in (0.1, 1.0, 10.0, 100.0):
            params = FilterParams(f=1, h=1, gu=0, q=0.5, r=r, x0=0, p0=1.0)
            gains.append(kf_filter(Trace([1.0, 2.0], 1e-6), params).gain[0])
        assert all(a > b for a, b in zip(gains, gains[1:]))

    def test_scaling_is_exact_for_power_of_two_factors(self):
        # With x0 = 0 and gu = 0 the measurement-to-estimate map is linear,
        # and a power-of-two scale factor commutes with every rounding step.
        rng = np.random.default_rng(23)
        samples = rng.standard_normal(96)
        params = FilterParams(f=1, h=1, gu=0, q=3e-3, r=0.8, x0=0.0, p0=0.8)
        base = kf_filter(Trace(samples, 1e-6), params)
        scaled = kf_filter(Trace(samples * 0.0078125, 1e-6), params)
        assert np.array_equal(scaled.x_post, base.x_post * 0.0078125)


class TestRandomWalkParams:
    def test_identity_model_seeded_from_first_sample(self):
        trace = Trace([4.5, 1.0, 2.0], 1e-6)
        params = random_walk_params(trace, q=1e-3, r=0.5)
        assert (params.f, params.h, params.gu) == (1.0, 1.0, 0.0)
        assert params.x0 == 4.5
        assert params.p0 == 0.5
        assert (params.q, params.r) == (1e-3, 0.5)
