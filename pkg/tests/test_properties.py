"""Cross-cutting invariants checked over generated inputs.

Each property here states something the pipeline promises for *every*
input in a realistic domain, not just the worked examples: variance
contraction, measurement betweenness, smoother optimality, exact scaling
laws, and format round trips.  Noise variances are drawn log-uniformly
over [1e-6, 1e2]; far outside that range one-ulp rounding artifacts can
break the strict forms of these inequalities.
"""

import math

import numpy as np
from hypothesis import given, settings, strategies as st

from ascankit.adapt import estimate_r
from ascankit.baseline import differential_subtract
from ascankit.io import format_kv, parse_kv
from ascankit.kalman import kf_filter, kf_step, random_walk_params
from ascankit.metrics import envelope
from ascankit.model import FilterParams, Trace
from ascankit.rts import rts_smooth
from oracles import map_smoothed_states

COMMON = settings(max_examples=200, deadline=None, derandomize=True)

LOG_NOISE = st.floats(min_value=-6.0, max_value=2.0).map(lambda e: 10.0**e)
STATE = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)
SAMPLES = st.lists(STATE, min_size=2, max_size=40)
DYADIC = st.lists(
    st.integers(min_value=-(2**20), max_value=2**20), min_size=1, max_size=64
)


def _random_walk_step(x_prev, p_prev, y, q, r):
    params = FilterParams(f=1.0, h=1.0, gu=0.0, q=q, r=r, x0=0.0, p0=1.0)
    return kf_step(x_prev, p_prev, y, params)


class TestFilterStep:
    @COMMON
    @given(
        x=STATE,
        p=st.floats(min_value=0.0, max_value=1e2),
        y=STATE,
        q=LOG_NOISE,
        r=LOG_NOISE,
    )
    def test_variance_contracts_and_gain_stays_inside_unit_interval(self, x, p, y, q, r):
        _, p_prior, gain, _, p_post = _random_walk_step(x, p, y, q, r)
        assert 0.0 < gain < 1.0
        assert p_post < p_prior
        assert p_post < r

    @COMMON
    @given(
        x=STATE,
        p=st.floats(min_value=0.0, max_value=1e2),
        y=STATE,
        q=LOG_NOISE,
        r=LOG_NOISE,
    )
    def test_update_lands_between_prediction_and_measurement(self, x, p, y, q, r):
        x_prior, _, _, x_post, _ = _random_walk_step(x, p, y, q, r)
        slack = 1e-9 * (1.0 + abs(x_prior) + abs(y))
        assert min(x_prior, y) - slack <= x_post <= max(x_prior, y) + slack

    @COMMON
    @given(
        x=STATE,
        p=st.floats(min_value=0.0, max_value=1e2),
        y=STATE,
        q=LOG_NOISE,
        r=LOG_NOISE,
    )
    def test_update_never_moves_away_from_the_measurement(self, x, p, y, q, r):
        x_prior, _, _, x_post, _ = _random_walk_step(x, p, y, q, r)
        slack = 1e-9 * (1.0 + abs(x_prior) + abs(y))
        assert abs(x_post - y) <= abs(x_prior - y) + slack


class TestSmoother:
    @COMMON
    @given(xs=SAMPLES, q=LOG_NOISE, r=LOG_NOISE)
    def test_smoothing_never_raises_the_variance(self, xs, q, r):
        trace = Trace(np.array(xs), 1e-8)
        params = random_walk_params(trace, q, r)
        trajectory = kf_filter(trace, params)
        x_smooth, p_smooth = rts_smooth(trajectory, params)
        assert np.all(p_smooth <= trajectory.p_post)
        assert x_smooth[-1] == trajectory.x_post[-1]
        assert p_smooth[-1] == trajectory.p_post[-1]

    @settings(max_examples=60, deadline=None, derandomize=True)
    @given(
        xs=st.lists(
            st.floats(min_value=-100.0, max_value=100.0), min_size=2, max_size=12
        ),
        q=st.floats(min_value=-3.0, max_value=1.0).map(lambda e: 10.0**e),
        r=st.floats(min_value=-3.0, max_value=1.0).map(lambda e: 10.0**e),
    )
    def test_smoothed_states_solve_the_quadratic_system(self, xs, q, r):
        trace = Trace(np.array(xs), 1e-8)
        params = random_walk_params(trace, q, r)
        x_smooth, _ = rts_smooth(kf_filter(trace, params), params)
        want = map_smoothed_states(np.array(xs), q, r, x0=xs[0], p0=r)
        scale = np.maximum(1.0, np.abs(want))
        assert np.max(np.abs(x_smooth - want) / scale) <= 1e-8


class TestScalingLaws:
    @COMMON
    @given(
        xs=SAMPLES,
        k=st.integers(min_value=-8, max_value=8),
        window=st.integers(min_value=1, max_value=40),
    )
    def test_noise_estimate_is_exactly_quadratic_in_binary_scales(self, xs, k, window):
        alpha = 2.0**k
        window = min(window, len(xs))
        base = Trace(np.array(xs), 1e-8)
        scaled = Trace(alpha * base.samples, 1e-8)
        assert estimate_r(scaled, window) == alpha * alpha * estimate_r(base, window)

    @COMMON
    @given(xs=SAMPLES)
    def test_envelope_dominates_the_rectified_signal(self, xs):
        trace = Trace(np.array(xs), 1e-8)
        env = envelope(trace).samples
        ceiling = np.abs(trace.samples).max()
        assert np.all(env >= np.abs(trace.samples) - 1e-9 * (1.0 + ceiling))

    @COMMON
    @given(signal=DYADIC, background=DYADIC)
    def test_background_subtraction_round_trips_on_the_dyadic_lattice(
        self, signal, background
    ):
        n = min(len(signal), len(background))
        s = Trace(np.array(signal[:n], dtype=np.float64) / 1024.0, 1e-8)
        b = Trace(np.array(background[:n], dtype=np.float64) / 1024.0, 1e-8)
        diff = differential_subtract(s, b)
        assert np.array_equal(diff.samples + b.samples, s.samples)


_KEY = st.text(
    alphabet="abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-",
    min_size=1,
    max_size=20,
)
_VALUE = (
    st.text(max_size=40)
    .filter(lambda s: len(f"x{s}x".splitlines()) == 1 and s == s.strip())
)


class TestKvFormat:
    @COMMON
    @given(pairs=st.dictionaries(_KEY, _VALUE, max_size=12))
    def test_round_trips_any_representable_mapping(self, pairs):
        assert parse_kv(format_kv(pairs), source="prop") == pairs

    @COMMON
    @given(
        pairs=st.dictionaries(_KEY, st.floats(allow_nan=False), min_size=1, max_size=8)
    )
    def test_float_values_survive_via_repr(self, pairs):
        text = format_kv({k: repr(v) for k, v in pairs.items()})
        parsed = parse_kv(text, source="prop")
        for key, value in pairs.items():
            assert float(parsed[key]) == value or (
                math.isinf(value) and math.isinf(float(parsed[key]))
            )
