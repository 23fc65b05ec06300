"""Tests for the QoS error, LQG power update and delay line."""

import numpy as np
import pytest

from v2ipower.inner_loop import (
    DelayLine,
    LqgControllerState,
    TrackingOffset,
    delay_step,
    lqg_update,
    power_bounds,
    qos_error,
)
from v2ipower.phy import (
    AciCoefficients,
    ChannelPlan,
    compute_sinr,
    solve_powers_for_targets,
)


def controller(p0=1.0, low=0.0, high=10.0, shape=(), omega=0.1, n_rt=5):
    return LqgControllerState.initial(
        p0, np.full(shape, low), np.full(shape, high), omega=omega, n_rt_estimate=n_rt
    )


class TestQosError:
    """Tests for qos_error."""

    def test_on_target(self):
        """Test the error vanishes on the objective."""
        assert qos_error(3.16, 3.16, 0.5) == 0.0

    def test_below_target(self):
        """Test half the objective SINR asks for one more p."""
        assert qos_error(2.0, 1.0, 0.5) == pytest.approx(0.5)

    def test_above_target(self):
        """Test twice the objective SINR asks to give back half of p."""
        assert qos_error(1.0, 2.0, 0.5) == pytest.approx(-0.25)

    def test_floor(self):
        """Test a zero SINR is floored instead of dividing by zero."""
        assert np.isfinite(qos_error(1.0, 0.0, 1e-12))


class TestLqgUpdate:
    """Tests for lqg_update and LqgControllerState."""

    def test_fixed_point(self):
        """Test a constant history with zero error keeps the power."""
        state = controller(p0=0.7)
        assert float(lqg_update(state, 0.0)) == pytest.approx(0.7)

    def test_negative_error_lowers_power(self):
        """Test p = 1 W and a = -1 give 0.9 W."""
        state = controller(p0=1.0)
        assert float(lqg_update(state, -1.0)) == pytest.approx(0.9)

    def test_positive_error_raises_power(self):
        """Test p = 1 W and a = +1 give 1.1 W."""
        state = controller(p0=1.0)
        assert float(lqg_update(state, 1.0)) == pytest.approx(1.1)

    def test_clamped_at_channel_cap(self):
        """Test channel 180 cannot exceed 23 dBm."""
        low, high = power_bounds(ChannelPlan.dsrc().max_powers_w, 1e-12, 30.2)
        state = LqgControllerState.initial(0.19, low, high)
        p = lqg_update(state, np.full(7, 100.0))
        assert p[4] == pytest.approx(0.1995, rel=1e-3)
        assert p[4] == high[4]
        assert p[3] < high[3]

    def test_clamped_at_floor(self):
        """Test a large negative error stops at p_min."""
        state = controller(p0=1.0, low=1e-12)
        assert float(lqg_update(state, -100.0)) == 1e-12

    def test_history_tap(self):
        """Test the p[k - n_RT] tap reads the sample n_RT updates back."""
        state = controller(p0=1.0, n_rt=2)
        lqg_update(state, 1.0)  # p[1] = 1.1
        lqg_update(state, 0.0)  # p[2] = 0.9 * 1.1 + 0.1 * 1.0
        assert float(state.current) == pytest.approx(1.09)
        assert float(state.delayed) == pytest.approx(1.0)
        p3 = lqg_update(state, 0.0)
        assert float(p3) == pytest.approx(0.9 * 1.09 + 0.1 * 1.0)

    def test_rejects_omega(self):
        """Test omega outside (0, 1) is refused."""
        with pytest.raises(ValueError):
            controller(omega=1.5)

    def test_bounds_need_room(self):
        """Test p_min above a channel cap is refused."""
        with pytest.raises(ValueError):
            power_bounds(np.array([0.1]), 1.0, 30.2)


class TestDelayLine:
    """Tests for DelayLine and delay_step."""

    def test_zero_delay_passes_through(self):
        """Test d = 0 forwards the error of the same sample."""
        line = DelayLine((2,), None, 0, 0)
        for k in range(5):
            e = np.array([k, -k], dtype=float)
            assert np.array_equal(delay_step(line, e, k), e)

    def test_fixed_delay_prehistory_is_zero(self):
        """Test a 10-sample delay returns zeros before k = 10."""
        line = DelayLine((2,), None, 10, 10)
        for k in range(10):
            assert np.all(delay_step(line, np.ones(2), k) == 0.0)
        assert np.all(delay_step(line, np.ones(2), 10) == 1.0)

    def test_fixed_delay_shifts(self):
        """Test a 3-sample delay returns e[k - 3]."""
        line = DelayLine((), None, 3, 3)
        out = [float(delay_step(line, float(k), k)) for k in range(10)]
        assert out == [0.0, 0.0, 0.0] + [float(k) for k in range(7)]

    def test_constant_error_survives_random_delay(self, rng):
        """Test a constant error arrives unchanged once the buffer is full."""
        line = DelayLine((5,), rng, 0, 10, 20)
        for k in range(200):
            a = delay_step(line, np.full(5, 2.5), k)
            if k >= 10:
                assert np.all(a == 2.5)

    def test_delays_held_for_period(self, rng):
        """Test delays stay within bounds and change only every period."""
        line = DelayLine((21,), rng, 0, 10, 20)
        seen = []
        for k in range(400):
            delay_step(line, np.zeros(21), k)
            seen.append(line.delays.copy())
            if k % 20:
                assert np.array_equal(line.delays, seen[-2])
        seen = np.array(seen)
        assert seen.min() >= 0 and seen.max() <= 10
        assert len(np.unique(seen)) > 5

    def test_random_delay_needs_generator(self):
        """Test random delays without a generator are refused."""
        with pytest.raises(ValueError):
            DelayLine((2,), None, 0, 10)


class TestStaticTracking:
    """Tests for the closed inner loop on a frozen channel."""

    def test_lone_link_converges(self):
        """Test a noise-limited link reaches the power solving its objective."""
        target, noise, gain, g = 3.16, 1e-12, 10 / 3, 0.05
        p_star = target * noise / (gain * g)
        state = controller(p0=1e-12, low=1e-12, high=30.2, shape=(1, 1))
        line = DelayLine((1, 1), None, 0, 0)
        coeffs = AciCoefficients((0.0,))
        gains = np.full((1, 1, 1), g)
        errors = []
        for k in range(200):
            p = state.current
            gamma = compute_sinr(p, gains, noise, 10e6, 3e6, coeffs).raw_sinr
            errors.append(abs(float(p[0, 0]) - p_star) / p_star)
            lqg_update(state, delay_step(line, qos_error(target, gamma, p), k))
        assert errors[100] < 0.01 * errors[0]
        assert errors[-1] < 1e-3

    def test_network_reaches_direct_solve(self):
        """Test 3 x 7 links with zero delay match the direct power solve."""
        rng = np.random.default_rng(5)
        gains = rng.uniform(0.0, 1e-4, size=(3, 3, 7))
        for cell in range(3):
            gains[cell, cell, :] = rng.uniform(0.01, 0.1, size=7)
        noise, target = 1e-12, 3.1623
        low, high = power_bounds(ChannelPlan.dsrc().max_powers_w, 1e-12, 30.2)
        state = LqgControllerState.initial(
            1e-12, np.broadcast_to(low, (3, 7)), np.broadcast_to(high, (3, 7))
        )
        line = DelayLine((3, 7), None, 0, 0)
        for k in range(300):
            p = state.current
            gamma = compute_sinr(p, gains, noise, 10e6, 3e6).raw_sinr
            lqg_update(state, delay_step(line, qos_error(target, gamma, p), k))
        expected = solve_powers_for_targets(
            np.full((3, 7), target), gains, noise, 10 / 3
        )
        assert np.allclose(state.current, expected, rtol=5e-3)


def ramp_tracking_error(correct: bool, rate: float = 0.01) -> float:
    """Mean |gamma / target - 1| over the last 100 of 400 samples on a fading-free
    link whose gain grows by ``rate`` (log) per sample; zero delay, no filter."""
    target, noise, g0 = 5.0, 1.0, 1.0
    state = controller(p0=target / (10 / 3 * g0), low=0.0, high=1e6, shape=(1,))
    line = DelayLine((1,), None, 0, 0)
    offset = TrackingOffset((1,), window=50, span=25)
    errors = []
    for k in range(400):
        p = state.current
        gamma = 10 / 3 * p * g0 * np.exp(rate * k) / noise
        errors.append(abs(float(gamma[0]) / target - 1.0))
        if correct and k % 50 >= 25:
            offset.observe(gamma)
        error = qos_error(offset.reference(target), gamma, p)
        lqg_update(state, delay_step(line, error, k))
        if (k + 1) % 50 == 0:
            if correct and k + 1 > 50:
                offset.update(target)
            offset.discard()
    return float(np.mean(errors[-100:]))


class TestTrackingOffset:
    """Tests for the objective scale that cancels the tracking bias."""

    def test_constant_bias_in_one_update(self):
        """Test a steady 20% overshoot is scaled away after one window."""
        offset = TrackingOffset((2,), window=50, span=25)
        for _ in range(25):
            offset.observe(np.full(2, 6.0))
        assert np.allclose(offset.update(5.0), 1 / 1.2)
        assert np.allclose(offset.reference(5.0), 5.0 / 1.2)

    def test_extrapolates_drift(self):
        """Test the next bias is extrapolated from the last two measurements."""
        offset = TrackingOffset((1,), window=50, span=25)
        assert offset.lead == pytest.approx(0.75)
        for _ in range(25):
            offset.observe(6.0)
        first = np.log(1.2)
        offset.update(5.0)
        for _ in range(25):
            offset.observe(1.1 * offset.reference(5.0))
        second = np.log(1.1)
        expected = np.exp(-(second + 0.75 * (second - first)))
        assert np.allclose(offset.update(5.0), expected)

    def test_limits(self):
        """Test a link far below its objective is capped at twice the objective."""
        offset = TrackingOffset((1,), window=50, span=25)
        offset.observe(0.1)
        assert np.allclose(offset.update(5.0), 2.0)

    def test_requires_samples(self):
        """Test an update with nothing logged is refused."""
        offset = TrackingOffset((1,), window=50, span=25)
        with pytest.raises(ValueError):
            offset.update(5.0)

    def test_rejects_bad_span(self):
        """Test the logged span must fit in a window."""
        with pytest.raises(ValueError):
            TrackingOffset((1,), window=50, span=60)

    def test_removes_ramp_bias(self):
        """Test a rising gain leaves an 18% overshoot that the scale removes."""
        assert ramp_tracking_error(correct=False) > 0.1
        assert ramp_tracking_error(correct=True) < 0.02
