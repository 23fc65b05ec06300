"""Tests for the channel model and OBU kinematics."""

import math

import numpy as np
import pytest

from v2ipower.constants import PATH_LOSS_REFERENCE_KM
from v2ipower.propagation import (
    FadingParams,
    ObuKinematics,
    RoadGeometry,
    ShadowingParams,
    advance_positions,
    distances,
    doppler_frequency,
    link_gain,
    mean_fading_power,
    path_loss,
    sample_fast_fading,
    sample_shadowing,
    scenario_kinematics,
)


def single_obu(x: float, lane: int = 0, speed: float = 20.0, direction: int = 1):
    return ObuKinematics(
        road_coordinate=np.array(x),
        lane_index=np.array(lane),
        speed=np.array(speed),
        direction=np.array(direction),
    )


def one_path(amplitude: float = 1.0, freq: float = 0.0, phase: float = 0.0):
    return FadingParams(np.array([amplitude]), np.array([freq]), np.array([phase]))


class TestDoppler:
    """Tests for doppler_frequency."""

    def test_head_on_shift(self):
        """Test the shift of a 20 m/s OBU on channel 172 at zero angle."""
        f = doppler_frequency(20.0, 5.86e9, 0.0)
        assert f == pytest.approx(390.9, abs=0.05)

    def test_perpendicular_arrival(self):
        """Test a path arriving at 90 degrees has no shift."""
        assert abs(doppler_frequency(20.0, 5.86e9, math.pi / 2)) < 1e-9

    def test_standing_still(self):
        """Test zero speed gives zero shift."""
        assert doppler_frequency(0.0, 5.86e9, 0.3) == 0.0

    def test_rejects_negative_speed(self):
        """Test negative speed is refused."""
        with pytest.raises(ValueError):
            doppler_frequency(-1.0, 5.86e9, 0.0)

    def test_rejects_nan(self):
        """Test a NaN angle is refused."""
        with pytest.raises(ValueError):
            doppler_frequency(10.0, 5.86e9, float("nan"))


class TestFastFading:
    """Tests for the sum-of-sinusoids fading generator."""

    def test_single_path_at_time_zero(self):
        """Test one unit path with zero phase gives exactly 1."""
        assert sample_fast_fading(one_path(), 0.0) == pytest.approx(1 + 0j)

    def test_single_path_quarter_turn(self):
        """Test a 10 Hz path after 25 ms has rotated by 90 degrees."""
        g = sample_fast_fading(one_path(freq=10.0), 0.025)
        assert g.real == pytest.approx(0.0, abs=1e-12)
        assert g.imag == pytest.approx(1.0)

    def test_ensemble_mean_power(self):
        """Test E|g|^2 over many independent draws is close to 1."""
        aoa_rng, phase_rng = np.random.default_rng(1), np.random.default_rng(2)
        params = FadingParams.draw(aoa_rng, phase_rng, np.full(40_000, 500.0), 20)
        power = np.abs(sample_fast_fading(params, 0.37)) ** 2
        assert abs(power.mean() - 1.0) < 0.02

    def test_amplitudes_sum_to_power(self):
        """Test the drawn amplitudes satisfy sum c_n^2 == power."""
        params = FadingParams.draw(
            np.random.default_rng(0), np.random.default_rng(1), 100.0, 20, power=2.0
        )
        assert np.sum(params.amplitudes**2) == pytest.approx(2.0)

    def test_same_seed_same_paths(self):
        """Test identical generators reproduce identical parameters."""
        a = FadingParams.draw(np.random.default_rng(7), np.random.default_rng(8), 50.0)
        b = FadingParams.draw(np.random.default_rng(7), np.random.default_rng(8), 50.0)
        assert np.array_equal(a.doppler_freqs, b.doppler_freqs)
        assert np.array_equal(a.phases, b.phases)

    def test_rejects_phase_out_of_range(self):
        """Test phases outside [-pi, pi) are refused."""
        with pytest.raises(ValueError):
            FadingParams(np.array([1.0]), np.array([0.0]), np.array([math.pi]))

    def test_rejects_mismatched_shapes(self):
        """Test parameter arrays must agree in shape."""
        with pytest.raises(ValueError):
            FadingParams(np.ones(2), np.zeros(3), np.zeros(2))


class TestShadowing:
    """Tests for log-normal shadowing."""

    def test_no_spread_no_mean(self):
        """Test sigma = 0 and m = 0 dB give a unit factor."""
        params = ShadowingParams(0.0, 0.0, one_path())
        assert sample_shadowing(params, 1.3) == pytest.approx(1.0)

    def test_mean_only(self):
        """Test sigma = 0 and m = 20 dB give an amplitude factor of 10."""
        params = ShadowingParams(0.0, 20.0, one_path())
        assert sample_shadowing(params, 0.0) == pytest.approx(10.0)

    def test_spread_with_single_path(self):
        """Test a frozen single path contributes sigma dB."""
        params = ShadowingParams(6.0, 0.0, one_path())
        assert sample_shadowing(params, 0.0) == pytest.approx(10 ** (6 / 20))

    def test_rejects_negative_sigma(self):
        """Test a negative spread is refused."""
        with pytest.raises(ValueError):
            ShadowingParams(-1.0, 0.0, one_path())


class TestMeanFadingPower:
    """Tests for the fast-fading power averaged over a measurement interval."""

    @pytest.fixture
    def fading(self):
        rngs = np.random.default_rng(21), np.random.default_rng(22)
        return FadingParams.draw(*rngs, np.full(4, 393.0))

    def test_zero_duration_is_instantaneous(self, fading):
        """Test a zero-length interval gives |g|^2 at its start."""
        expected = np.abs(sample_fast_fading(fading, 0.37)) ** 2
        assert np.allclose(mean_fading_power(fading, 0.37, 0.0), expected)

    def test_matches_time_average(self, fading):
        """Test the closed form against a dense midpoint average."""
        start, duration = 1.2, 0.05
        n = 20_000
        times = start + (np.arange(n) + 0.5) * duration / n
        dense = np.mean(
            [np.abs(sample_fast_fading(fading, t)) ** 2 for t in times], axis=0
        )
        assert np.allclose(mean_fading_power(fading, start, duration), dense, rtol=1e-4)

    def test_single_path_is_constant(self):
        """Test one path has power c^2 over any interval."""
        assert mean_fading_power(one_path(0.5, 300.0, 1.0), 2.0, 0.05) == (
            pytest.approx(0.25)
        )

    def test_long_interval_tends_to_total_power(self, fading):
        """Test beats average out over a long interval."""
        assert np.allclose(mean_fading_power(fading, 0.0, 1e4), 1.0, atol=1e-2)

    def test_averaging_reduces_spread(self):
        """Test a 50 ms average is far steadier than the instantaneous power."""
        rngs = np.random.default_rng(5), np.random.default_rng(6)
        fading = FadingParams.draw(*rngs, np.full(400, 393.0))
        instantaneous = np.abs(sample_fast_fading(fading, 3.0)) ** 2
        averaged = mean_fading_power(fading, 3.0, 0.05)
        assert np.std(averaged) < 0.5 * np.std(instantaneous)
        assert np.mean(averaged) == pytest.approx(1.0, rel=0.1)

    def test_rejects_negative_duration(self, fading):
        """Test the interval length must be non-negative."""
        with pytest.raises(ValueError):
            mean_fading_power(fading, 0.0, -0.05)


class TestPathLossAndGain:
    """Tests for path loss and the composite link gain."""

    def test_reference_distance(self):
        """Test the path loss is 1 at the 100 m reference."""
        assert path_loss(1000 * PATH_LOSS_REFERENCE_KM) == pytest.approx(1.0)

    def test_kilometre(self):
        """Test 1 km with exponent 3 gives 1e-3."""
        assert path_loss(1000.0, exponent=3.0) == pytest.approx(1e-3)

    def test_decreasing_in_distance(self):
        """Test the path loss falls strictly with distance."""
        pl = path_loss(np.linspace(10.0, 2000.0, 50))
        assert np.all(np.diff(pl) < 0)

    def test_deterministic_gain_at_reference(self):
        """Test an OBU at 100 m with fading and shadowing off has h = 1."""
        geometry = RoadGeometry(((0.0, 100.0),), highway_offset=100.0)
        ch = link_gain(geometry, single_obu(0.0), None, None, 0.0, rsu=0)
        assert ch.d == pytest.approx(100.0)
        assert ch.h == pytest.approx(1.0)

    def test_gain_at_one_kilometre(self):
        """Test an OBU 1 km along the road from an RSU on the road edge."""
        geometry = RoadGeometry(((0.0, 0.0),), highway_offset=0.0)
        ch = link_gain(geometry, single_obu(1000.0), None, None, 0.0, rsu=0)
        assert ch.h == pytest.approx(1e-3)

    def test_factorization(self):
        """Test h equals g * lambda * path loss bit for bit."""
        geometry = RoadGeometry.evenly_spaced(2)
        obus = scenario_kinematics("A", geometry, 3, 20.0)
        rng_a, rng_b = np.random.default_rng(3), np.random.default_rng(4)
        fading = FadingParams.draw(rng_a, rng_b, np.full((2, 2, 3), 300.0))
        shadow = ShadowingParams(
            6.0, 0.0, FadingParams.draw(rng_a, rng_b, np.full((2, 2, 3), 15.0))
        )
        ch = link_gain(geometry, obus, fading, shadow, 0.41)
        assert ch.h.shape == (2, 2, 3)
        assert np.array_equal(ch.h, ch.g * ch.lam * ch.path_loss)

    def test_averaged_power_gain(self):
        """Test averaging swaps |g|^2 for its interval mean in the power gain."""
        geometry = RoadGeometry.evenly_spaced(2)
        obus = scenario_kinematics("B", geometry, 3, 20.0)
        rng_a, rng_b = np.random.default_rng(8), np.random.default_rng(9)
        fading = FadingParams.draw(rng_a, rng_b, np.full((2, 2, 3), 393.0))
        instant = link_gain(geometry, obus, fading, None, 0.6)
        averaged = link_gain(geometry, obus, fading, None, 0.6, averaging=0.05)
        assert instant.fading_power is None
        assert np.allclose(instant.power_gain, np.abs(instant.h) ** 2)
        expected = mean_fading_power(fading, 0.6, 0.05) * instant.path_loss**2
        assert np.allclose(averaged.power_gain, expected, rtol=1e-12)
        assert np.array_equal(averaged.h, instant.h)

    def test_lane_offset_in_distance(self):
        """Test the far lane adds its offset to the perpendicular distance."""
        geometry = RoadGeometry(((0.0, 150.0),))
        near = distances(geometry, single_obu(0.0, lane=0))
        far = distances(geometry, single_obu(0.0, lane=1))
        assert near[0] == pytest.approx(150.0)
        assert far[0] == pytest.approx(154.0)


class TestKinematics:
    """Tests for OBU motion and scenario placement."""

    def test_single_step(self):
        """Test one 50 ms step at 20 m/s moves 1 m."""
        moved = advance_positions(single_obu(0.0), 0.05)
        assert float(moved.road_coordinate) == pytest.approx(1.0)

    def test_backwards(self):
        """Test direction -1 moves towards smaller coordinates."""
        moved = advance_positions(single_obu(0.0, speed=25.0, direction=-1), 0.05)
        assert float(moved.road_coordinate) == pytest.approx(-1.25)

    def test_many_steps(self):
        """Test 500 steps accumulate to 500 m."""
        obu = single_obu(0.0)
        for _ in range(500):
            obu = advance_positions(obu, 0.05)
        assert float(obu.road_coordinate) == pytest.approx(500.0, abs=1e-9)

    def test_rejects_non_positive_step(self):
        """Test dt must be positive."""
        with pytest.raises(ValueError):
            advance_positions(single_obu(0.0), 0.0)

    def test_scenario_shapes(self):
        """Test placement covers every RSU and OBU."""
        geometry = RoadGeometry.evenly_spaced(3)
        obus = scenario_kinematics("A", geometry, 7, 20.0)
        assert obus.road_coordinate.shape == (3, 7)
        assert np.array_equal(obus.lane_index[0], [0, 1, 0, 1, 0, 1, 0])

    def test_scenario_a_approaches_then_departs(self):
        """Test every scenario-A OBU starts before the foot point heading to it."""
        geometry = RoadGeometry.evenly_spaced(3)
        obus = scenario_kinematics("A", geometry, 7, 20.0)
        rel = obus.road_coordinate - geometry.rsu_x[:, None]
        assert np.all(rel * obus.direction < 0)

    def test_scenario_b_all_approaching(self):
        """Test scenario B starts near -R and drives forward."""
        geometry = RoadGeometry.evenly_spaced(3)
        obus = scenario_kinematics("B", geometry, 7, 20.0)
        rel = obus.road_coordinate - geometry.rsu_x[:, None]
        assert np.all(obus.direction == 1)
        assert np.all(rel < 0)
        assert rel.min() == pytest.approx(-geometry.cell_radius)

    def test_scenario_c_departing_from_foot(self):
        """Test scenario C starts at the foot point and drives away."""
        geometry = RoadGeometry.evenly_spaced(3)
        obus = scenario_kinematics("C", geometry, 7, 20.0)
        rel = obus.road_coordinate - geometry.rsu_x[:, None]
        assert np.all(obus.direction == 1)
        assert np.all(rel >= 0)

    def test_same_lane_spacing_respected(self):
        """Test OBUs sharing a lane keep at least the safety distance."""
        geometry = RoadGeometry.evenly_spaced(1)
        obus = scenario_kinematics("A", geometry, 7, 20.0, spacing=10.0)
        lane0 = np.sort(obus.road_coordinate[0][obus.lane_index[0] == 0])
        assert np.all(np.diff(lane0) >= geometry.min_safety_distance)

    def test_rejects_tight_spacing(self):
        """Test spacing below the safety distance is refused."""
        geometry = RoadGeometry.evenly_spaced(1)
        with pytest.raises(ValueError):
            scenario_kinematics("A", geometry, 7, 20.0, spacing=5.0)

    def test_rejects_unknown_scenario(self):
        """Test an unknown scenario letter is refused."""
        with pytest.raises(ValueError):
            scenario_kinematics("Z", RoadGeometry.evenly_spaced(1), 2, 20.0)
