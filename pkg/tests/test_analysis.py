"""Unit tests for baselines, robustness stats, response maps, and activity."""

import numpy as np
import pytest

from divland.analysis import (
    DEFAULT_D_GRID,
    DEFAULT_DD_GRID,
    P_FAST,
    P_SLOW,
    PController,
    PControllerSpec,
    as_controller,
    compare,
    evaluate_robustness,
    median_select,
    median_sorted,
    moving_average,
    named_baselines,
    p_controller,
    record_activity,
    steady_state_response,
    transient_response,
)
from divland.env import GRAVITY, SETTLING_TIME, noise_free_params
from divland.network import SNNController

from conftest import ConstantController, make_genome


class TestPController:
    def test_zero_at_setpoint(self):
        assert p_controller(P_SLOW, 2.5) == 0.0
        assert p_controller(P_FAST, 2.5) == 0.0

    def test_linear_slope_inside_clamp(self):
        assert p_controller(P_SLOW, 3.5) == pytest.approx(0.98 / GRAVITY, rel=1e-15)
        assert p_controller(P_FAST, 1.5) == pytest.approx(-1.96 / GRAVITY, rel=1e-15)

    def test_clamps_at_the_spec_bounds(self):
        assert p_controller(P_SLOW, 100.0) == 0.25
        assert p_controller(P_SLOW, -100.0) == -0.2
        assert p_controller(P_FAST, 100.0) == 0.3
        assert p_controller(P_FAST, -100.0) == -0.7

    def test_wrapper_ignores_divergence_rate(self):
        ctrl = PController(P_SLOW)
        assert ctrl.step(3.0, -50.0) == ctrl.step(3.0, 50.0)
        assert ctrl.spike_counts == ()

    def test_empty_clamp_range_rejected(self):
        with pytest.raises(ValueError):
            PControllerSpec(gain=1.0, setpoint=2.5, clamp=(0.3, 0.3))

    def test_named_baselines(self):
        specs = named_baselines()
        assert specs["p-slow"] is P_SLOW
        assert specs["p-fast"] is P_FAST


class TestAsController:
    def test_genome_becomes_spiking_controller(self):
        assert isinstance(as_controller(make_genome()), SNNController)

    def test_spec_becomes_p_controller(self):
        ctrl = as_controller(P_FAST)
        assert isinstance(ctrl, PController) and ctrl.spec is P_FAST

    def test_controllers_pass_through(self):
        ctrl = ConstantController(0.1)
        assert as_controller(ctrl) is ctrl


class TestMedians:
    def test_hand_computed_values(self):
        assert median_sorted([3.0, 1.0, 2.0]) == 2.0
        assert median_sorted([4.0, 1.0, 3.0, 2.0]) == 2.5
        assert median_select([3.0, 1.0, 2.0]) == 2.0
        assert median_select([4.0, 1.0, 3.0, 2.0]) == 2.5

    def test_agree_with_numpy_on_random_data(self, rng):
        for n in (1, 2, 5, 6, 101, 100):
            values = rng.normal(size=n)
            expected = float(np.median(values))
            assert median_sorted(values) == pytest.approx(expected, rel=1e-15)
            assert median_select(values) == pytest.approx(expected, rel=1e-15)

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError):
            median_sorted([])
        with pytest.raises(ValueError):
            median_select([])


class TestMovingAverage:
    def test_window_means_are_exact(self):
        out = moving_average([1.0, 2.0, 3.0, 4.0], 2)
        assert out.tolist() == [1.5, 2.5, 3.5]

    def test_window_one_is_identity(self, rng):
        values = rng.normal(size=17)
        assert np.array_equal(moving_average(values, 1), values)

    def test_full_window_is_the_mean(self, rng):
        values = rng.normal(size=9)
        out = moving_average(values, 9)
        assert out.shape == (1,)
        assert out[0] == pytest.approx(values.mean(), rel=1e-12)

    def test_bad_windows_rejected(self):
        with pytest.raises(ValueError):
            moving_average([1.0, 2.0], 0)
        with pytest.raises(ValueError):
            moving_average([1.0, 2.0], 3)


class TestSteadyState:
    GRID_D = (-1.0, 0.0, 0.5, 3.0)
    GRID_DD = (-2.0, 0.0, 2.0)

    def test_silent_network_sits_at_the_output_floor(self):
        matrix = steady_state_response(make_genome(), self.GRID_D, self.GRID_DD,
                                       steps=20, tail=10)
        assert matrix.shape == (4, 3)
        # every step emits exactly -0.8; only the tail mean rounds
        assert np.allclose(matrix, -0.8, rtol=0.0, atol=1e-14)

    def test_stateless_law_matches_pointwise_evaluation(self):
        matrix = steady_state_response(P_FAST, self.GRID_D, self.GRID_DD,
                                       steps=12, tail=6)
        expected = [[p_controller(P_FAST, d)] * 3 for d in self.GRID_D]
        assert matrix == pytest.approx(np.asarray(expected), rel=1e-12)

    def test_rate_blind_network_is_constant_along_the_rate_axis(self):
        # weights only on the two divergence channels
        g = make_genome(w_in=((3.0,), (3.0,), (0.0,), (0.0,)))
        matrix = steady_state_response(g, self.GRID_D, self.GRID_DD,
                                       steps=30, tail=10)
        for j in range(1, matrix.shape[1]):
            assert np.array_equal(matrix[:, j], matrix[:, 0])

    def test_default_grids_cover_the_observation_ranges(self):
        assert len(DEFAULT_D_GRID) == 101 and len(DEFAULT_DD_GRID) == 101
        assert (DEFAULT_D_GRID[0], DEFAULT_D_GRID[-1]) == (-5.0, 5.0)
        assert (DEFAULT_DD_GRID[0], DEFAULT_DD_GRID[-1]) == (-20.0, 20.0)

    def test_tail_must_fit_in_steps(self):
        with pytest.raises(ValueError):
            steady_state_response(make_genome(), (0.0,), (0.0,), steps=5, tail=6)
        with pytest.raises(ValueError):
            steady_state_response(make_genome(), (0.0,), (0.0,), steps=5, tail=0)


class TestTransientResponse:
    def test_samples_sorted_and_smoothing_shrinks_by_window(self):
        curve = transient_response(P_SLOW, episodes=10, window=25, seed=4)
        assert np.all(np.diff(curve.d_obs) >= 0.0)
        assert np.all(np.diff(curve.smoothed_d) >= 0.0)
        assert curve.smoothed_d.size == curve.d_obs.size - 25 + 1
        assert curve.smoothed_t.size == curve.smoothed_d.size
        assert curve.window == 25

    def test_window_one_reproduces_the_raw_samples(self):
        curve = transient_response(P_SLOW, episodes=4, window=1, seed=4)
        assert np.array_equal(curve.smoothed_d, curve.d_obs)
        assert np.array_equal(curve.smoothed_t, curve.t_sp)

    def test_setpoints_respect_the_law_clamp(self):
        curve = transient_response(P_SLOW, episodes=6, window=5, seed=2)
        assert curve.t_sp.min() >= P_SLOW.clamp[0]
        assert curve.t_sp.max() <= P_SLOW.clamp[1]

    def test_same_seed_reproduces_the_curve(self):
        a = transient_response(P_FAST, episodes=3, window=4, seed=9)
        b = transient_response(P_FAST, episodes=3, window=4, seed=9)
        assert np.array_equal(a.d_obs, b.d_obs)
        assert np.array_equal(a.t_sp, b.t_sp)

    def test_oversized_window_rejected(self):
        with pytest.raises(ValueError):
            transient_response(P_SLOW, episodes=1, window=10**9, seed=0)


class TestRecordActivity:
    def test_silent_network_has_zero_rates(self):
        out = record_activity(make_genome(), episodes=3, seed=1)
        assert out.rates == (0.0,)
        assert out.episodes == 3
        assert out.total_time > 0.0

    def test_disconnected_hidden_neuron_stays_silent(self):
        g = make_genome(
            n_hidden=2,
            w_in=((6.0, 0.0), (6.0, 0.0), (1.0, 0.0), (1.0, 0.0)),
            w_out=(2.0, 2.0),
        )
        out = record_activity(g, episodes=3, seed=1)
        assert len(out.rates) == 3  # two hidden plus the output neuron
        assert out.rates[0] > 0.0
        assert out.rates[1] == 0.0
        assert out.w_in == g.w_in and out.w_out == g.w_out

    def test_rates_scale_back_to_whole_spike_counts(self):
        g = make_genome(w_in=((6.0,), (6.0,), (1.0,), (1.0,)))
        out = record_activity(g, episodes=4, seed=3)
        for rate in out.rates:
            count = rate * out.total_time
            assert count == pytest.approx(round(count), abs=1e-6)

    def test_rate_free_controllers_are_rejected(self):
        with pytest.raises(AttributeError):
            record_activity(P_SLOW, episodes=1)


class TestEvaluateRobustness:
    def test_free_fall_always_touches_down(self):
        report = evaluate_robustness(make_genome(), landings=40, seed=12)
        assert report.success_rate == 1.0
        assert report.landings == 40 and report.h0 == 4.0
        assert report.samples.shape == (40, 4)
        assert report.medians[0] < 3.0  # unpowered drops from 4 m are quick
        assert report.medians[2] > 5.0  # and hit hard

    def test_quartiles_bracket_the_median(self):
        report = evaluate_robustness(make_genome(), landings=30, seed=5)
        for lo, mid, hi, spread in zip(report.q1, report.medians, report.q3,
                                       report.iqr):
            assert lo <= mid <= hi
            assert spread == pytest.approx(hi - lo, rel=1e-12)

    def test_same_seed_is_reproducible_and_seeds_decouple(self):
        a = evaluate_robustness(make_genome(), landings=10, seed=7)
        b = evaluate_robustness(make_genome(), landings=10, seed=7)
        c = evaluate_robustness(make_genome(), landings=10, seed=8)
        assert np.array_equal(a.samples, b.samples)
        assert not np.array_equal(a.samples, c.samples)

    def test_landing_budget_must_be_positive(self):
        with pytest.raises(ValueError):
            evaluate_robustness(make_genome(), landings=0)


class TestCompare:
    def test_matched_streams_make_duplicates_identical(self):
        rows = compare([("a", P_SLOW), ("b", P_SLOW)], episodes=4, seed=6)
        a, b = rows
        assert a["controller"] == "a" and b["controller"] == "b"
        for key in a:
            if key != "controller":
                assert a[key] == b[key]

    def test_fast_law_lands_sooner_in_a_quiet_world(self):
        rows = compare(
            [("p-slow", P_SLOW), ("p-fast", P_FAST)],
            episodes=2,
            seed=1,
            env_params=noise_free_params(),
        )
        by_name = {row["controller"]: row for row in rows}
        assert by_name["p-slow"]["success_rate"] == 1.0
        assert by_name["p-fast"]["success_rate"] == 1.0
        assert (by_name["p-fast"]["median_time_to_land"]
                < by_name["p-slow"]["median_time_to_land"])

    def test_row_schema(self):
        rows = compare([("c", ConstantController(0.0))], episodes=2, seed=2)
        (row,) = rows
        assert set(row) == {
            "controller", "landings", "success_rate",
            "median_time_to_land", "median_final_height",
            "median_touchdown_speed", "median_spike_rate",
        }
        assert row["landings"] == 2
