import numpy as np
import pytest

from msi_cert.core.models import SystemModel
from msi_cert.core.simulate import (
    closed_loop,
    falsify,
    generate_experiment,
    greedy_pattern,
    interval_map,
    interval_maps,
    pattern_from_intervals,
    sample_pattern,
)
from msi_cert.utils.validation import DimensionError, ValidationError


def _random_model(rng, n=3, m=2):
    return SystemModel(
        A=0.5 * rng.standard_normal((n, n)),
        B=rng.standard_normal((n, m)),
        K=0.3 * rng.standard_normal((m, n)),
    )


class TestClosedLoop:
    def test_unit_intervals_follow_closed_loop_matrix(self, benchmark_model):
        x0 = np.array([1.0, -2.0])
        states = closed_loop(benchmark_model, pattern_from_intervals([1] * 20), x0)
        expected = x0
        for t in range(20):
            np.testing.assert_allclose(states[t], expected, rtol=1e-12, atol=1e-14)
            expected = benchmark_model.closed_loop @ expected

    def test_zero_input_matrix_gives_open_loop_powers(self, rng):
        A = 0.9 * rng.standard_normal((2, 2))
        model = SystemModel(A=A, B=np.zeros((2, 1)), K=np.ones((1, 2)))
        x0 = rng.standard_normal(2)
        states = closed_loop(model, pattern_from_intervals([3, 4, 1]), x0)
        for t in range(9):
            np.testing.assert_allclose(states[t], np.linalg.matrix_power(A, t) @ x0, atol=1e-12)

    def test_inputs_are_held_between_samples(self, rng):
        model = _random_model(rng)
        x0 = rng.standard_normal(3)
        states, inputs = closed_loop(model, pattern_from_intervals([4, 2]), x0, return_inputs=True)
        assert states.shape == (7, 3)
        assert inputs.shape == (6, 2)
        for t in range(4):
            np.testing.assert_allclose(inputs[t], model.K @ x0)
        np.testing.assert_allclose(inputs[4], model.K @ states[4])

    def test_short_pattern_is_rejected(self, benchmark_model):
        with pytest.raises(DimensionError):
            closed_loop(benchmark_model, pattern_from_intervals([2, 2]), np.ones(2), horizon=10)

    def test_initial_state_dimension(self, benchmark_model):
        with pytest.raises(DimensionError):
            closed_loop(benchmark_model, pattern_from_intervals([1]), np.ones(3))


class TestIntervalMaps:
    def test_unit_interval_is_closed_loop_matrix(self, rng):
        model = _random_model(rng)
        np.testing.assert_allclose(interval_map(model, 1), model.closed_loop, atol=1e-12)
        np.testing.assert_array_equal(interval_maps(model, 4)[0], np.eye(3))

    def test_integrator_maps_are_linear_in_h(self):
        model = SystemModel(A=np.eye(2), B=np.array([[0.0], [1.0]]), K=np.array([[-0.2, -0.7]]))
        for h in (1, 5, 12):
            np.testing.assert_allclose(interval_map(model, h), np.eye(2) + h * model.B @ model.K, atol=1e-12)

    def test_map_matches_simulation(self, rng):
        model = _random_model(rng)
        x0 = rng.standard_normal(3)
        states = closed_loop(model, pattern_from_intervals([7]), x0)
        np.testing.assert_allclose(states[7], interval_map(model, 7) @ x0, rtol=1e-12, atol=1e-12)

    def test_repeated_pattern_composes_maps(self, rng):
        model = _random_model(rng)
        intervals = [3, 5, 2] * 3
        x0 = rng.standard_normal(3)
        states = closed_loop(model, pattern_from_intervals(intervals), x0)
        maps = interval_maps(model, 5)
        x = x0
        t = 0
        for h in intervals:
            x = maps[h] @ x
            t += h
            np.testing.assert_allclose(states[t], x, rtol=1e-10, atol=1e-12)


class TestPatterns:
    def test_sampled_pattern_covers_horizon(self, rng):
        pattern = sample_pattern(17, 500, rng)
        assert pattern.length >= 500
        assert pattern.length - pattern.intervals[-1] < 500
        assert all(1 <= h <= 17 for h in pattern.intervals)

    def test_explicit_pattern_bound(self):
        assert pattern_from_intervals([2, 9, 4]).bound == 9
        with pytest.raises(ValidationError):
            pattern_from_intervals([])
        with pytest.raises(ValidationError):
            pattern_from_intervals([3, 4], bound=3)

    def test_greedy_pattern_respects_bound(self, benchmark_model):
        pattern = greedy_pattern(benchmark_model, 40, 300, np.array([1.0, 0.0]))
        assert pattern.bound == 40
        assert pattern.length >= 300


class TestFalsify:
    def test_certified_interval_shows_decay(self, benchmark_model):
        result = falsify(benchmark_model, 10, trials=10, horizon=4000, seed=3, workers=1)
        assert result.growth_factor < 1.0
        assert result.trials == 10 + 3 + 1

    def test_passive_scalar_never_grows(self, passive_scalar):
        result = falsify(passive_scalar, 1000, trials=20, horizon=1000, seed=5)
        assert result.growth_factor < 1.0

    def test_finds_destabilizing_pattern(self):
        model = SystemModel(A=np.array([[1.0]]), B=np.array([[1.0]]), K=np.array([[-1.5]]))
        result = falsify(model, 2, trials=5, horizon=200, seed=1)
        assert result.growth_factor > 1.0
        assert 2 in result.worst_pattern.intervals

    def test_seed_reproducibility(self, benchmark_model):
        first = falsify(benchmark_model, 50, trials=8, horizon=500, seed=11, workers=4)
        second = falsify(benchmark_model, 50, trials=8, horizon=500, seed=11, workers=1)
        assert first.growth_factor == second.growth_factor
        assert first.worst_pattern == second.worst_pattern

    def test_argument_validation(self, benchmark_model):
        with pytest.raises(ValidationError):
            falsify(benchmark_model, 0)
        with pytest.raises(ValidationError):
            falsify(benchmark_model, 5, horizon=0)


class TestGenerateExperiment:
    def test_noise_free_data_fits_exactly(self, benchmark_model):
        dataset = generate_experiment(benchmark_model, 200, dbar=0.0, seed=9).dataset
        np.testing.assert_allclose(
            dataset.Xplus, benchmark_model.A @ dataset.X + benchmark_model.B @ dataset.U, atol=1e-12
        )

    def test_deterministic_per_seed(self, benchmark_model):
        first = generate_experiment(benchmark_model, 100, dbar=0.01, seed=4)
        second = generate_experiment(benchmark_model, 100, dbar=0.01, seed=4)
        third = generate_experiment(benchmark_model, 100, dbar=0.01, seed=5)
        np.testing.assert_array_equal(first.states, second.states)
        np.testing.assert_array_equal(first.disturbance, second.disturbance)
        assert not np.array_equal(first.inputs, third.inputs)

    def test_inputs_and_disturbance_ranges(self, benchmark_model):
        experiment = generate_experiment(benchmark_model, 300, (-2.0, 3.0), 0.05, seed=6)
        assert experiment.inputs.min() >= -2.0 and experiment.inputs.max() < 3.0
        assert experiment.disturbance.shape == (2, 300)
        assert np.all(np.linalg.norm(experiment.disturbance, axis=0) <= 0.05 + 1e-15)
        np.testing.assert_array_equal(experiment.states[0], np.zeros(2))

    def test_disturbance_enters_through_bd(self, benchmark_model):
        Bd = np.array([[0.0], [0.1]])
        experiment = generate_experiment(benchmark_model, 50, dbar=0.01, Bd=Bd, seed=2)
        dataset = experiment.dataset
        residual = dataset.Xplus - benchmark_model.A @ dataset.X - benchmark_model.B @ dataset.U
        np.testing.assert_allclose(residual, Bd @ experiment.disturbance, atol=1e-12)
        assert dataset.disturbance.n_d == 1

    def test_argument_validation(self, benchmark_model):
        with pytest.raises(ValidationError):
            generate_experiment(benchmark_model, 0)
        with pytest.raises(ValidationError):
            generate_experiment(benchmark_model, 10, input_range=(1.0, -1.0))
        with pytest.raises(ValidationError):
            generate_experiment(benchmark_model, 10, dbar=-0.1)
