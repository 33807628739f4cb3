import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from noisy_portfolio import (
    ActuatorNoiseProblem,
    CallableProblem,
    ContractViolation,
    RandomStream,
    RegretLineProblem,
    SphereProblem,
    SyntheticRegretSolver,
    make_sphere,
    problem_from_key,
    synthetic_regret_value,
)
from noisy_portfolio.problems import parse_synthetic_key


class TestSphere:
    @pytest.mark.parametrize("x", [[0.0, 0.0], [1.0, -2.0], [3.0, 0.5]])
    def test_additive_noise_has_unit_variance(self, rng, x):
        values = make_sphere(2, 0).sample(np.tile(x, (20_000, 1)), rng)
        assert np.var(values) == pytest.approx(1.0, abs=0.05)
        assert np.mean(values) == pytest.approx(float(np.dot(x, x)), abs=0.05)

    def test_multiplicative_noise_moments(self, rng):
        # d=1, z=1, x=3: mean 9, std 3
        values = make_sphere(1, 1).sample(np.full((40_000, 1), 3.0), rng)
        assert np.mean(values) == pytest.approx(9.0, abs=0.06)
        assert np.std(values) == pytest.approx(3.0, abs=0.05)

    def test_no_variance_at_optimum_for_z2(self, rng):
        values = make_sphere(15, 2).sample(np.zeros((100, 15)), rng)
        assert np.all(values == 0.0)

    @given(st.lists(st.floats(-50, 50), min_size=1, max_size=15), st.sampled_from([0, 1, 2]))
    def test_expected_value_is_squared_norm(self, x, z):
        problem = make_sphere(len(x), z)
        assert problem.expected_value(x) == pytest.approx(float(np.dot(x, x)), rel=1e-15, abs=0)

    def test_noise_scale_zero_is_deterministic(self, rng):
        values = make_sphere(3, 1, noise_scale=0.0).sample(np.ones((5, 3)), rng)
        np.testing.assert_array_equal(values, 3.0)

    @pytest.mark.parametrize("d, z", [(0, 0), (2.5, 0), (2, -1)])
    def test_rejects_bad_parameters(self, d, z):
        with pytest.raises(ContractViolation):
            SphereProblem(d, z)

    def test_name_round_trips_through_key(self):
        problem = make_sphere(15, 2)
        again = problem_from_key(problem.name)
        assert (again.dimension, again.z) == (15, 2)


class TestKeys:
    def test_sphere_key(self):
        problem = problem_from_key("sphere-d2-z1")
        assert isinstance(problem, SphereProblem)
        assert problem.dimension == 2 and problem.z == 1

    def test_synthetic_key(self):
        assert isinstance(problem_from_key("synthetic-C1-a0.75"), RegretLineProblem)
        assert parse_synthetic_key("synthetic-C2-a0.5") == (2.0, 0.5)

    @pytest.mark.parametrize("key", ["sphere", "sphere-d2", "cartpole", "sphere-dx-z0"])
    def test_unknown_key(self, key):
        with pytest.raises(ContractViolation):
            problem_from_key(key)


class TestSyntheticRegret:
    @pytest.mark.parametrize("C, alpha, m, expected", [
        (1.0, 0.75, 1, 1.0),
        (1.0, 0.5, 16, 0.25),
        (2.0, 0.75, 16, 0.25),
    ])
    def test_values(self, C, alpha, m, expected):
        solver = SyntheticRegretSolver(RegretLineProblem(), RandomStream(0), C, alpha)
        assert synthetic_regret_value(solver, m) == pytest.approx(expected, rel=1e-15)

    @pytest.mark.parametrize("m", [0, -1, 1.5])
    def test_rejects_non_positive_index(self, m):
        solver = SyntheticRegretSolver(RegretLineProblem(), RandomStream(0), 1.0, 1.0)
        with pytest.raises(ContractViolation):
            synthetic_regret_value(solver, m)

    def test_recommendation_regret_matches_profile(self):
        problem = RegretLineProblem()
        solver = SyntheticRegretSolver(problem, RandomStream(0), 3.0, 0.5)
        solver.advance(10**12)
        for m in (1, 7, 10**6, 10**12):
            x = solver.recommendation_at(m)
            assert problem.expected_value(x) == pytest.approx(3.0 / m**0.5, rel=1e-15)

    def test_advance_is_virtual(self):
        solver = SyntheticRegretSolver(RegretLineProblem(), RandomStream(0), 1.0, 1.0)
        assert solver.advance(10**15) == 10**15
        assert solver.evals_used == 10**15

    def test_sample_mean_shortcut_has_mean_law(self, rng):
        problem = RegretLineProblem()
        means = np.array([problem.sample_mean([0.5], 25, rng) for _ in range(20_000)])
        assert np.mean(means) == pytest.approx(0.5, abs=0.005)
        assert np.var(means) == pytest.approx(1 / 25, rel=0.05)


class TestOtherProblems:
    def test_callable_problem_oracle(self, rng):
        problem = CallableProblem(lambda x, g: float(x @ x + g.standard_normal()), 2,
                                  expected=lambda x: float(x @ x), optimum=[0, 0])
        assert problem.has_oracle
        assert problem.expected_value([1.0, 2.0]) == 5.0

    def test_callable_without_oracle(self):
        problem = CallableProblem(lambda x, g: 0.0, 2)
        assert not problem.has_oracle
        with pytest.raises(NotImplementedError):
            problem.expected_value([0.0, 0.0])

    def test_actuator_noise_has_no_oracle(self, rng):
        problem = ActuatorNoiseProblem(lambda p: np.sum(p**2, axis=1), 2, noise_scale=0.1)
        assert not problem.has_oracle
        values = problem.sample(np.zeros((20_000, 2)), rng)
        # E||0 + 0.1 N||^2 = 2 * 0.01
        assert np.mean(values) == pytest.approx(0.02, rel=0.05)

    def test_variance_bound_only_holds_near_optimum(self, rng):
        # z > 0 scales the noise by ||x||^z, so Var f exceeds 1 far from the optimum
        values = make_sphere(2, 2).sample(np.full((5000, 2), 2.0), rng)
        assert np.var(values) > 1.0
        assert math.isclose(np.var(values), 64.0, rel_tol=0.1)
