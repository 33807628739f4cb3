import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from noisy_portfolio import (
    FABIAN1,
    RSAES,
    CallableProblem,
    ContractViolation,
    Fabian,
    FabianConfig,
    InstrumentedProblem,
    PortfolioConfig,
    PowerLawSchedule,
    RandomStream,
    RegretLineProblem,
    Schedule,
    SyntheticRegretSolver,
    inopa_run,
    make_sphere,
    nopa_coarse_run,
    nopa_run,
    run_portfolio,
    schedule_validity,
    select,
    simple_regret,
    theoretical_budget,
)
from noisy_portfolio.portfolio import geometric_checkpoints, parse_lag

REFERENCE_SCHEDULE = PowerLawSchedule(4.2, 2.2, "pow:1/4.2")

schedules = st.builds(
    PowerLawSchedule,
    st.floats(1.0, 4.5),
    st.floats(0.3, 2.5),
    st.sampled_from(["none", "log", "pow:0.25", "pow:1/4.2", "pow:0.5", "pow:0.9"]),
)


def fixed_fabian(x0, config=FABIAN1):
    return lambda problem, stream: Fabian(problem, stream, config, x0=x0)


def synthetic(C, alpha):
    return lambda problem, stream: SyntheticRegretSolver(problem, stream, C, alpha)


class TestSchedules:
    def test_reference_schedule_values(self):
        assert [REFERENCE_SCHEDULE.r(n) for n in (1, 2, 3)] == [1, 19, 101]
        assert [REFERENCE_SCHEDULE.s(n) for n in (1, 2, 3)] == [1, 5, 12]

    def test_lag_of_101_is_4(self):
        # 101**(1/4.2) = 3.00068 (high-precision oracle), so the ceiling is 4
        assert REFERENCE_SCHEDULE.lag(101) == 4

    @pytest.mark.parametrize("m, expected", [(1, 1), (2, 1), (3, 2), (20, 3), (21, 4), (10**6, 14)])
    def test_log_lag(self, m, expected):
        assert PowerLawSchedule(5, 2, "log").lag(m) == expected

    @given(schedules, st.integers(1, 10**7))
    def test_lag_bounded_by_m(self, schedule, m):
        assert 1 <= schedule.lag(m) <= m

    @given(schedules)
    def test_non_decreasing(self, schedule):
        r = [schedule.r(n) for n in range(1, 30)]
        s = [schedule.s(n) for n in range(1, 30)]
        lag = [schedule.lag(m) for m in range(1, 300)]
        assert r == sorted(r) and s == sorted(s) and lag == sorted(lag)

    @pytest.mark.parametrize("spec, expected", [
        ("none", ("none", 1.0)), ("log", ("log", None)), ("pow:0.25", ("pow", 0.25)),
        ("pow:1/4", ("pow", 0.25)),
    ])
    def test_parse_lag(self, spec, expected):
        assert parse_lag(spec) == expected

    @pytest.mark.parametrize("spec", ["pow:0", "pow:1.5", "pow:x", "sqrt"])
    def test_parse_lag_invalid(self, spec):
        with pytest.raises(ContractViolation):
            parse_lag(spec)

    def test_custom_schedule_rejects_bad_lag(self):
        schedule = Schedule(lambda n: n, lambda n: 1, lambda m: m + 1)
        with pytest.raises(ContractViolation):
            schedule.lag(5)

    def test_checkpoints_end_at_budget(self):
        grid = geometric_checkpoints(10**5)
        assert grid[0] == 10 and grid[-1] == 10**5
        assert len(grid) == 41


class TestScheduleValidity:
    def test_reference_schedule_fails_convergence(self):
        report = schedule_validity(REFERENCE_SCHEDULE, 1.0)
        passed = {c.name: c.passed for c in report.conditions}
        assert passed == {"convergence": False, "budget": True, "lag": True}
        assert not report.all_passed
        assert "FAIL" in str(report)

    def test_log_lag_example(self):
        report = schedule_validity(PowerLawSchedule(5, 2, "log"), 1.0)
        assert report.all_passed

    def test_identity_lag_fails(self):
        passed = {c.name: c.passed for c in schedule_validity(PowerLawSchedule(5, 2, "none"), 1.0).conditions}
        assert not passed["convergence"] and not passed["lag"]

    @given(st.floats(0.5, 6), st.floats(0.5, 6), st.floats(0.01, 1.0), st.floats(0.0, 2.0))
    def test_exponent_rule(self, a, b, c, alpha):
        report = schedule_validity(PowerLawSchedule(a, b, f"pow:{c!r}"), alpha)
        passed = {x.name: x.passed for x in report.conditions}
        assert passed["convergence"] == (b - 2 * alpha * a * c > 1)
        assert passed["budget"] == (b + 1 < a)
        assert passed["lag"] == (c < 1)


class TestTheoreticalBudget:
    def test_nopa_example(self):
        assert theoretical_budget("nopa", 4, 4, REFERENCE_SCHEDULE, 3) == 476

    def test_inopa_example(self):
        assert theoretical_budget("inopa", 2, 1, REFERENCE_SCHEDULE, 3) == 101 + 2 * 18 + 4

    @given(schedules, st.integers(2, 6), st.integers(1, 20))
    def test_full_subset_reduces_to_nopa(self, schedule, M, n):
        assert theoretical_budget("inopa", M, M, schedule, n) == theoretical_budget("nopa", M, M, schedule, n)

    def test_ratio_tends_to_one_half(self):
        schedule = PowerLawSchedule(4.0, 0.5, "log")
        ratio = theoretical_budget("inopa", 2, 1, schedule, 200) / theoretical_budget("nopa", 2, 2, schedule, 200)
        assert ratio == pytest.approx(0.5, abs=1e-3)

    @pytest.mark.parametrize("args", [("inopa", 2, 3, 1), ("nopa", 2, 0, 1), ("nopa", 2, 2, 0), ("coarse", 2, 2, 1)])
    def test_invalid(self, args):
        mode, M, Mp, n = args
        with pytest.raises(ContractViolation):
            theoretical_budget(mode, M, Mp, REFERENCE_SCHEDULE, n)


line = CallableProblem(lambda x, g: float(x[0]), 1, expected=lambda x: float(x[0]), optimum=[0.0])


class TestSelect:
    def test_argmin(self, rng):
        assert select(line, [[3.0], [1.0], [2.0]], 1, rng).chosen == 1

    def test_first_index_on_ties(self, rng):
        assert select(line, [[1.0], [1.0]], 5, rng).chosen == 0

    def test_cost(self, rng):
        problem = InstrumentedProblem(make_sphere(2, 0))
        record = select(problem, [[0, 0], [1, 1], [2, 2]], 7, rng)
        assert record.evals_spent == 21 == problem.calls

    def test_large_gap_always_resolved(self, rng):
        problem = make_sphere(2, 0)
        picks = [select(problem, [[0.0, 0.0], [10.0, 0.0]], 100, rng).chosen for _ in range(500)]
        assert picks.count(0) == 500

    @given(st.lists(st.floats(-100, 100), min_size=2, max_size=6), st.floats(1e-3, 1e3))
    def test_scale_invariance(self, values, k):
        scaled = CallableProblem(lambda x, g: k * float(x[0]), 1)
        rng = np.random.default_rng(0)
        recs = [[v] for v in values]
        assert select(scaled, recs, 3, rng).chosen == select(line, recs, 3, rng).chosen

    def test_aborts_when_budget_runs_out(self, rng):
        record = select(line, [[1.0], [0.0]], 10, rng, max_evals=15)
        assert record.aborted and record.evals_spent == 15

    def test_failed_member_never_chosen(self, rng):
        assert select(line, [None, [5.0]], 2, rng).chosen == 1

    @pytest.mark.parametrize("s", [0, 1.5])
    def test_invalid_s(self, rng, s):
        with pytest.raises(ContractViolation):
            select(line, [[0.0], [1.0]], s, rng)


class TestPortfolioConfig:
    def test_needs_two_solvers(self):
        with pytest.raises(ContractViolation):
            PortfolioConfig([fixed_fabian([1, 1])], REFERENCE_SCHEDULE, total_budget=100)

    def test_budget_covers_first_comparison(self):
        with pytest.raises(ContractViolation):
            PortfolioConfig([fixed_fabian([1, 1])] * 3, REFERENCE_SCHEDULE, total_budget=5)

    def test_needs_stopping_rule(self):
        with pytest.raises(ContractViolation):
            PortfolioConfig([fixed_fabian([1, 1])] * 2, REFERENCE_SCHEDULE)

    def test_unknown_mode(self):
        with pytest.raises(ContractViolation):
            PortfolioConfig([fixed_fabian([1, 1])] * 2, REFERENCE_SCHEDULE, mode="race", total_budget=100)


class TestNopa:
    @settings(max_examples=100)
    @given(schedule=schedules, M=st.integers(2, 5), seed=st.integers(0, 2**16))
    def test_budget_formula_exact(self, schedule, M, seed):
        problem = InstrumentedProblem(make_sphere(2, 1))
        selections = 1
        while selections < 8 and schedule.r(selections + 1) <= 3000:
            selections += 1
        config = PortfolioConfig([fixed_fabian(None)] * M, schedule, max_selections=selections)
        trace = nopa_run(config, problem, RandomStream(seed))
        assert len(trace.selections) == selections
        for rec in trace.selections:
            assert rec.total_evals == theoretical_budget("nopa", M, M, schedule, rec.n)
            assert set(rec.per_solver) == {schedule.r(rec.n)}
            assert rec.compared_at == schedule.lag(schedule.r(rec.n))
        assert problem.calls == trace.final.total

    def test_third_selection_costs(self):
        config = PortfolioConfig([fixed_fabian(None)] * 4, REFERENCE_SCHEDULE, max_selections=3)
        trace = nopa_run(config, make_sphere(2, 0), RandomStream(1))
        third = trace.selections[2]
        assert sum(third.per_solver) == 404
        assert third.total_evals - 404 == 72
        assert third.total_evals == 476

    def test_identical_noiseless_copies_match_solo(self, noiseless_sphere):
        config = PortfolioConfig([fixed_fabian([0.7, -0.4])] * 2, REFERENCE_SCHEDULE, total_budget=20_000,
                                 checkpoints=range(1, 20_001, 37))
        trace = nopa_run(config, noiseless_sphere, RandomStream(0))
        solo = Fabian(noiseless_sphere, RandomStream(5), FABIAN1, x0=[0.7, -0.4])
        solo.advance(10_000)
        assert {rec.chosen for rec in trace.selections} == {0}
        for sample in trace.samples[1:]:
            m = sample.per_solver[0]
            assert sample.regret == simple_regret(noiseless_sphere, solo.recommendation_at(m))

    def test_budget_respected(self, sphere_z0):
        config = PortfolioConfig([fixed_fabian(None)] * 3, REFERENCE_SCHEDULE, total_budget=10_007)
        trace = nopa_run(config, sphere_z0, RandomStream(3))
        assert trace.final.total <= 10_007
        assert trace.final.total > 10_007 - 3 - 3 * REFERENCE_SCHEDULE.s(len(trace.selections) + 1)

    def test_lag_only_changes_compared_index(self, sphere_z0):
        traces = {}
        for lag in ("none", "pow:1/4.2"):
            config = PortfolioConfig([fixed_fabian(None)] * 2, PowerLawSchedule(4.2, 2.2, lag), max_selections=4)
            traces[lag] = nopa_run(config, sphere_z0, RandomStream(2))
        for a, b in zip(traces["none"].selections, traces["pow:1/4.2"].selections):
            assert a.n == b.n and a.per_solver == b.per_solver and a.total_evals == b.total_evals
            assert a.compared_at == REFERENCE_SCHEDULE.r(a.n)
            assert b.compared_at == REFERENCE_SCHEDULE.lag(REFERENCE_SCHEDULE.r(b.n))


class TestInopa:
    @settings(max_examples=100)
    @given(schedule=schedules, M=st.integers(2, 5), x0=st.lists(st.floats(-1, 1), min_size=2, max_size=2))
    def test_budget_bound_with_stable_choice(self, schedule, M, x0):
        problem = InstrumentedProblem(make_sphere(2, 0, noise_scale=0.0))
        selections = 1
        while selections < 8 and schedule.r(selections + 1) <= 3000:
            selections += 1
        config = PortfolioConfig([fixed_fabian(x0)] * M, schedule, mode="inopa", max_selections=selections)
        trace = inopa_run(config, problem, RandomStream(0))
        assert [rec.chosen for rec in trace.selections] == [0] * selections
        for rec in trace.selections:
            bound = theoretical_budget("inopa", M, 1, schedule, rec.n)
            slack = schedule.r(rec.n) - schedule.r(rec.n - 1) if rec.n > 1 else schedule.r(1)
            assert rec.total_evals <= bound + slack
            assert rec.total_evals == bound
            # never-chosen members sit exactly at the lag milestone
            lag = schedule.lag(schedule.r(rec.n))
            assert all(c == lag for c in rec.per_solver[1:])
        assert problem.calls == trace.final.total

    def test_chosen_member_reaches_next_milestone(self, sphere_z0):
        config = PortfolioConfig([fixed_fabian(None)] * 3, REFERENCE_SCHEDULE, mode="inopa", max_selections=3)
        trace = inopa_run(config, sphere_z0, RandomStream(4))
        assert max(trace.final.per_solver) == REFERENCE_SCHEDULE.r(4)

    def test_cheaper_than_nopa(self, sphere_z0):
        config = PortfolioConfig([fixed_fabian(None)] * 4, REFERENCE_SCHEDULE, mode="inopa", max_selections=5)
        inopa = inopa_run(config, sphere_z0, RandomStream(4)).selections[-1].total_evals
        assert inopa < theoretical_budget("nopa", 4, 4, REFERENCE_SCHEDULE, 5)


class TestCoarse:
    def test_rsaes_overshoot(self, sphere_z0):
        config = PortfolioConfig([lambda p, s: RSAES(p, s)] * 2, REFERENCE_SCHEDULE, mode="nopa-coarse",
                                 max_selections=2)
        trace = nopa_coarse_run(config, sphere_z0, RandomStream(0))
        first, second = trace.selections
        assert first.per_solver == (200, 200)
        # 200 >= r_2 = 19, so the second comparison needs no further generation
        assert second.per_solver == (200, 200)
        # overshoot is measured against the last requested target, r_1 = 1
        assert trace.meta["overshoot"] == [199, 199]

    def test_fine_grain_members_match_nopa(self):
        members = [synthetic(1.0, 0.75), synthetic(1.0, 0.5), synthetic(2.0, 0.75)]
        kwargs = dict(max_selections=6, checkpoints=[])
        a = nopa_run(PortfolioConfig(members, REFERENCE_SCHEDULE, **kwargs), RegretLineProblem(), RandomStream(8))
        b = nopa_coarse_run(PortfolioConfig(members, REFERENCE_SCHEDULE, mode="nopa-coarse", **kwargs),
                            RegretLineProblem(), RandomStream(8))
        for x, y in zip(a.selections, b.selections, strict=True):
            assert (x.chosen, x.compared_at, x.total_evals, x.per_solver) == (y.chosen, y.compared_at, y.total_evals, y.per_solver)
            np.testing.assert_array_equal(x.resampled_means, y.resampled_means)

    def test_sharing_spreads_the_optimum(self, noiseless_sphere):
        drivers = []

        def member(x0):
            def make(problem, stream):
                drivers.append(Fabian(problem, stream, FABIAN1, x0=x0))
                return drivers[-1]
            return make

        config = PortfolioConfig([member([1.0, 1.0]), member([0.0, 0.0]), member([-2.0, 0.5])],
                                 REFERENCE_SCHEDULE, mode="nopa-coarse", sharing=True, max_selections=1)
        trace = nopa_coarse_run(config, noiseless_sphere, RandomStream(0))
        assert trace.selections[0].chosen == 1
        for d in drivers:
            np.testing.assert_array_equal(d.x, [0.0, 0.0])


class TestRunPortfolio:
    @pytest.mark.parametrize("mode", ["nopa", "inopa", "nopa-coarse"])
    def test_replay_is_identical(self, mode, sphere_z0):
        config = PortfolioConfig([fixed_fabian(None)] * 2 + [lambda p, s: RSAES(p, s)], REFERENCE_SCHEDULE,
                                 mode=mode, total_budget=30_000)
        a = run_portfolio(config, sphere_z0, RandomStream(11))
        b = run_portfolio(config, sphere_z0, RandomStream(11))
        assert [(s.total, s.regret) for s in a.samples] == [(s.total, s.regret) for s in b.samples]
        assert a.final.total <= 30_000

    @pytest.mark.parametrize("mode", ["nopa", "inopa", "nopa-coarse"])
    def test_totals_strictly_increase(self, mode, sphere_z0):
        config = PortfolioConfig([fixed_fabian(None)] * 3, REFERENCE_SCHEDULE, mode=mode, total_budget=50_000)
        totals = run_portfolio(config, sphere_z0, RandomStream(2)).totals
        assert np.all(np.diff(totals) > 0)

    def test_diverging_member_is_flagged(self):
        problem = CallableProblem(lambda x, g: math.inf if abs(x[0]) > 50 else float(x @ x), 2,
                                  expected=lambda x: float(x @ x), optimum=[0, 0])
        # a = 200 throws the first member far out after one iteration
        wild = fixed_fabian([0.5, 0.5], config=FabianConfig(0.1, 200.0, 1.0))
        tame = fixed_fabian([0.5, 0.5], config=FabianConfig(0.1, 1.0, 1.0))
        config = PortfolioConfig([wild, tame], REFERENCE_SCHEDULE, total_budget=20_000)
        trace = nopa_run(config, problem, RandomStream(0))
        assert "solver-failed" in trace.flags
        assert [f[0] for f in trace.meta["failures"]] == [0]
        assert trace.final.total > 10_000
        assert trace.meta["chosen"] == 1
