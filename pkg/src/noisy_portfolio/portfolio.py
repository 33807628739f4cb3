"""Portfolio schedulers that pick among noisy solvers by lagged comparisons.

Three schedulers share one budget and one trace format:

* :func:`nopa_run` gives every solver the same number of evaluations and
  compares them at the milestones ``r_n``.
* :func:`inopa_run` gives non-selected solvers only enough evaluations to
  reach the lagged index ``lag(r_n)`` and spends the rest on the selected one.
* :func:`nopa_coarse_run` is the fair scheduler for solvers that can only
  stop at the end of an iteration, optionally sharing the selected
  recommendation with all members.

Each comparison re-evaluates the recommendations the solvers held after
``lag(r_n)`` evaluations, ``s_n`` times each. Those evaluations are charged to
a separate comparison budget and never change solver state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, List, Optional, Sequence

import numpy as np

from .core import (
    ContractViolation,
    NoisyProblem,
    NonFiniteFitnessError,
    RandomStream,
    SolverDriver,
    as_point,
    ceil_int,
)
from .metrics import RunTrace, UnsupportedRegret, monte_carlo_regret, simple_regret

__all__ = [
    "Schedule",
    "PowerLawSchedule",
    "parse_lag",
    "PortfolioConfig",
    "SelectionRecord",
    "ScheduleCondition",
    "ScheduleReport",
    "select",
    "nopa_run",
    "inopa_run",
    "nopa_coarse_run",
    "run_portfolio",
    "schedule_validity",
    "theoretical_budget",
    "geometric_checkpoints",
    "MODES",
]

MODES = ("nopa", "inopa", "nopa-coarse")

# stream ids of a run; solver i uses child(i)
COMPARISON_STREAM = 10_000
REGRET_STREAM = 10_001


# ---------------------------------------------------------------------------
# schedules
# ---------------------------------------------------------------------------

class Schedule:
    """Comparison milestones ``r``, resampling counts ``s`` and the lag function.

    Parameters
    ----------
    r, s, lag : callable
        Maps from the selection index ``n >= 1`` (``lag`` from an evaluation
        count) to positive integers. ``r`` and ``s`` must be non-decreasing
        and ``lag(m) <= m``.
    """

    def __init__(self, r: Callable[[int], int], s: Callable[[int], int],
                 lag: Callable[[int], int], name: str = "custom"):
        self._r, self._s, self._lag = r, s, lag
        self.name = name

    def r(self, n: int) -> int:
        return int(self._r(n))

    def s(self, n: int) -> int:
        value = int(self._s(n))
        if value < 1:
            raise ContractViolation(f"s({n}) = {value} is not a positive integer")
        return value

    def lag(self, m: int) -> int:
        value = int(self._lag(m))
        if not 1 <= value <= max(m, 1):
            raise ContractViolation(f"lag({m}) = {value} violates 1 <= lag(m) <= m")
        return value

    def resampling_total(self, n: int) -> int:
        return sum(self.s(i) for i in range(1, n + 1))

    def __repr__(self) -> str:
        return f"<Schedule {self.name}>"


def parse_lag(spec: str):
    """Parse ``"pow:c"``, ``"log"`` or ``"none"`` into ``(kind, c)``."""
    spec = str(spec).strip().lower()
    if spec in ("none", "no", "off"):
        return "none", 1.0
    if spec == "log":
        return "log", None
    if spec.startswith("pow:"):
        text = spec[4:]
        try:
            c = float(text) if "/" not in text else float(text.split("/")[0]) / float(text.split("/")[1])
        except (ValueError, ZeroDivisionError):
            raise ContractViolation(f"bad lag exponent in {spec!r}") from None
        if not 0 < c <= 1:
            raise ContractViolation(f"lag exponent must lie in (0, 1], got {c}")
        return "pow", c
    raise ContractViolation(f"lag must be 'pow:c', 'log' or 'none', got {spec!r}")


class PowerLawSchedule(Schedule):
    """``r_n = ceil(n**a)``, ``s_n = ceil(n**b)`` and a power, log or identity lag.

    ``lag="pow:c"`` gives ``ceil(m**c)``, ``lag="log"`` gives
    ``max(1, ceil(ln m))`` and ``lag="none"`` compares current
    recommendations (``lag(m) = m``).
    """

    def __init__(self, a: float, b: float, lag: str = "none"):
        if a <= 0 or b <= 0:
            raise ContractViolation("schedule exponents a and b must be positive")
        self.a, self.b = float(a), float(b)
        self.lag_kind, self.c = parse_lag(lag)
        super().__init__(self._r_value, self._s_value, self._lag_value, name=self.describe())

    def _r_value(self, n):
        return ceil_int(n ** self.a)

    def _s_value(self, n):
        return ceil_int(n ** self.b)

    def _lag_value(self, m):
        if self.lag_kind == "none":
            return m
        if self.lag_kind == "log":
            return max(1, ceil_int(math.log(m))) if m > 1 else 1
        return min(m, max(1, ceil_int(m ** self.c)))

    def describe(self) -> str:
        lag = {"none": "none", "log": "log"}.get(self.lag_kind) or f"pow:{self.c:g}"
        return f"a={self.a:g},b={self.b:g},lag={lag}"


# ---------------------------------------------------------------------------
# validity of power-law schedules
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScheduleCondition:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class ScheduleReport:
    schedule: str
    alpha_star: float
    conditions: tuple

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    def __str__(self) -> str:
        lines = [f"schedule {self.schedule}, alpha*={self.alpha_star:g}"]
        for c in self.conditions:
            lines.append(f"  {c.name:<14} {'PASS' if c.passed else 'FAIL'}  {c.detail}")
        return "\n".join(lines)


def schedule_validity(p: PowerLawSchedule, alpha_star: float) -> ScheduleReport:
    """Check a power-law schedule against the portfolio convergence conditions.

    * convergence: ``sum_n 1/(s_n eps^2_{lag(r_n)})`` is finite, with
      ``eps_m = C/m**alpha_star``. For a power lag this holds iff
      ``b - 2 alpha* a c > 1``; for the log lag iff ``b > 1``.
    * budget: comparisons are negligible, ``sum_{i<=n} s_i = o(r_n)``, iff
      ``b + 1 < a``.
    * lag: ``lag(m) = o(m)``, iff ``c < 1`` (the log lag always passes).

    The report is informational; nothing refuses to run a failing schedule.
    """
    if alpha_star < 0:
        raise ContractViolation("alpha_star must be non-negative")
    conditions = []
    if p.lag_kind == "log":
        conditions.append(ScheduleCondition(
            "convergence", p.b > 1, f"b = {p.b:g} (needs > 1 with a log lag)"))
    else:
        expo = p.b - 2.0 * alpha_star * p.a * p.c
        conditions.append(ScheduleCondition(
            "convergence", expo > 1, f"b - 2 alpha* a c = {expo:.4g} (needs > 1)"))
    conditions.append(ScheduleCondition(
        "budget", p.b + 1 < p.a, f"b + 1 = {p.b + 1:g} vs a = {p.a:g} (needs b + 1 < a)"))
    if p.lag_kind == "log":
        conditions.append(ScheduleCondition("lag", True, "log lag is o(m)"))
    else:
        conditions.append(ScheduleCondition("lag", p.c < 1, f"c = {p.c:.4g} (needs < 1)"))
    return ScheduleReport(p.describe(), float(alpha_star), tuple(conditions))


def theoretical_budget(mode: str, M: int, M_prime: int, schedule: Schedule, n: int) -> int:
    """Evaluations spent up to and including selection ``n``.

    ``nopa``: ``M (r_n + sum_{i<=n} s_i)``.
    ``inopa``: ``M' r_n + M sum_{i<=n} s_i + (M - M') lag(r_n)``, where ``M'``
    counts the solvers that get selected.
    """
    if n < 1:
        raise ContractViolation("selection index n starts at 1")
    if not 1 <= M_prime <= M:
        raise ContractViolation(f"need 1 <= M' <= M, got M'={M_prime}, M={M}")
    r = schedule.r(n)
    s_total = schedule.resampling_total(n)
    if mode == "nopa":
        return M * (r + s_total)
    if mode == "inopa":
        return M_prime * r + M * s_total + (M - M_prime) * schedule.lag(r)
    raise ContractViolation(f"no closed-form budget for mode {mode!r}")


# ---------------------------------------------------------------------------
# selection
# ---------------------------------------------------------------------------

@dataclass
class SelectionRecord:
    """One comparison step.

    ``chosen`` is ``None`` when the budget ran out mid-comparison; the
    previous choice then stays in force. ``total_evals`` is the run's total
    right after the comparison.
    """

    n: int
    compared_at: int
    chosen: Optional[int]
    resampled_means: np.ndarray
    evals_spent: int
    total_evals: int = 0
    per_solver: tuple = ()

    @property
    def aborted(self) -> bool:
        return self.chosen is None


def select(problem: NoisyProblem, recommendations: Sequence, s_n: int, rng: np.random.Generator,
           *, n: int = 0, compared_at: int = 0, max_evals: Optional[int] = None) -> SelectionRecord:
    """Pick the recommendation with the lowest mean over ``s_n`` fresh draws.

    ``None`` entries stand for failed solvers; they get a mean of ``+inf``
    and cost nothing. Ties go to the lowest index. With ``max_evals`` the
    comparison stops when the allowance runs out and the record is aborted.
    """
    if len(recommendations) < 2:
        raise ContractViolation("a comparison needs at least two recommendations")
    if int(s_n) != s_n or s_n < 1:
        raise ContractViolation(f"s_n must be a positive integer, got {s_n!r}")
    means = np.full(len(recommendations), np.inf)
    spent = 0
    for i, rec in enumerate(recommendations):
        if rec is None:
            continue
        point = as_point(rec, problem.dimension)
        k = int(s_n) if max_evals is None else min(int(s_n), max_evals - spent)
        if k <= 0:
            return SelectionRecord(n, compared_at, None, means, spent)
        try:
            value = problem.sample_mean(point, k, rng)
        except NonFiniteFitnessError:
            value = np.inf
        spent += k
        if k < s_n:
            return SelectionRecord(n, compared_at, None, means, spent)
        means[i] = value
    if np.all(np.isinf(means)):
        return SelectionRecord(n, compared_at, None, means, spent)
    return SelectionRecord(n, compared_at, int(np.argmin(means)), means, spent)


# ---------------------------------------------------------------------------
# runs
# ---------------------------------------------------------------------------

SolverFactory = Callable[[NoisyProblem, RandomStream], SolverDriver]


def geometric_checkpoints(budget: int, per_decade: int = 10, start: int = 10) -> List[int]:
    """Roughly log-spaced evaluation counts from ``start`` up to ``budget``."""
    if budget < start:
        return [int(budget)]
    count = max(2, int(math.ceil(per_decade * math.log10(budget / start))) + 1)
    grid = np.unique(np.ceil(np.geomspace(start, budget, count)).astype(np.int64))
    return [int(v) for v in grid]


@dataclass
class PortfolioConfig:
    """Members, schedule and stopping rule of a portfolio run.

    At least one of ``total_budget`` (evaluations, comparisons included) and
    ``max_selections`` must be given. ``checkpoints`` lists the totals at
    which the trace is sampled; by default a log-spaced grid up to the budget.
    """

    solvers: Sequence[SolverFactory]
    schedule: Schedule
    mode: str = "nopa"
    sharing: bool = False
    total_budget: Optional[int] = None
    max_selections: Optional[int] = None
    checkpoints: Optional[Iterable[int]] = None
    label: str = ""

    def __post_init__(self):
        if len(self.solvers) < 2:
            raise ContractViolation("a portfolio needs at least two solvers")
        if self.mode not in MODES:
            raise ContractViolation(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.total_budget is None and self.max_selections is None:
            raise ContractViolation("give a total budget or a maximum number of selections")
        if self.total_budget is not None:
            first = len(self.solvers) * (self.schedule.lag(self.schedule.r(1)) + self.schedule.s(1))
            if self.total_budget < first:
                raise ContractViolation(
                    f"budget {self.total_budget} cannot pay for the first comparison ({first})")

    @property
    def M(self) -> int:
        return len(self.solvers)


class _Run:
    """State shared by the schedulers: members, budget, comparisons, trace."""

    def __init__(self, config: PortfolioConfig, problem: NoisyProblem, stream: RandomStream):
        self.config = config
        self.problem = problem
        self.drivers = [factory(problem, stream.child(i)) for i, factory in enumerate(config.solvers)]
        self.cmp_rng = stream.child(COMPARISON_STREAM).generator()
        self.regret_rng = stream.child(REGRET_STREAM).generator()
        self.comparison = 0
        self.chosen: Optional[int] = None
        self.budget = config.total_budget
        self.trace = RunTrace(label=config.label or config.mode)
        self.trace.meta.update(mode=config.mode, sharing=config.sharing,
                               solvers=[d.name for d in self.drivers],
                               schedule=config.schedule.name)
        if config.checkpoints is not None:
            points = iter(config.checkpoints)
        elif self.budget is not None:
            points = iter(geometric_checkpoints(self.budget))
        else:
            points = iter(())
        self._checkpoints: Iterator[int] = points
        self._next_cp = next(self._checkpoints, None)
        self.record(force=True)

    # -- accounting ---------------------------------------------------------
    @property
    def total(self) -> int:
        return sum(d.evals_used for d in self.drivers) + self.comparison

    @property
    def remaining(self) -> float:
        return math.inf if self.budget is None else self.budget - self.total

    @property
    def alive(self) -> List[int]:
        return [i for i, d in enumerate(self.drivers) if not d.failed]

    def until_checkpoint(self) -> float:
        if self._next_cp is None:
            return math.inf
        return max(1, self._next_cp - self.total)

    # -- trace --------------------------------------------------------------
    @property
    def recommendation(self) -> np.ndarray:
        return self.drivers[0 if self.chosen is None else self.chosen].recommendation

    def _regret(self, x) -> float:
        try:
            return simple_regret(self.problem, x)
        except UnsupportedRegret:
            self.trace.flags.add("monte-carlo")
            return monte_carlo_regret(self.problem, x, self.regret_rng).value

    def record(self, force: bool = False) -> None:
        total = self.total
        hit = False
        while self._next_cp is not None and total >= self._next_cp:
            hit = True
            self._next_cp = next(self._checkpoints, None)
        if hit or force:
            rec = self.recommendation
            self.trace.append(total, [d.evals_used for d in self.drivers], self.comparison,
                              rec, self._regret(rec))

    # -- feeding solvers ---------------------------------------------------
    def _guard(self, i: int, action: Callable[[], int]) -> int:
        driver = self.drivers[i]
        before = driver.evals_used
        try:
            action()
        except NonFiniteFitnessError as exc:
            self.trace.flags.add("solver-failed")
            self.trace.meta.setdefault("failures", []).append((i, driver.evals_used, str(exc)))
        return driver.evals_used - before

    def feed(self, i: int, k: int) -> int:
        """Give solver ``i`` up to ``k`` evaluations, within budget."""
        driver = self.drivers[i]
        spent = 0
        while spent < k and not driver.failed:
            chunk = min(k - spent, self.remaining, self.until_checkpoint())
            if chunk <= 0:
                break
            got = self._guard(i, lambda: driver.advance(int(chunk)))
            spent += got
            self.record()
            if got < chunk:
                break
        return spent

    def step_to(self, i: int, target: int) -> bool:
        """Run solver ``i`` by whole iterations until it has ``target`` evaluations.

        Returns ``False`` when the budget ran out first.
        """
        driver = self.drivers[i]
        while driver.evals_used < target and not driver.failed:
            room = self.remaining
            if room <= 0:
                return False
            goal = min(target, driver.evals_used + self.until_checkpoint())
            allowance = None if room == math.inf else int(room)
            self._guard(i, lambda: driver.run_to(int(goal), allowance))
            self.record()
        return True

    # -- comparisons ----------------------------------------------------------
    def compare(self, n: int, lag_index: int, s_n: int) -> Optional[SelectionRecord]:
        recs = []
        for d in self.drivers:
            if d.failed and d.evals_used < lag_index:
                recs.append(None)
            else:
                recs.append(d.recommendation_at(min(lag_index, d.evals_used)))
        allowance = None if self.budget is None else int(self.remaining)
        record = select(self.problem, recs, s_n, self.cmp_rng, n=n, compared_at=lag_index,
                        max_evals=allowance)
        self.comparison += record.evals_spent
        record.total_evals = self.total
        record.per_solver = tuple(d.evals_used for d in self.drivers)
        self.trace.selections.append(record)
        if record.aborted:
            self.record()
            return None
        self.chosen = record.chosen
        if self.config.sharing:
            best = self.drivers[self.chosen].recommendation
            for d in self.drivers:
                d.inject(best)
        self.record()
        return record

    def done_selecting(self, n: int) -> bool:
        limit = self.config.max_selections
        return limit is not None and n > limit

    def finish(self) -> RunTrace:
        self.record(force=True)
        self.trace.meta["overshoot"] = [d.overshoot for d in self.drivers]
        self.trace.meta["fallbacks"] = [getattr(d, "fallbacks", 0) for d in self.drivers]
        self.trace.meta["chosen"] = self.chosen
        return self.trace


def nopa_run(config: PortfolioConfig, problem: NoisyProblem, stream: RandomStream) -> RunTrace:
    """Fair portfolio: every member gets one evaluation per portfolio iteration.

    When the common count ``m`` reaches ``r_n``, the members' recommendations
    after ``lag(r_n)`` evaluations are compared with ``s_n`` resamplings each.
    Until the first comparison the portfolio recommends solver 0's point.
    """
    run = _Run(config, problem, stream)
    sched, M = config.schedule, config.M
    m, n = 0, 1
    while not run.done_selecting(n):
        r = sched.r(n)
        if m >= r:
            if run.compare(n, sched.lag(r), sched.s(n)) is None:
                break
            n += 1
            continue
        if not run.alive:
            break
        t = r - m
        if run.budget is not None:
            t = min(t, int(run.remaining) // M)
        if run.until_checkpoint() != math.inf:
            t = min(t, math.ceil(run.until_checkpoint() / M))
        if t <= 0:
            break
        for i in range(M):
            run.feed(i, int(t))
        m += int(t)
    return run.finish()


def inopa_run(config: PortfolioConfig, problem: NoisyProblem, stream: RandomStream) -> RunTrace:
    """Lazy portfolio: only the selected member runs ahead.

    Before comparison ``n`` every member is topped up to ``lag(r_n)``
    evaluations. After it, the selected member runs until its own count
    reaches ``r_{n+1}`` while the portfolio recommends its current point.
    """
    run = _Run(config, problem, stream)
    sched, M = config.schedule, config.M
    n = 1
    while not run.done_selecting(n):
        r = sched.r(n)
        lag = sched.lag(r)
        for i in range(M):
            need = lag - run.drivers[i].evals_used
            if need > 0:
                run.feed(i, need)
        if any(d.evals_used < lag and not d.failed for d in run.drivers):
            break
        if run.compare(n, lag, sched.s(n)) is None:
            break
        chosen = run.drivers[run.chosen]
        need = sched.r(n + 1) - chosen.evals_used
        if need > 0 and run.feed(run.chosen, need) < need and not chosen.failed:
            break
        n += 1
    return run.finish()


def nopa_coarse_run(config: PortfolioConfig, problem: NoisyProblem, stream: RandomStream) -> RunTrace:
    """Fair portfolio for members that stop only between iterations.

    Each member runs whole iterations until its count ``R_i`` reaches
    ``r_n`` (possibly overshooting). Comparisons use the recommendation in
    force after ``lag(r_n)`` evaluations.
    """
    run = _Run(config, problem, stream)
    sched = config.schedule
    n = 1
    exhausted = False
    while not run.done_selecting(n) and not exhausted:
        r = sched.r(n)
        for i in range(config.M):
            if not run.step_to(i, r):
                exhausted = True
                break
        if exhausted or not run.alive:
            break
        if run.compare(n, sched.lag(r), sched.s(n)) is None:
            break
        n += 1
    return run.finish()


_RUNNERS = {"nopa": nopa_run, "inopa": inopa_run, "nopa-coarse": nopa_coarse_run}


def run_portfolio(config: PortfolioConfig, problem: NoisyProblem, stream: RandomStream) -> RunTrace:
    """Dispatch on ``config.mode``."""
    return _RUNNERS[config.mode](config, problem, stream)
