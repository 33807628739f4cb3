"""Problem and solver contracts, random streams and budget accounting.

Every noisy fitness draw in the package goes through :meth:`NoisyProblem.sample`,
which takes a 2-D array of search points (one row per draw). Budgets are
counted in draws, never in wall-clock time.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence, Tuple

import numpy as np

__all__ = [
    "ContractViolation",
    "NonFiniteFitnessError",
    "RandomStream",
    "EvaluationCounter",
    "NoisyProblem",
    "InstrumentedProblem",
    "SolverDriver",
    "as_point",
    "ceil_int",
    "evaluate",
    "resampled_mean",
]


class ContractViolation(ValueError):
    """A caller broke a documented precondition."""


class NonFiniteFitnessError(ArithmeticError):
    """A fitness draw or a solver iterate stopped being finite."""


def as_point(x, dimension: Optional[int] = None) -> np.ndarray:
    """Validate ``x`` as a search point and return it as a 1-D float array."""
    arr = np.array(x, dtype=float).reshape(-1)
    if arr.size == 0:
        raise ContractViolation("a search point needs at least one coordinate")
    if dimension is not None and arr.size != dimension:
        raise ContractViolation(f"expected a point of dimension {dimension}, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ContractViolation(f"search point has non-finite entries: {arr!r}")
    return arr


def _all_finite(values: np.ndarray) -> bool:
    # a sum is finite only if every term is (barring overflow of huge finite terms)
    total = values.sum()
    return math.isfinite(total) or bool(np.isfinite(values).all())


def ceil_int(value: float) -> int:
    """Ceiling that ignores floating-point fuzz around exact integers.

    ``(10**4) ** 0.25`` evaluates to ``10.000000000000002`` on some platforms;
    a plain ``math.ceil`` would return 11.
    """
    nearest = round(value)
    if abs(value - nearest) <= 1e-12 * max(1.0, abs(value)):
        return int(nearest)
    return int(math.ceil(value))


@dataclass(frozen=True)
class RandomStream:
    """A reproducible, independently keyed source of randomness.

    Streams with the same ``(seed, key)`` replay the same draws bit for bit;
    distinct keys give statistically independent generators (numpy
    ``SeedSequence`` spawn keys).
    """

    seed: int
    key: Tuple[int, ...] = ()

    def child(self, *ids: int) -> "RandomStream":
        return RandomStream(self.seed, self.key + tuple(int(i) for i in ids))

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(int(self.seed) & (2**64 - 1), spawn_key=self.key)
        return np.random.default_rng(seq)


@dataclass
class EvaluationCounter:
    """Evaluations spent by each solver plus those spent on comparisons."""

    per_solver: list = field(default_factory=list)
    comparison: int = 0

    @property
    def total(self) -> int:
        return int(sum(self.per_solver)) + int(self.comparison)

    def charge(self, k: int, solver: Optional[int] = None) -> None:
        if k < 0:
            raise ContractViolation("cannot charge a negative number of evaluations")
        if solver is None:
            self.comparison += int(k)
        else:
            while len(self.per_solver) <= solver:
                self.per_solver.append(0)
            self.per_solver[solver] += int(k)


class NoisyProblem:
    """A stochastic objective ``x -> f(x, w)`` to be minimised in expectation.

    Subclasses implement :meth:`_draw`. ``expected_value`` and ``optimum`` are
    optional oracles; synthetic problems provide both so that regret can be
    reported exactly.
    """

    name = "problem"
    dimension: int = 1
    optimum: Optional[np.ndarray] = None

    def _draw(self, points: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def expected_value(self, x) -> float:
        raise NotImplementedError(f"{self.name} has no exact expected-value oracle")

    @property
    def has_oracle(self) -> bool:
        return self.optimum is not None and type(self).expected_value is not NoisyProblem.expected_value

    def sample(self, points, rng: np.random.Generator) -> np.ndarray:
        """Draw one independent noisy value per row of ``points``."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(1, -1)
        if pts.shape[1] != self.dimension:
            raise ContractViolation(
                f"{self.name} has dimension {self.dimension}, got points of width {pts.shape[1]}"
            )
        if not _all_finite(pts):
            raise NonFiniteFitnessError(f"{self.name}: asked to evaluate a non-finite point")
        with np.errstate(over="ignore", invalid="ignore"):
            values = np.asarray(self._draw(pts, rng), dtype=float)
        if not _all_finite(values):
            bad = pts[~np.isfinite(values)][0]
            raise NonFiniteFitnessError(f"{self.name}: non-finite fitness at x={bad!r}")
        return values

    def sample_mean(self, x, s: int, rng: np.random.Generator) -> float:
        """Average of ``s`` independent draws at ``x``."""
        pts = np.broadcast_to(np.asarray(x, dtype=float), (s, self.dimension))
        return float(self.sample(pts, rng).mean())


class InstrumentedProblem(NoisyProblem):
    """Wraps a problem and counts every draw made through it."""

    def __init__(self, base: NoisyProblem):
        self.base = base
        self.name = base.name
        self.dimension = base.dimension
        self.optimum = base.optimum
        self.calls = 0

    @property
    def has_oracle(self) -> bool:
        return self.base.has_oracle

    def expected_value(self, x) -> float:
        return self.base.expected_value(x)

    def sample(self, points, rng):
        values = self.base.sample(points, rng)
        self.calls += values.shape[0]
        return values

    def sample_mean(self, x, s, rng):
        value = self.base.sample_mean(x, s, rng)
        self.calls += int(s)
        return value


def evaluate(problem: NoisyProblem, x, rng: np.random.Generator,
             counter: Optional[EvaluationCounter] = None, solver: Optional[int] = None) -> float:
    """One noisy draw ``f(x, w)``; charges one evaluation to ``counter``."""
    point = as_point(x, problem.dimension)
    value = float(problem.sample(point[None, :], rng)[0])
    if counter is not None:
        counter.charge(1, solver)
    return value


def resampled_mean(problem: NoisyProblem, x, s: int, rng: np.random.Generator,
                   counter: Optional[EvaluationCounter] = None, solver: Optional[int] = None) -> float:
    """Empirical mean of ``s`` independent draws at ``x``; charges ``s`` evaluations."""
    if int(s) != s or s < 1:
        raise ContractViolation(f"number of resamplings must be a positive integer, got {s!r}")
    point = as_point(x, problem.dimension)
    value = problem.sample_mean(point, int(s), rng)
    if counter is not None:
        counter.charge(int(s), solver)
    return value


# Stream ids used by drivers for their two purposes.
NOISE_STREAM = 0
SEARCH_STREAM = 1


class SolverDriver:
    """Stepwise noisy solver with exact per-evaluation accounting.

    A subclass writes one iteration of its algorithm as the generator
    :meth:`_iteration`. The generator yields ``(points, counts)`` requests,
    meaning "evaluate ``points[p]`` ``counts[p]`` times", and receives the
    per-point means back. The driver can stop in the middle of a request, so
    :meth:`advance` consumes exactly the number of evaluations asked for, while
    the algorithm itself only sees complete iterations.

    The recommendation log maps evaluation counts to the recommendation in
    force from that count on; :meth:`recommendation_at` answers queries about
    any past count.
    """

    name = "solver"

    def __init__(self, problem: NoisyProblem, stream: RandomStream, x0=None):
        self.problem = problem
        self.stream = stream
        self.rng = stream.child(NOISE_STREAM).generator()
        self.search_rng = stream.child(SEARCH_STREAM).generator()
        if x0 is None:
            x0 = self.search_rng.uniform(-1.0, 1.0, problem.dimension)
        self.x0 = as_point(x0, problem.dimension)
        self.evals_used = 0
        self.iterations = 0
        self.overshoot = 0
        self.failure: Optional[str] = None
        self.events: list = []
        self._log_evals = [0]
        self._log_points = [self.x0]
        self._gen: Optional[Iterator] = None
        self._rows: Optional[np.ndarray] = None
        self._pending_injection: Optional[np.ndarray] = None

    # -- to be provided by subclasses -------------------------------------
    def _iteration(self):
        raise NotImplementedError

    def _inject(self, x: np.ndarray) -> None:
        raise NotImplementedError

    # -- recommendations ---------------------------------------------------
    @property
    def recommendation(self) -> np.ndarray:
        return self._log_points[-1]

    def recommendation_at(self, m: int) -> np.ndarray:
        if m < 0 or m > self.evals_used:
            raise ContractViolation(
                f"recommendation after {m} evaluations requested, only {self.evals_used} spent"
            )
        idx = bisect.bisect_right(self._log_evals, m) - 1
        return self._log_points[idx]

    @property
    def milestones(self) -> Sequence[int]:
        return tuple(self._log_evals)

    def _recommend(self, x) -> None:
        point = np.array(x, dtype=float)
        if not _all_finite(point):
            raise NonFiniteFitnessError(f"{self.name}: iterate diverged to {point!r}")
        if self._log_evals[-1] == self.evals_used:
            self._log_points[-1] = point
        else:
            self._log_evals.append(self.evals_used)
            self._log_points.append(point)

    @property
    def failed(self) -> bool:
        return self.failure is not None

    def _fail(self, message: str) -> None:
        self.failure = message
        self._gen = None
        self._rows = None

    # -- request plumbing --------------------------------------------------
    def _load(self, request) -> None:
        points, counts = request
        points = np.asarray(points, dtype=float).reshape(-1, self.problem.dimension)
        if isinstance(counts, (int, np.integer)):
            if counts < 1:
                raise ContractViolation("every requested point needs at least one evaluation")
            counts = np.full(points.shape[0], int(counts))
        else:
            counts = np.asarray(counts, dtype=np.int64).reshape(-1)
            if counts.shape[0] != points.shape[0] or counts.min() < 1:
                raise ContractViolation("every requested point needs at least one evaluation")
        self._points = points
        self._counts = counts
        if counts.max() == 1:
            self._owner = None
            self._rows = points
        else:
            self._owner = np.repeat(np.arange(points.shape[0]), counts)
            self._rows = points[self._owner]
        self._offset = 0
        self._sums = np.zeros(points.shape[0])

    def _ensure_request(self) -> None:
        if self._rows is not None:
            return
        if self._gen is None:
            self._gen = self._iteration()
        self._load(next(self._gen))

    def _complete_request(self) -> None:
        means = self._sums / self._counts
        self._rows = None
        try:
            request = self._gen.send(means)
        except StopIteration:
            self._gen = None
            self.iterations += 1
            if self._pending_injection is not None:
                x, self._pending_injection = self._pending_injection, None
                self._inject(x)
            return
        self._load(request)

    @property
    def at_iteration_boundary(self) -> bool:
        return self._gen is None

    @property
    def pending_evaluations(self) -> int:
        """Evaluations still owed by the request currently in flight."""
        if self._rows is None:
            return 0
        return self._rows.shape[0] - self._offset

    # -- public stepping API -------------------------------------------------
    def advance(self, k: int) -> int:
        """Consume exactly ``k`` evaluations (fewer only if the solver failed)."""
        if k < 0:
            raise ContractViolation("cannot advance by a negative number of evaluations")
        done = 0
        while done < k and not self.failed:
            try:
                self._ensure_request()
                take = min(k - done, self._rows.shape[0] - self._offset)
                lo, hi = self._offset, self._offset + take
                values = self.problem.sample(self._rows[lo:hi], self.rng)
                if self._owner is None:
                    self._sums[lo:hi] = values
                else:
                    self._sums += np.bincount(self._owner[lo:hi], weights=values,
                                              minlength=self._sums.shape[0])
                self._offset = hi
                self.evals_used += take
                done += take
                if self._offset == self._rows.shape[0]:
                    self._complete_request()
            except NonFiniteFitnessError as exc:
                self._fail(str(exc))
                raise
        return done

    def step(self, max_evals: Optional[int] = None) -> int:
        """Run to the end of the current (or next) iteration.

        With ``max_evals`` the iteration is truncated once that many
        evaluations are spent; the partial evaluations stay counted and the
        recommendation is unchanged.
        """
        start = self.iterations
        spent = 0
        while self.iterations == start and not self.failed:
            self._ensure_request()
            need = self._rows.shape[0] - self._offset
            if max_evals is not None:
                need = min(need, max_evals - spent)
                if need <= 0:
                    break
            spent += self.advance(need)
        return spent

    def run_to(self, m: int, max_evals: Optional[int] = None) -> int:
        """Run whole iterations until at least ``m`` evaluations are spent."""
        spent = 0
        while self.evals_used < m and not self.failed:
            budget = None if max_evals is None else max_evals - spent
            if budget is not None and budget <= 0:
                break
            spent += self.step(budget)
        self.overshoot = max(0, self.evals_used - m)
        return spent

    def inject(self, x) -> None:
        """Make ``x`` the solver's next iterate (at the next iteration boundary)."""
        point = as_point(x, self.problem.dimension)
        if self.failed:
            return
        if self.at_iteration_boundary:
            self._inject(point)
        else:
            self._pending_injection = point

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name} evals={self.evals_used} iters={self.iterations}>"
