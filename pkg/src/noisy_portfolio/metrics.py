"""Regret traces, convergence slopes and solver classification."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence

import numpy as np

from .core import ContractViolation, NoisyProblem

__all__ = [
    "TraceSample",
    "RunTrace",
    "SlopeReport",
    "RegretEstimate",
    "SolverProfile",
    "UnsupportedRegret",
    "Classification",
    "simple_regret",
    "monte_carlo_regret",
    "slope",
    "regression_slope",
    "delta_gap",
    "classify_solvers",
]

#: Regression fits ignore samples taken before this many evaluations.
REGRESSION_MIN_EVALS = 10


class TraceSample(NamedTuple):
    total: int
    per_solver: tuple
    comparison: int
    recommendation: np.ndarray
    regret: float


@dataclass
class RunTrace:
    """Regret of the recommendation as a function of evaluations spent.

    ``flags`` collects run-level annotations such as ``"monte-carlo"``
    (regret is estimated rather than exact) or ``"solver-failed"``.
    """

    label: str = ""
    samples: List[TraceSample] = field(default_factory=list)
    selections: list = field(default_factory=list)
    flags: set = field(default_factory=set)
    meta: dict = field(default_factory=dict)

    def append(self, total, per_solver, comparison, recommendation, regret) -> None:
        sample = TraceSample(int(total), tuple(int(v) for v in per_solver), int(comparison),
                             np.array(recommendation, dtype=float), float(regret))
        if self.samples and self.samples[-1].total == sample.total:
            self.samples[-1] = sample
        else:
            self.samples.append(sample)

    @property
    def totals(self) -> np.ndarray:
        return np.array([s.total for s in self.samples], dtype=float)

    @property
    def regrets(self) -> np.ndarray:
        return np.array([s.regret for s in self.samples], dtype=float)

    @property
    def final(self) -> TraceSample:
        if not self.samples:
            raise ContractViolation("empty trace")
        return self.samples[-1]

    def regret_at(self, total: float) -> float:
        """Regret of the recommendation in force after ``total`` evaluations."""
        totals = self.totals
        idx = int(np.searchsorted(totals, total, side="right")) - 1
        if idx < 0:
            raise ContractViolation(f"no recommendation before {total} evaluations")
        return float(self.samples[idx].regret)


@dataclass(frozen=True)
class RegretEstimate:
    value: float
    halfwidth: float
    exact: bool


class UnsupportedRegret(NotImplementedError):
    """Exact regret requested on a problem without an expected-value oracle."""


def simple_regret(problem: NoisyProblem, x, monte_carlo: bool = False,
                  rng: Optional[np.random.Generator] = None) -> float:
    """Simple regret ``E f(x) - E f(x*)`` of the recommendation ``x``.

    Exact when the problem has an oracle. Otherwise, with ``monte_carlo``
    set, returns the point estimate of :func:`monte_carlo_regret`.

    Raises
    ------
    UnsupportedRegret
        No oracle and ``monte_carlo`` is off.
    """
    if problem.has_oracle:
        return float(problem.expected_value(x) - problem.expected_value(problem.optimum))
    if not monte_carlo:
        raise UnsupportedRegret(f"{problem.name} has no exact oracle and Monte Carlo is disabled")
    if rng is None:
        raise ContractViolation("Monte Carlo regret needs a random generator")
    return monte_carlo_regret(problem, x, rng).value


def monte_carlo_regret(problem: NoisyProblem, x, rng: np.random.Generator,
                       resamples: int = 10_000, optimum_value: Optional[float] = None) -> RegretEstimate:
    """Regret estimate from ``resamples`` draws, with a 95% half-width.

    Uses the exact oracle when there is one. Otherwise ``optimum_value`` (or
    a matching Monte Carlo estimate at ``problem.optimum``) is subtracted.
    """
    if problem.has_oracle:
        return RegretEstimate(simple_regret(problem, x), 0.0, True)
    if resamples < 2:
        raise ContractViolation("a Monte Carlo estimate needs at least two resamples")
    pts = np.broadcast_to(np.asarray(x, dtype=float), (resamples, problem.dimension))
    draws = problem.sample(pts, rng)
    value = float(draws.mean())
    var = float(draws.var(ddof=1)) / resamples
    if optimum_value is None:
        if problem.optimum is None:
            raise ContractViolation("regret needs either an optimum or its value")
        opt = problem.sample(np.broadcast_to(problem.optimum, (resamples, problem.dimension)), rng)
        optimum_value = float(opt.mean())
        var += float(opt.var(ddof=1)) / resamples
    return RegretEstimate(value - optimum_value, 1.96 * math.sqrt(var), False)


def regression_slope(totals: Sequence[float], regrets: Sequence[float]) -> float:
    """Least-squares slope of ``log(regret)`` against ``log(evaluations)``."""
    x = np.log(np.asarray(totals, dtype=float))
    y = np.log(np.asarray(regrets, dtype=float))
    if x.size < 2 or np.ptp(x) == 0:
        return float("nan")
    xc = x - x.mean()
    return float(xc @ (y - y.mean()) / (xc @ xc))


@dataclass(frozen=True)
class SlopeReport:
    """Convergence slope of one run.

    ``endpoint`` is ``log(SR_N) / log(N)`` at the final sample. ``optimal``
    is set when the final regret is exactly zero; such runs have no finite
    slope and are excluded from averages.
    """

    endpoint: float
    regression: float
    evaluations: int
    final_regret: float
    optimal: bool


def slope(trace: RunTrace) -> SlopeReport:
    """Endpoint and regression slopes of a trace."""
    if len(trace.samples) < 2:
        raise ContractViolation("a slope needs a trace with at least two samples")
    final = trace.final
    if final.total <= 1:
        raise ContractViolation("a slope needs more than one evaluation")
    if final.regret < 0:
        raise ContractViolation(f"negative regret {final.regret!r}")
    optimal = final.regret == 0.0
    endpoint = float("nan") if optimal else math.log(final.regret) / math.log(final.total)
    totals, regrets = trace.totals, trace.regrets
    keep = (totals >= REGRESSION_MIN_EVALS) & (regrets > 0)
    reg = regression_slope(totals[keep], regrets[keep]) if keep.sum() >= 2 else float("nan")
    return SlopeReport(endpoint, reg, final.total, final.regret, optimal)


# ---------------------------------------------------------------------------
# classification of synthetic solvers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SolverProfile:
    """A solver whose regret after ``m`` evaluations is ``C / m**alpha``."""

    C: float
    alpha: float

    def regret(self, m: float) -> float:
        return self.C / max(m, 1) ** self.alpha


def delta_gap(regrets: Sequence[float], i: int) -> float:
    """Excess regret of solver ``i`` over the best solver at the same count."""
    values = np.asarray(regrets, dtype=float)
    if values.size == 0:
        raise ContractViolation("delta_gap needs at least one regret")
    if not np.all(np.isfinite(values)):
        raise ContractViolation("regrets must be finite")
    return float(values[i] - values.min())


@dataclass(frozen=True)
class Classification:
    """Asymptotic ranking quantities for a set of solver profiles.

    Indices are 0-based. ``set_optimal`` holds the solvers with the best rate
    ``alpha_star``. ``subset_optimal`` holds those that also have the best
    constant ``C_star`` among them. ``C`` is a third of the smallest non-zero
    gap between constants. ``degenerate`` is set when all constants coincide
    (``C`` is then undefined and reported as ``nan``).
    """

    alpha_star: float
    C_star: float
    C: float
    set_optimal: frozenset
    subset_optimal: frozenset
    degenerate: bool

    def epsilon(self, n: float) -> float:
        """Resolution ``C / n**alpha_star`` at which the classes separate."""
        return self.C / n ** self.alpha_star


def classify_solvers(profiles: Sequence[SolverProfile]) -> Classification:
    if len(profiles) < 2:
        raise ContractViolation("need at least two solver profiles")
    for p in profiles:
        if p.C <= 0 or p.alpha <= 0:
            raise ContractViolation(f"profile constants must be positive, got {p!r}")
    alphas = np.array([p.alpha for p in profiles], dtype=float)
    consts = np.array([p.C for p in profiles], dtype=float)
    alpha_star = float(alphas.max())
    set_opt = frozenset(int(i) for i in np.flatnonzero(alphas == alpha_star))
    C_star = float(min(consts[i] for i in set_opt))
    subset = frozenset(i for i in set_opt if consts[i] == C_star)
    gaps = np.abs(consts[:, None] - consts[None, :])
    nonzero = gaps[gaps > 0]
    degenerate = nonzero.size == 0
    C = float("nan") if degenerate else float(nonzero.min()) / 3.0
    return Classification(alpha_star, C_star, C, set_opt, subset, degenerate)
