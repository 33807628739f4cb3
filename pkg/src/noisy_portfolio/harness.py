"""Experiment runner: configs, repetitions, CSV output and two theory checks.

Config files are flat ``key = value`` text::

    label = fabian1-d2-z0
    problem = sphere-d2-z0
    solvers = fabian1
    mode = solo
    budget = 1e5
    repetitions = 50
    seed = 1

Portfolio configs add ``mode = nopa | inopa | nopa-coarse``,
``schedule = a=4.2, b=2.2, lag=pow:1/4.2`` and ``sharing = true|false``.
"""

from __future__ import annotations

import configparser
import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
from scipy.optimize import isotonic_regression
from scipy.stats import norm

from .core import ContractViolation, NoisyProblem, NonFiniteFitnessError, RandomStream, ceil_int
from .metrics import (
    RunTrace,
    SlopeReport,
    SolverProfile,
    UnsupportedRegret,
    classify_solvers,
    monte_carlo_regret,
    simple_regret,
    slope,
)
from .portfolio import (
    MODES,
    PortfolioConfig,
    PowerLawSchedule,
    Schedule,
    geometric_checkpoints,
    parse_lag,
    run_portfolio,
    select,
)
from .problems import RegretLineProblem, SyntheticRegretSolver, problem_from_key
from .solvers import solver_from_key

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "parse_config",
    "load_config",
    "solo_run",
    "run_single",
    "run_experiment",
    "ExperimentResult",
    "SlopeRow",
    "SlopeTable",
    "aggregate",
    "LagNecessityReport",
    "lag_necessity_experiment",
    "ShiftReport",
    "budget_shift_experiment",
    "matched_offsets",
    "SelectionBoundReport",
    "selection_bound_experiment",
    "AGGREGATE_COLUMNS",
]

AGGREGATE_COLUMNS = ("label", "mean_slope", "stderr", "optimal_hits", "reps", "budget", "seed")


class ConfigError(ContractViolation):
    """An experiment config is missing keys or has unusable values."""


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: a problem, one or more solvers and how to run them.

    ``mode = "solo"`` runs a single solver; the portfolio modes need two or
    more. ``budget`` counts all evaluations, comparisons included.
    ``check_min``/``check_max`` bound the mean endpoint slope in check mode.
    """

    label: str
    problem: str
    solvers: tuple
    mode: str = "solo"
    schedule_a: float = 4.2
    schedule_b: float = 2.2
    lag: str = "pow:0.238095238095"
    sharing: bool = False
    budget: int = 100_000
    repetitions: int = 1
    base_seed: int = 0
    output: Optional[str] = None
    dense: bool = False
    check_min: Optional[float] = None
    check_max: Optional[float] = None

    def __post_init__(self):
        if self.repetitions < 1:
            raise ConfigError("repetitions must be at least 1")
        if self.budget < 10:
            raise ConfigError("budget must be at least 10 evaluations")
        if self.mode == "solo":
            if len(self.solvers) != 1:
                raise ConfigError("mode 'solo' takes exactly one solver")
        elif self.mode in MODES:
            if len(self.solvers) < 2:
                raise ConfigError(f"mode {self.mode!r} needs at least two solvers")
        else:
            raise ConfigError(f"unknown mode {self.mode!r}")
        try:
            problem_from_key(self.problem)
            for key in self.solvers:
                solver_from_key(key)
            parse_lag(self.lag)
            self.schedule()
        except ContractViolation as exc:
            raise ConfigError(str(exc)) from None

    def schedule(self) -> PowerLawSchedule:
        return PowerLawSchedule(self.schedule_a, self.schedule_b, self.lag)

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(self, base_seed=int(seed))


def _parse_bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _parse_number(text: str, key: str) -> float:
    text = text.strip()
    try:
        if "/" in text:
            num, den = text.split("/")
            return float(num) / float(den)
        return float(text)
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"{key}: not a number: {text!r}") from None


def _parse_schedule(text: str) -> dict:
    out = {}
    for part in text.replace(";", ",").split(","):
        if not part.strip():
            continue
        if "=" not in part:
            raise ConfigError(f"schedule entries look like a=4.2, got {part!r}")
        k, v = (p.strip() for p in part.split("=", 1))
        out[k] = v
    unknown = set(out) - {"a", "b", "lag"}
    if unknown:
        raise ConfigError(f"unknown schedule fields {sorted(unknown)}")
    return out


_KNOWN_KEYS = {"label", "problem", "solver", "solvers", "mode", "schedule", "sharing", "budget",
               "repetitions", "reps", "seed", "base_seed", "output", "dense", "check_min",
               "check_max"}


def parse_config(text: str, default_label: str = "experiment") -> ExperimentConfig:
    """Parse the flat ``key = value`` config format (``#`` starts a comment)."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    try:
        parser.read_string("[experiment]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"unreadable config: {exc}") from None
    raw = dict(parser["experiment"])
    unknown = set(raw) - _KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    if "problem" not in raw:
        raise ConfigError("config needs a 'problem' key")
    solvers_text = raw.get("solvers", raw.get("solver"))
    if not solvers_text:
        raise ConfigError("config needs a 'solvers' key")
    solvers = tuple(s.strip() for s in _split_solvers(solvers_text) if s.strip())
    kwargs = dict(label=raw.get("label", default_label), problem=raw["problem"].strip(),
                  solvers=solvers)
    kwargs["mode"] = raw.get("mode", "solo" if len(solvers) == 1 else "nopa").strip().lower()
    if "schedule" in raw:
        sched = _parse_schedule(raw["schedule"])
        if "a" in sched:
            kwargs["schedule_a"] = _parse_number(sched["a"], "schedule.a")
        if "b" in sched:
            kwargs["schedule_b"] = _parse_number(sched["b"], "schedule.b")
        if "lag" in sched:
            kwargs["lag"] = sched["lag"]
    if "sharing" in raw:
        kwargs["sharing"] = _parse_bool(raw["sharing"])
    if "dense" in raw:
        kwargs["dense"] = _parse_bool(raw["dense"])
    if "budget" in raw:
        budget = _parse_number(raw["budget"], "budget")
        if budget != int(budget):
            raise ConfigError("budget must be a whole number of evaluations")
        kwargs["budget"] = int(budget)
    reps = raw.get("repetitions", raw.get("reps"))
    if reps is not None:
        kwargs["repetitions"] = int(_parse_number(reps, "repetitions"))
    seed = raw.get("seed", raw.get("base_seed"))
    if seed is not None:
        kwargs["base_seed"] = int(_parse_number(seed, "seed"))
    if "output" in raw:
        kwargs["output"] = raw["output"].strip()
    for key in ("check_min", "check_max"):
        if key in raw:
            kwargs[key] = _parse_number(raw[key], key)
    return ExperimentConfig(**kwargs)


def _split_solvers(text: str) -> List[str]:
    # commas inside fabian{...} braces belong to the key
    out, depth, current = [], 0, []
    for ch in text:
        if ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
        if ch == "," and depth == 0:
            out.append("".join(current))
            current = []
        else:
            current.append(ch)
    out.append("".join(current))
    return out


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, default_label=path.stem)


# ---------------------------------------------------------------------------
# single runs
# ---------------------------------------------------------------------------

def _checkpoints(budget: int, dense: bool):
    if dense:
        return range(1, budget + 1)
    return geometric_checkpoints(budget)


def solo_run(factory, problem: NoisyProblem, stream: RandomStream, budget: int,
             checkpoints=None, label: str = "") -> RunTrace:
    """Run one solver for ``budget`` evaluations, sampling regret at ``checkpoints``.

    The solver uses ``stream.child(0)``, the same stream it would get as
    member 0 of a portfolio.
    """
    driver = factory(problem, stream.child(0))
    regret_rng = stream.child(10_001).generator()
    trace = RunTrace(label=label or driver.name)
    trace.meta.update(mode="solo", solvers=[driver.name])

    def regret(x):
        try:
            return simple_regret(problem, x)
        except UnsupportedRegret:
            trace.flags.add("monte-carlo")
            return monte_carlo_regret(problem, x, regret_rng).value

    def record():
        rec = driver.recommendation
        trace.append(driver.evals_used, [driver.evals_used], 0, rec, regret(rec))

    record()
    points = list(checkpoints) if checkpoints is not None else geometric_checkpoints(budget)
    for cp in points:
        cp = min(int(cp), budget)
        if cp <= driver.evals_used:
            continue
        try:
            driver.advance(cp - driver.evals_used)
        except NonFiniteFitnessError as exc:
            trace.flags.add("solver-failed")
            trace.meta["failures"] = [(0, driver.evals_used, str(exc))]
            break
        record()
    if driver.evals_used < budget and not driver.failed:
        driver.advance(budget - driver.evals_used)
    record()
    trace.meta["fallbacks"] = [getattr(driver, "fallbacks", 0)]
    return trace


def run_single(config: ExperimentConfig, rep: int) -> RunTrace:
    """Repetition ``rep`` of ``config``; seeded by ``(base_seed, rep)`` only."""
    problem = problem_from_key(config.problem)
    stream = RandomStream(config.base_seed, (int(rep),))
    factories = [solver_from_key(k) for k in config.solvers]
    checkpoints = _checkpoints(config.budget, config.dense)
    if config.mode == "solo":
        trace = solo_run(factories[0], problem, stream, config.budget, checkpoints, config.label)
    else:
        pcfg = PortfolioConfig(factories, config.schedule(), mode=config.mode,
                               sharing=config.sharing, total_budget=config.budget,
                               checkpoints=checkpoints, label=config.label)
        trace = run_portfolio(pcfg, problem, stream)
    trace.meta["rep"] = int(rep)
    return trace


def _run_single_star(args):
    return run_single(*args)


# ---------------------------------------------------------------------------
# aggregation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SlopeRow:
    label: str
    mean_slope: float
    stderr: float
    optimal_hits: int
    reps: int
    budget: int
    seed: int

    def as_tuple(self):
        return (self.label, self.mean_slope, self.stderr, self.optimal_hits, self.reps,
                self.budget, self.seed)


@dataclass
class SlopeTable:
    rows: List[SlopeRow] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(AGGREGATE_COLUMNS)
        for row in self.rows:
            writer.writerow([row.label, repr(row.mean_slope), repr(row.stderr), row.optimal_hits,
                             row.reps, row.budget, row.seed])
        return buf.getvalue()

    def __str__(self) -> str:
        lines = [f"{'label':<28} {'slope':>9} {'stderr':>8} {'opt':>4} {'reps':>5}"]
        for r in self.rows:
            lines.append(f"{r.label:<28} {r.mean_slope:>9.4f} {r.stderr:>8.4f} "
                         f"{r.optimal_hits:>4d} {r.reps:>5d}")
        return "\n".join(lines)


def aggregate(traces: Sequence[RunTrace], label: str = "", budget: int = 0, seed: int = 0) -> SlopeRow:
    """Mean endpoint slope and its standard error over runs.

    Runs that reached the optimum exactly have no slope; they are left out of
    the mean and counted in ``optimal_hits``. The standard error is the
    sample standard deviation over the averaged runs divided by the square
    root of their number (0 for a single run).
    """
    reports = [slope(t) for t in traces]
    values = np.array([r.endpoint for r in reports if not r.optimal])
    hits = sum(r.optimal for r in reports)
    mean = float(values.mean()) if values.size else float("nan")
    err = float(values.std(ddof=1) / math.sqrt(values.size)) if values.size > 1 else 0.0
    return SlopeRow(label, mean, err, int(hits), len(reports), int(budget), int(seed))


# ---------------------------------------------------------------------------
# experiments from configs
# ---------------------------------------------------------------------------

@dataclass
class ExperimentResult:
    config: ExperimentConfig
    traces: List[RunTrace]
    slopes: List[SlopeReport]
    row: SlopeRow
    paths: List[Path] = field(default_factory=list)

    @property
    def table(self) -> SlopeTable:
        return SlopeTable([self.row])


def trace_csv(trace: RunTrace) -> str:
    """One row per trace sample; recommendation coordinates last."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    n_solvers = len(trace.samples[0].per_solver) if trace.samples else 0
    dim = trace.samples[0].recommendation.size if trace.samples else 0
    writer.writerow(["total", *[f"solver{i}" for i in range(n_solvers)], "comparison", "regret",
                     *[f"x{j}" for j in range(dim)]])
    for s in trace.samples:
        writer.writerow([s.total, *s.per_solver, s.comparison, repr(s.regret),
                         *[repr(float(v)) for v in s.recommendation]])
    return buf.getvalue()


def run_experiment(config: ExperimentConfig, workers: int = 1,
                   output: Optional[os.PathLike] = None) -> ExperimentResult:
    """Run all repetitions; write per-run and aggregate CSVs when an output dir is set.

    Results do not depend on ``workers``: each repetition is seeded from
    ``(base_seed, rep)`` alone.
    """
    jobs = [(config, rep) for rep in range(config.repetitions)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            traces = list(pool.map(_run_single_star, jobs))
    else:
        traces = [run_single(*job) for job in jobs]
    slopes = [slope(t) for t in traces]
    row = aggregate(traces, config.label, config.budget, config.base_seed)
    result = ExperimentResult(config, traces, slopes, row)
    out = output if output is not None else config.output
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        for rep, trace in enumerate(traces):
            path = out / f"{config.label}_rep{rep:03d}.csv"
            path.write_text(trace_csv(trace))
            result.paths.append(path)
        path = out / f"{config.label}_aggregate.csv"
        path.write_text(result.table.to_csv())
        result.paths.append(path)
    return result


# ---------------------------------------------------------------------------
# lag necessity
# ---------------------------------------------------------------------------

@dataclass
class LagNecessityReport:
    """Misranking frequencies of a two-solver portfolio.

    ``exact`` is the per-``n`` probability of choosing the worse solver,
    ``P(N > delta sqrt(s_n / 2))`` with ``delta`` the true regret gap at the
    compared index. ``lower`` replaces ``delta`` by twice the gap at ``r_n``
    and is a lower bound on ``exact`` when there is no lag.
    """

    e: float
    beta: float
    lag: Optional[str]
    n: np.ndarray
    empirical: np.ndarray
    exact: np.ndarray
    lower: np.ndarray
    reps: int

    @property
    def frequency(self) -> float:
        return float(self.empirical.mean())

    @property
    def exact_frequency(self) -> float:
        return float(self.exact.mean())

    @property
    def stderr(self) -> float:
        """Binomial standard error of the overall frequency."""
        p = self.exact_frequency
        return math.sqrt(max(p * (1 - p), 1e-300) / (self.n.size * self.reps))

    def per_n_within(self, k: float = 3.0) -> np.ndarray:
        """Per-``n`` check that the empirical frequency is within ``k`` binomial errors."""
        se = np.sqrt(np.maximum(self.exact * (1 - self.exact), 0.0) / self.reps)
        return np.abs(self.empirical - self.exact) <= k * se + 1.0 / self.reps

    def __str__(self) -> str:
        lag = self.lag or "none"
        return (f"e={self.e:g} beta={self.beta:g} lag={lag} n=[{self.n[0]},{self.n[-1]}] "
                f"reps={self.reps}: misranking {self.frequency:.4f} "
                f"(exact {self.exact_frequency:.4f}, lower {float(self.lower.mean()):.4f})")


class _LagSchedule(Schedule):
    def __init__(self, beta: float, lag: Optional[str]):
        self.beta = beta
        kind, c = parse_lag(lag or "none")
        self.kind, self.c = kind, c
        super().__init__(self._r_value, self._s_value, self._lag_value,
                         name=f"r=n^4,s=r^{beta:g},lag={lag or 'none'}")

    @staticmethod
    def _r_value(n):
        return n ** 4

    def _s_value(self, n):
        return ceil_int(float(n ** 4) ** self.beta)

    def _lag_value(self, m):
        if self.kind == "none":
            return m
        if self.kind == "log":
            return max(1, ceil_int(math.log(m))) if m > 1 else 1
        return min(m, max(1, ceil_int(m ** self.c)))


def lag_necessity_experiment(e: float, beta: float, n_max: int, reps: int,
                             lag: Optional[str] = None, n_min: int = 10,
                             seed: int = 0) -> LagNecessityReport:
    """Two synthetic solvers ranked by a fair portfolio with or without a lag.

    Solver 0 has regret ``m**-(1-e)``, solver 1 has ``m**-(1-2e)``. The
    portfolio compares them at ``r_n = n**4`` with ``s_n = ceil(r_n**beta)``
    resamplings, for ``n = 1 .. n_max``. The report covers ``n_min .. n_max``.
    """
    if not 0 <= e < 0.5:
        raise ContractViolation(f"e must lie in [0, 1/2), got {e}")
    if beta <= 0 or beta > 2 - 4 * e + 1e-12:
        raise ContractViolation(f"beta must lie in (0, 2 - 4e] = (0, {2 - 4 * e:g}], got {beta}")
    if not 1 <= n_min <= n_max:
        raise ContractViolation("need 1 <= n_min <= n_max")
    schedule = _LagSchedule(beta, lag)
    a1, a2 = 1 - e, 1 - 2 * e
    factories = [lambda p, s: SyntheticRegretSolver(p, s, 1.0, a1),
                 lambda p, s: SyntheticRegretSolver(p, s, 1.0, a2)]
    problem = RegretLineProblem()
    ns = np.arange(n_min, n_max + 1)
    wrong = np.zeros(ns.size)
    for rep in range(reps):
        config = PortfolioConfig(factories, schedule, mode="nopa", max_selections=n_max,
                                 label="lag-necessity")
        trace = run_portfolio(config, problem, RandomStream(seed, (rep,)))
        chosen = {rec.n: rec.chosen for rec in trace.selections}
        wrong += np.array([chosen[n] != 0 for n in ns], dtype=float)
    exact = np.empty(ns.size)
    lower = np.empty(ns.size)
    for k, n in enumerate(ns):
        r, s = schedule.r(n), schedule.s(n)
        L = schedule.lag(r)
        gap = L ** -a2 - L ** -a1
        exact[k] = norm.sf(gap * math.sqrt(s / 2.0))
        doubled = 2.0 * (r ** -a2 - r ** -a1)
        lower[k] = norm.sf(doubled * math.sqrt(s / 2.0))
    return LagNecessityReport(e, beta, lag, ns, wrong / reps, exact, lower, reps)


# ---------------------------------------------------------------------------
# selection bound
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SelectionBoundReport:
    """Frequency of choosing a solver at least ``2 eps`` worse than the best."""

    lag_index: int
    s: int
    trials: int
    frequency: float
    bound: float

    @property
    def tolerance(self) -> float:
        b = min(self.bound, 1.0)
        return 3.0 * math.sqrt(b * (1 - b) / self.trials)

    @property
    def holds(self) -> bool:
        return self.frequency <= self.bound + self.tolerance


def selection_bound_experiment(profiles: Sequence[SolverProfile], lag_index: int, s: int,
                               trials: int = 1000, seed: int = 0) -> SelectionBoundReport:
    """Compare synthetic solvers frozen after ``lag_index`` evaluations, ``trials`` times.

    A selection is bad when the chosen solver's regret exceeds the best by at
    least ``2 eps``, with ``eps = C / lag_index**alpha*``. The reference bound
    is ``M / (s eps**2)``.
    """
    cls = classify_solvers(profiles)
    if cls.degenerate:
        raise ContractViolation("profiles with identical constants have no resolution eps")
    eps = cls.epsilon(lag_index)
    regrets = np.array([p.regret(lag_index) for p in profiles])
    problem = RegretLineProblem()
    rng = RandomStream(seed, (lag_index, s)).generator()
    recs = [np.array([v]) for v in regrets]
    bad = 0
    for _ in range(trials):
        record = select(problem, recs, s, rng)
        if regrets[record.chosen] - regrets.min() >= 2 * eps:
            bad += 1
    bound = len(profiles) / (s * eps ** 2)
    return SelectionBoundReport(lag_index, s, trials, bad / trials, bound)


# ---------------------------------------------------------------------------
# budget shift
# ---------------------------------------------------------------------------

def monotone_curve(curve: np.ndarray) -> np.ndarray:
    """Least-squares non-increasing fit of a mean log-regret curve."""
    return isotonic_regression(np.asarray(curve, dtype=float), increasing=False).x


def _first_crossing(log_evals: np.ndarray, curve: np.ndarray, level: float) -> float:
    """Log-evaluations at which the monotone fit of ``curve`` first reaches ``level``."""
    fit = monotone_curve(curve)
    hits = np.flatnonzero(fit <= level)
    if hits.size == 0:
        return float("nan")
    j = int(hits[0])
    if j == 0:
        return float(log_evals[0])
    y0, y1 = fit[j - 1], fit[j]
    x0, x1 = log_evals[j - 1], log_evals[j]
    if y1 == y0:
        return float(x1)
    return float(x0 + (level - y0) * (x1 - x0) / (y1 - y0))


def matched_offsets(reference: tuple, other: tuple, levels: Sequence[float]) -> np.ndarray:
    """Horizontal distances in log-evaluations between two regret curves.

    Each curve is ``(log_evals, mean_log_regret)``. Both are first replaced
    by their non-increasing least-squares fits; a running minimum would lock
    in downward noise and bias the crossings early. For every level the
    crossing point is located by linear interpolation between milestones,
    and ``other - reference`` is returned.
    """
    return np.array([_first_crossing(*other, lv) - _first_crossing(*reference, lv)
                     for lv in levels])


@dataclass
class ShiftReport:
    """Offsets of portfolio regret curves against one solver run alone.

    ``levels`` are mean log-regret targets, deepest last. ``curves`` maps
    ``solo``/``nopa``/``inopa`` to ``(log_evals, mean_log_regret)``.
    """

    M: int
    solver: str
    problem: str
    levels: np.ndarray
    nopa_offsets: np.ndarray
    inopa_offsets: np.ndarray
    curves: dict
    reps: int

    @property
    def nopa_deepest(self) -> float:
        return float(self.nopa_offsets[-1])

    @property
    def inopa_deepest(self) -> float:
        return float(self.inopa_offsets[-1])

    def __str__(self) -> str:
        lines = [f"M={self.M} solver={self.solver} problem={self.problem} reps={self.reps} "
                 f"log M={math.log(self.M):.3f}",
                 f"{'log regret':>11} {'NOPA':>8} {'INOPA':>8}"]
        for lv, a, b in zip(self.levels, self.nopa_offsets, self.inopa_offsets):
            lines.append(f"{lv:>11.3f} {a:>8.3f} {b:>8.3f}")
        return "\n".join(lines)


def _mean_log_curve(traces: Sequence[RunTrace], grid: np.ndarray):
    logs = np.array([[math.log(max(t.regret_at(g), 1e-300)) for g in grid] for t in traces])
    return np.log(grid), logs.mean(axis=0)


def budget_shift_experiment(M: int, solver: str = "fabian1", problem: str = "sphere-d2-z0",
                            schedule: Optional[PowerLawSchedule] = None, budget: int = 100_000,
                            reps: int = 20, seed: int = 0, n_levels: int = 5) -> ShiftReport:
    """Measure how far NOPA and INOPA over ``M`` copies lag behind one copy.

    The solo run gets ``budget`` evaluations and each portfolio gets
    ``M * budget``. Regret curves are averaged in log scale over ``reps``
    runs. Target levels run from the shallower of the two curves' values at
    1% of their budgets down to the deepest level both curves reach.
    """
    if M < 1:
        raise ContractViolation("M must be at least 1")
    schedule = schedule or PowerLawSchedule(4.2, 2.2, "pow:0.238095238095")
    factory = solver_from_key(solver)
    prob = problem_from_key(problem)
    solo_grid = np.array(geometric_checkpoints(budget, per_decade=20), dtype=float)
    port_grid = np.array(geometric_checkpoints(M * budget, per_decade=20), dtype=float)
    solo = [solo_run(factory, prob, RandomStream(seed, (rep,)), budget, solo_grid.astype(int))
            for rep in range(reps)]
    solo_curve = _mean_log_curve(solo, solo_grid)
    if M == 1:
        zeros = np.zeros(n_levels)
        levels = np.linspace(solo_curve[1][0], solo_curve[1].min(), n_levels)
        return ShiftReport(M, solver, problem, levels, zeros, zeros.copy(),
                           {"solo": solo_curve, "nopa": solo_curve, "inopa": solo_curve}, reps)
    curves = {"solo": solo_curve}
    for mode in ("nopa", "inopa"):
        traces = []
        for rep in range(reps):
            cfg = PortfolioConfig([factory] * M, schedule, mode=mode, total_budget=M * budget,
                                  checkpoints=port_grid.astype(int), label=mode)
            traces.append(run_portfolio(cfg, prob, RandomStream(seed, (rep,))))
        curves[mode] = _mean_log_curve(traces, port_grid)
    top = max(float(np.interp(math.log(budget / 100), *solo_curve)),
              float(np.interp(math.log(M * budget / 100), *curves["nopa"])),
              float(np.interp(math.log(M * budget / 100), *curves["inopa"])))
    bottom = max(float(monotone_curve(c[1])[-1]) for c in curves.values())
    levels = np.linspace(top, bottom, n_levels)
    return ShiftReport(M, solver, problem, levels,
                       matched_offsets(solo_curve, curves["nopa"], levels),
                       matched_offsets(solo_curve, curves["inopa"], levels),
                       curves, reps)
