"""Noisy black-box optimisation: three solvers and lag-based portfolios.

The usual entry points:

>>> from noisy_portfolio import make_sphere, solver_from_key, RandomStream
>>> problem = make_sphere(2, z=0)
>>> solver = solver_from_key("fabian1")(problem, RandomStream(seed=1))
>>> solver.advance(10_000)
10000
"""

from .core import (
    ContractViolation,
    EvaluationCounter,
    InstrumentedProblem,
    NoisyProblem,
    NonFiniteFitnessError,
    RandomStream,
    SolverDriver,
    evaluate,
    resampled_mean,
)
from .metrics import (
    RunTrace,
    SlopeReport,
    SolverProfile,
    classify_solvers,
    delta_gap,
    simple_regret,
    slope,
)
from .portfolio import (
    PortfolioConfig,
    PowerLawSchedule,
    Schedule,
    SelectionRecord,
    inopa_run,
    nopa_coarse_run,
    nopa_run,
    run_portfolio,
    schedule_validity,
    select,
    theoretical_budget,
)
from .problems import (
    ActuatorNoiseProblem,
    CallableProblem,
    RegretLineProblem,
    SphereProblem,
    SyntheticRegretSolver,
    make_sphere,
    problem_from_key,
    synthetic_regret_value,
)
from .solvers import (
    FABIAN1,
    FABIAN2,
    NEWTON,
    RSAES,
    Fabian,
    FabianConfig,
    Newton,
    NewtonConfig,
    RsaesConfig,
    solver_from_key,
)

__version__ = "0.1.0"

__all__ = [
    "ContractViolation",
    "EvaluationCounter",
    "InstrumentedProblem",
    "NoisyProblem",
    "NonFiniteFitnessError",
    "RandomStream",
    "SolverDriver",
    "evaluate",
    "resampled_mean",
    "RunTrace",
    "SlopeReport",
    "SolverProfile",
    "classify_solvers",
    "delta_gap",
    "simple_regret",
    "slope",
    "PortfolioConfig",
    "PowerLawSchedule",
    "Schedule",
    "SelectionRecord",
    "inopa_run",
    "nopa_coarse_run",
    "nopa_run",
    "run_portfolio",
    "schedule_validity",
    "select",
    "theoretical_budget",
    "ActuatorNoiseProblem",
    "CallableProblem",
    "RegretLineProblem",
    "SphereProblem",
    "SyntheticRegretSolver",
    "make_sphere",
    "problem_from_key",
    "synthetic_regret_value",
    "FABIAN1",
    "FABIAN2",
    "NEWTON",
    "RSAES",
    "Fabian",
    "FabianConfig",
    "Newton",
    "NewtonConfig",
    "RsaesConfig",
    "solver_from_key",
]
