"""
Fair and lazy portfolios
========================

Runs NOPA (every member gets the same budget) and INOPA (only the member
currently selected runs ahead) over the four solvers, and prints how the
budget was split.
"""

from noisy_portfolio import (
    PortfolioConfig,
    PowerLawSchedule,
    RandomStream,
    make_sphere,
    run_portfolio,
    slope,
    solver_from_key,
)

###############################################################################
# Comparisons happen at ``r_n = ceil(n**4.2)`` evaluations with
# ``s_n = ceil(n**2.2)`` resamplings, on the recommendations each member made
# after ``lag(r_n) = ceil(r_n**(1/4.2))`` evaluations.

schedule = PowerLawSchedule(4.2, 2.2, "pow:1/4.2")
keys = ["rsaes", "fabian1", "fabian2", "newton"]
members = [solver_from_key(k) for k in keys]
problem = make_sphere(2, z=0)

for mode in ("nopa", "inopa", "nopa-coarse"):
    config = PortfolioConfig(members, schedule, mode=mode, total_budget=200_000)
    trace = run_portfolio(config, problem, RandomStream(seed=3))
    last = trace.selections[-1]
    report = slope(trace)
    split = ", ".join(f"{k} {c}" for k, c in zip(keys, trace.final.per_solver))
    print(f"{mode:<12} slope {report.endpoint:+.3f}  selections {len(trace.selections)}  "
          f"last choice {keys[last.chosen] if last.chosen is not None else '-'}")
    print(f"{'':<12} evaluations: {split}, comparisons {trace.final.comparison}")
