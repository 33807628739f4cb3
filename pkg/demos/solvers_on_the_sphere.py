"""
Three noisy solvers on the sphere
=================================

Runs RSAES, the two Fabian parametrisations and the Newton method on
``f(x) = ||x||^2 + ||x||^z N`` in dimension 2 and prints the endpoint
slope ``log(regret) / log(evaluations)`` averaged over a few seeds.
"""

import numpy as np

from noisy_portfolio import RandomStream, make_sphere, slope, solver_from_key
from noisy_portfolio.harness import solo_run

BUDGET = 30_000
REPS = 5

###############################################################################
# A solver is built from a key and a random stream. ``advance`` spends an
# exact number of evaluations, even in the middle of an iteration.

problem = make_sphere(2, z=0)
solver = solver_from_key("fabian1")(problem, RandomStream(seed=0))
solver.advance(1000)
print("fabian1 after 1000 evaluations:", solver.recommendation, "iterations", solver.iterations)

###############################################################################
# ``solo_run`` records the regret on a log-spaced grid; ``slope`` reads off
# the endpoint and regression slopes.

for z in (0, 2):
    problem = make_sphere(2, z)
    print(f"\nz = {z}")
    for key in ("rsaes", "fabian1", "fabian2", "newton"):
        ends = []
        for rep in range(REPS):
            trace = solo_run(solver_from_key(key), problem, RandomStream(1, (rep,)), BUDGET)
            ends.append(slope(trace).endpoint)
        print(f"  {key:<8} endpoint slope {np.nanmean(ends):+.3f}")
