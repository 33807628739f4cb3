"""
The price of running M copies
=============================

Four identical copies of Fabian1 in a fair portfolio need about four
times the evaluations of one copy to reach the same regret: the regret
curve is shifted by ``log 4`` in log-evaluations. The lazy portfolio pays
less. A small run; the acceptance suite uses 40 repetitions.
"""

import math

from noisy_portfolio import PowerLawSchedule
from noisy_portfolio.harness import budget_shift_experiment

schedule = PowerLawSchedule(4.2, 2.2, "pow:1/4.2")
report = budget_shift_experiment(4, "fabian1", "sphere-d2-z0", schedule, budget=30_000, reps=8, seed=0)
print(report)
print(f"log 4 = {math.log(4):.3f}")
