"""
Checking a schedule
===================

The comparison schedule must resample enough for the selection errors to
be summable, while keeping comparisons a vanishing share of the budget.
"""

from noisy_portfolio import PowerLawSchedule, schedule_validity, theoretical_budget

for a, b, lag in [(4.2, 2.2, "pow:1/4.2"), (5, 2, "log"), (5, 2, "none"), (6, 3.5, "pow:0.1")]:
    schedule = PowerLawSchedule(a, b, lag)
    print(schedule_validity(schedule, alpha_star=1.0))
    fair = theoretical_budget("nopa", 4, 4, schedule, 10)
    lazy = theoretical_budget("inopa", 4, 1, schedule, 10)
    print(f"  budget at n=10 with 4 members: fair {fair}, lazy {lazy} ({lazy / fair:.2f} of fair)\n")
