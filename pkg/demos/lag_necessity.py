"""
Why compare old recommendations
===============================

Two synthetic solvers: the better one has regret ``m**-0.75``, the worse
``m**-0.5``. Compared at their current recommendations with ``s_n = r_n``
resamplings, the gap shrinks as fast as the noise and the portfolio keeps
choosing the worse solver. Comparing the recommendations they made after
``lag(r_n)`` evaluations keeps the gap wide.
"""

from noisy_portfolio.harness import lag_necessity_experiment

for lag in (None, "pow:0.25", "log"):
    report = lag_necessity_experiment(e=0.25, beta=1.0, n_max=200, reps=50, lag=lag, seed=0)
    print(report)

###############################################################################
# Without a lag the per-n misranking probability has a closed form; the
# empirical frequencies track it.

report = lag_necessity_experiment(e=0.25, beta=1.0, n_max=200, reps=50, seed=1)
for n, emp, exact in list(zip(report.n, report.empirical, report.exact))[::38]:
    print(f"n={n:>3}  empirical {emp:.2f}  exact {exact:.3f}")
