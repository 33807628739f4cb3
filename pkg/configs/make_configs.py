"""Regenerate the experiment configs in this directory.

Run from the repository root: ``python configs/make_configs.py``.
Budgets are 1e5 evaluations per solver in dimension 2 and 3e5 in dimension 15.
"""

from pathlib import Path

HERE = Path(__file__).resolve().parent
LAG = "pow:1/4.2"
MAIN = ["rsaes", "fabian1", "fabian2", "newton"]
VARIANTS = ["fabian1", "fabian{0.1,5,100}", "fabian{0.1,1,200}", "fabian{0.1,1,1}", "fabian{0.1,1,10}"]
PORTFOLIOS = [
    # row name, mode, sharing, lag
    ("nopa-nl", "nopa", False, "none"),
    ("nopa-s-nl", "nopa-coarse", True, "none"),
    ("nopa", "nopa", False, LAG),
    ("nopa-s", "nopa-coarse", True, LAG),
    ("inopa", "inopa", False, LAG),
    ("inopa-s", "inopa", True, LAG),
]


def write(name, **fields):
    lines = [f"{k} = {v}" for k, v in fields.items()]
    (HERE / f"{name}.cfg").write_text("\n".join(lines) + "\n")


def main():
    for d, per_solver in ((2, "1e5"), (15, "3e5")):
        for z in (0, 1, 2):
            problem = f"sphere-d{d}-z{z}"
            for key in MAIN:
                label = f"sphere-d{d}-z{z}-{key}"
                write(label, label=label, problem=problem, solvers=key, mode="solo",
                      budget=per_solver, repetitions=50, seed=2015)
            for prefix, members in (("sphere", MAIN), ("variants", VARIANTS)):
                total = int(len(members) * float(per_solver))
                for row, mode, sharing, lag in PORTFOLIOS:
                    label = f"{prefix}-d{d}-z{z}-{row}"
                    write(label, label=label, problem=problem, solvers=", ".join(members),
                          mode=mode, schedule=f"a=4.2, b=2.2, lag={lag}",
                          sharing=str(sharing).lower(), budget=total, repetitions=50, seed=2015)


if __name__ == "__main__":
    main()
