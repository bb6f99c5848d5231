"""Tour of the four cost predictors on the bundled scenarios.

For each decision we predict the out-of-sample cost from the same sample
counts four ways: the plug-in average, a worst-case over all scenarios,
a KL-ball worst case at a few radii, and the variance-penalized average.
The plug-in and worst-case values bracket everything in between.
"""
from pathlib import Path

import numpy as np

from ddlab import (
    CustomTable,
    EmpiricalDistribution,
    load_scenario,
    predict_kl_dual,
    predict_robust,
    predict_saa,
    predict_svp,
)

ROOT = Path(__file__).resolve().parents[1]


def tour(name, counts, ratio):
    problem = load_scenario(str(ROOT / "scenarios" / name))
    T = int(sum(counts))
    emp = EmpiricalDistribution(counts, T)
    p = emp.distribution
    schedule = CustomTable(((T, ratio * T),))
    radii = (0.02, 0.1, 0.5)

    print("=== %s  (T=%d, counts=%s, penalty ratio a_T/T=%g)" % (name, T, list(counts), ratio))
    header = "%-8s %9s" % ("decision", "plug-in")
    header += "".join(" %9s" % ("kl r=%g" % r) for r in radii)
    header += " %9s %9s" % ("svp", "worstcase")
    print(header)
    for x in range(problem.loss.n_decisions):
        label = problem.loss.decision_labels[x]
        cells = ["%-8s" % label, "%9.4f" % predict_saa(problem, x, emp).value]
        for r in radii:
            cells.append("%9.4f" % predict_kl_dual(problem, x, p, r).value)
        svp = predict_svp(problem, x, emp, schedule)
        cells.append("%9.4f" % svp.value)
        cells.append("%9.4f" % predict_robust(problem, x).value)
        print(" ".join(cells))

    # the KL worst case is an explicit reweighting of the sample
    x = problem.loss.n_decisions - 1
    res = predict_kl_dual(problem, x, p, 0.1)
    print("worst-case reweighting for %s at r=0.1: %s"
          % (problem.loss.decision_labels[x],
             np.round(res.worst_case.weights, 4).tolist()))
    print()


def main():
    tour("coin.json", (12, 8), 0.02)
    tour("newsvendor.json", (5, 7, 6, 2), 0.05)


if __name__ == "__main__":
    main()
