"""How often is a prediction too optimistic, and how fast does that fade?

A prediction "disappoints" when the true expected cost exceeds it.  With a
finite scenario set the probability of that event is a finite sum over the
lattice of empirical frequencies, so we can compute it exactly, watch its
exponential decay rate in T, and cross-check the rare-event estimators.
"""
import math
from pathlib import Path

import numpy as np

from ddlab import (
    Distribution,
    ExponentialRate,
    LossMatrix,
    Mode,
    PowerLaw,
    PredictorSpec,
    Problem,
    disappointment_exact,
    disappointment_importance,
    importance_shift,
    load_scenario,
    rate_curve,
    theoretical_rate_saa,
)

ROOT = Path(__file__).resolve().parents[1]
T_GRID = (25, 50, 100, 200, 500)


def main():
    problem = load_scenario(str(ROOT / "scenarios" / "coin.json"))
    p = problem.true_dist
    mode = Mode.prediction(1)  # the risky decision: loss 0 or 1

    specs = [
        ("saa", PredictorSpec("saa"), ExponentialRate(0.1)),
        ("svp, a=sqrt(T)", PredictorSpec("svp"), PowerLaw(1.0, 0.5)),
        ("kl, a=0.1T", PredictorSpec("kl"), ExponentialRate(0.1)),
        ("robust", PredictorSpec("robust"), ExponentialRate(0.1)),
    ]

    print("exact disappointment probability, risky coin decision")
    print("%-16s" % "predictor" + "".join("%12s" % ("T=%d" % T) for T in T_GRID))
    for name, spec, sched in specs:
        cells = []
        for T in T_GRID:
            rep = disappointment_exact(problem, spec, mode, p, T, sched)
            cells.append("%12.3e" % rep.probability)
        print("%-16s" % name + "".join(cells))
    print()

    print("decay rate log(p_T)/a_T  (stays <= -1 exactly when the guarantee bites)")
    for name, spec, sched in specs:
        curve = rate_curve(problem, spec, mode, p, sched, T_GRID)
        cells = "".join("%12s" % ("%.4f" % r if math.isfinite(r) else "-inf")
                        for _, r in curve)
        print("%-16s" % name + cells)
    print()

    # plain averages disappoint half the time, but with a prescription gap
    # the event becomes rare and its rate matches the tilted-mean bound
    gapped = Problem(
        LossMatrix(np.array([[0.25, 0.25], [0.0, 1.0]])), Distribution((0.5, 0.5))
    )
    rep = disappointment_exact(
        gapped, PredictorSpec("saa"), Mode.prescription(), gapped.true_dist,
        500, ExponentialRate(1.0),
    )
    measured = -rep.log_probability / 500
    predicted = theoretical_rate_saa(gapped, 1, gapped.true_dist, m=0.25)
    print("plug-in prescription on a gapped pair: p_500 = %.3e" % rep.probability)
    print("measured decay %.5f vs tilted-mean bound %.5f" % (measured, predicted))
    print()

    # deep in the tail, exact enumeration is the referee for the estimators
    spec, sched = PredictorSpec("svp"), PowerLaw(1.0, 0.5)
    T = 200
    exact = disappointment_exact(problem, spec, mode, p, T, sched)
    shift = importance_shift(problem, mode, p, sched.a(T) / T)
    est = disappointment_importance(
        problem, spec, mode, p, T, sched, shift, 200_000, seed=7
    )
    print("tail check at T=200: exact %.6e" % exact.probability)
    print("importance sampling  %.6e +- %.1e (ESS %.0f, shift %s)"
          % (est.probability, est.method.std_err, est.method.ess,
             np.round(shift.weights, 4).tolist()))


if __name__ == "__main__":
    main()
