"""A 3-factor w whose Simes line is never crossed: rejections die out as m grows.

    python scripts/degenerate_decay.py --out runs/degenerate
"""

import numpy as np

from fdpburst import ExperimentConfig, LoadingGroups, NonnullSchedule, analyze, simulate

from _common import dump, parser

LOADINGS = 1.3 * np.array([[0.6, 0.2, 0.1], [0.1, 0.6, 0.2], [0.2, 0.1, 0.6]])
WEIGHTS = np.array([0.4, 0.3, 0.3])


def main():
    args = parser(__doc__, reps=1000).parse_args()
    base = ExperimentConfig(m=1000, schedule=NonnullSchedule.fixed(0.1), mu_a=2.0, q=0.1,
                            loadings=LoadingGroups(WEIGHTS, LOADINGS), w=[-0.05] * 3,
                            replicates=args.reps, seed=args.seed)
    print("regime:", analyze(base).regime)
    report = []
    for m in (1_000, 10_000, 100_000):
        o = simulate(base.replace(m=m))
        row = {"m": m, "mean_v_over_m": float(o.fpr.mean()), "any_rejection": float(np.mean(o.r >= 1)),
               "mean_tau_bh": float(o.tau_bh.mean())}
        report.append(row)
        print(f"m={m:>7d}  mean V/m {row['mean_v_over_m']:.3e}  any rejection {row['any_rejection']:.3%}")
    dump(args.out, "degenerate_decay.json", report)


if __name__ == "__main__":
    main()
