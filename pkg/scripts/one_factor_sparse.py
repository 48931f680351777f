"""One equicorrelated factor with block noise: dense nonnulls (FDP CLT) and
sparse nonnulls pi1 = 5 m^(-2/3) (FDP near 1, V/m CLT).

    python scripts/one_factor_sparse.py --reps 10000 --out runs/one_factor
"""

import math

import numpy as np

from fdpburst import ExperimentConfig, LoadingGroups, NoiseSpec, NonnullSchedule, run_experiment

from _common import dump, parser, write_hist


def config(m, schedule, reps, seed):
    return ExperimentConfig(m=m, schedule=schedule, mu_a=2.0, q=0.1,
                            loadings=LoadingGroups.single([math.sqrt(0.3)]),
                            noise=NoiseSpec.block(20, 0.6), w=[2.5], replicates=reps, seed=seed)


def main():
    p = parser(__doc__, reps=10_000)
    p.add_argument("--m-dense", type=int, default=10_000)
    p.add_argument("--m-sparse", type=int, default=100_000)
    args = p.parse_args()

    dense = run_experiment(config(args.m_dense, NonnullSchedule.fixed(0.1), args.reps, args.seed))
    cmp = dense.comparison["fdp"]
    print(f"dense : mean FDP {dense.summary['fdp_mean']:.5f} (limit {cmp['limit']:.5f})  "
          f"var ratio {cmp['var_ratio']:.3f}")
    write_hist(args.out, "hist_dense_fdp.csv",
               math.sqrt(args.m_dense) * (dense.outcomes.fdp - cmp["limit"]), cmp["predicted_var"])

    m = args.m_sparse
    sparse = run_experiment(config(m, NonnullSchedule.power_law(5.0, 2 / 3), args.reps, args.seed))
    a = sparse.asymptotic
    vm = sparse.outcomes.v / m
    ratio = vm.var(ddof=1) / (a.sigma_R_sq / m)
    print(f"sparse: median FDP {np.median(sparse.outcomes.fdp):.4f}  "
          f"P(FDP < 0.5) {np.mean(sparse.outcomes.fdp < 0.5):.4%}  "
          f"mean V/m {vm.mean():.5f} (limit {a.tau_star / 0.1:.5f})  var ratio {ratio:.3f}")
    write_hist(args.out, "hist_sparse_vm.csv", math.sqrt(m) * (vm - a.tau_star / 0.1), a.sigma_R_sq)
    dump(args.out, "one_factor_sparse.json", {
        "dense": {"summary": dense.summary, "fdp": cmp},
        "sparse": {"summary": sparse.summary, "asymptotic": a.to_dict(), "v_over_m_var_ratio": ratio},
    })


if __name__ == "__main__":
    main()
