"""Auto-tuned schedules and the payoff from adding clients.

For growing swarm sizes on a complete graph, derives the step size, momentum
and batch size from the smoothness constant and the iteration budget alone,
then runs the same workload and compares where the stationarity measure
lands. More clients with the same per-client budget should not do worse.
"""

import numpy as np

import depositum as dp


def main():
    T = 399
    T0 = 10
    reg = dp.L1(1e-4)
    data = dp.synth_logistic(d=20, n_samples=2400, separation=3.0, rng=np.random.default_rng(9))

    print("n    alpha      gamma    B    beta      final loss")
    for n in (1, 4, 9, 16):
        part = dp.dirichlet_partition(data.labels, n, 1.0, np.random.default_rng(4))
        problem = dp.make_problem("logistic", data, part)
        if n == 1:
            w = dp.MixingMatrix.trivial()
        else:
            w = dp.build_mixing(dp.TopologySpec.complete(n))
        L = dp.estimate_L(problem)

        hp = dp.linear_speedup_params(n, L, rho=0.0, T0=T0, T=T, lam=w.lam)
        trace = dp.run(problem, w, hp, reg, seed=1, eval_every=10)
        print(
            f"{n:<4} {hp.alpha:<10.5f} {hp.gamma:<8.4f} {hp.B:<4} {hp.beta:<9.5f}"
            f" {trace.final().loss:>10.4f}"
        )

    # the derived step sizes scale with sqrt(n) and the budget must cover
    # the swarm: too few iterations for the size is rejected up front
    try:
        dp.linear_speedup_params(100, 1.0, rho=0.0, T0=1, T=20, lam=0.0)
    except dp.BudgetTooSmall as e:
        print(f"\nn = 100 with T = 20 rejected: {e}")


if __name__ == "__main__":
    main()
