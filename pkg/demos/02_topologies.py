"""Gossip matrices and their contraction constants.

Builds the mixing matrix for each supported topology, prints the second
largest singular value lambda (lower is better mixing), and tabulates the
two network constants that the step-size schedule consumes, as a function of
the communication period T0.
"""

import numpy as np

import depositum as dp


def main():
    specs = [
        ("complete(8)", dp.TopologySpec.complete(8)),
        ("ring(8)", dp.TopologySpec.ring(8)),
        ("star(8)", dp.TopologySpec.star(8)),
        ("path(4)", dp.TopologySpec.edge_list(4, [(0, 1), (1, 2), (2, 3)])),
    ]
    print("topology       weighting   lambda")
    for name, spec in specs:
        m = dp.build_mixing(spec)
        print(f"{name:<14} {spec.weighting:<11} {m.lam:.6f}")

    # rings mix slower as they grow
    print("\nring size ", " ".join(f"{n:>6d}" for n in (4, 8, 16, 32, 64)))
    lams = [dp.build_mixing(dp.TopologySpec.ring(n)).lam for n in (4, 8, 16, 32, 64)]
    print("lambda    ", " ".join(f"{v:6.3f}" for v in lams))

    # one gossip round preserves the network average and contracts disagreement
    rng = np.random.default_rng(7)
    m = dp.build_mixing(dp.TopologySpec.ring(8))
    x = rng.normal(size=(8, 3))
    mixed = dp.mix(m, x)
    drift = np.abs(mixed.mean(axis=0) - x.mean(axis=0)).max()
    before = np.linalg.norm(x - x.mean(axis=0))
    after = np.linalg.norm(mixed - mixed.mean(axis=0))
    print(f"\nmean drift after one mix: {drift:.2e}")
    print(f"disagreement {before:.3f} -> {after:.3f} (bound lambda * {before:.3f} = {m.lam * before:.3f})")

    # infrequent gossip weakens both constants, and it tightens the cap on
    # alpha * modulus that a weakly convex prox must respect; pushing drag to
    # half the cap erodes delta1 further
    lam = dp.build_mixing(dp.TopologySpec.ring(8)).lam
    print(f"\ncontraction constants at lambda = {lam:.3f}")
    print("T0       delta1       delta2   max a*rho   delta1 at half cap")
    for T0 in (1, 2, 5, 10):
        d1, d2 = dp.delta_params(lam, T0)
        cap = 1.0 - lam ** (1.0 / (2 * T0))
        d1w, _ = dp.delta_params(lam, T0, cap / 2)
        print(f"{T0:<4} {d1:>12.6f} {d2:>12.6f} {cap:>11.4f} {d1w:>20.6f}")

    # gossip fires every T0 iterations, never at t = 0
    T0 = 3
    flags = [dp.is_comm_round(t, T0) for t in range(9)]
    print(f"\ncomm rounds for T0 = {T0}:", " ".join("mix" if f else "---" for f in flags))


if __name__ == "__main__":
    main()
