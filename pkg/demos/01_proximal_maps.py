"""Closed-form proximal maps for every built-in penalty.

Prints prox_{alpha h}(x) on a grid of scalar inputs so the three regimes of
the folded-concave penalties are visible: soft thresholding near zero, a
shrinkage band, and identity past the knee. Ends with the step-size guard
that keeps each subproblem strongly convex.
"""

import numpy as np

import depositum as dp

alpha = 0.5
grid = np.linspace(-3.0, 3.0, 13)

penalties = [
    ("zero", dp.Zero()),
    ("l1(1)", dp.L1(1.0)),
    ("mcp(1,2)", dp.MCP(1.0, 2.0)),
    ("scad(1,3.7)", dp.SCAD(1.0, 3.7)),
    ("box[-1,1]", dp.Box(-1.0, 1.0)),
]

print(f"prox_(alpha h) at alpha = {alpha}")
print(f"{'x':>12} " + " ".join(f"{x:>7.2f}" for x in grid))
for name, spec in penalties:
    vals = dp.prox(spec, alpha, grid)
    print(f"{name:>12} " + " ".join(f"{v:>7.3f}" for v in vals))

# the penalty value itself, to see where MCP and SCAD go flat
print()
print(f"{'h(x)':>12} " + " ".join(f"{x:>7.2f}" for x in grid))
for name, spec in penalties[1:4]:
    vals = dp.h_pointwise(spec, grid)
    print(f"{name:>12} " + " ".join(f"{v:>7.3f}" for v in vals))

# weakly convex penalties cap the usable step size: alpha * modulus < 1
print()
for name, spec in penalties:
    rho = dp.weak_modulus(spec)
    cap = "none" if rho == 0.0 else f"alpha < {1.0 / rho:g}"
    print(f"{name:>12}  weak modulus {rho:.3f}  step cap {cap}")

try:
    dp.prox(dp.MCP(1.0, 2.0), 2.0, grid)
except dp.StepTooLarge as e:
    print(f"\nprox at alpha = 2.0 rejected: {e}")
