"""Shared oracles and builders for the test suite."""

from __future__ import annotations

import numpy as np

import depositum as dp
from depositum.regularizers import h_pointwise

GRID_RES = 1e-4


def grid_prox(spec, alpha: float, x: float, res: float = GRID_RES) -> float:
    """Brute-force 1-D prox by grid minimization; the ground-truth oracle."""
    lo, hi = -abs(x) - 1.0, abs(x) + 1.0
    if isinstance(spec, dp.Box):
        lo, hi = min(lo, spec.lo - 1.0), max(hi, spec.hi + 1.0)
    z = np.arange(lo, hi + res, res)
    vals = h_pointwise(spec, z) + (z - x) ** 2 / (2.0 * alpha)
    return float(z[int(np.argmin(vals))])


def random_regularizer(rng, kind: int):
    """One of the four nontrivial penalties plus a step with alpha*rho < 1."""
    if kind == 0:
        spec = dp.L1(rng.uniform(0.0, 2.0))
    elif kind == 1:
        spec = dp.MCP(rng.uniform(0.1, 2.0), rng.uniform(0.5, 4.0))
    elif kind == 2:
        spec = dp.SCAD(rng.uniform(0.1, 2.0), rng.uniform(2.1, 5.0))
    else:
        lo = rng.uniform(-2.0, 0.0)
        spec = dp.Box(lo, lo + rng.uniform(0.1, 3.0))
    rho = dp.weak_modulus(spec)
    alpha = rng.uniform(0.05, 0.95) / rho if rho > 0 else rng.uniform(0.05, 2.0)
    return spec, alpha


def logistic_problem(
    d=10,
    n_samples=400,
    n_clients=4,
    separation=2.5,
    data_seed=0,
    part_seed=1,
    theta=None,
    noise_std=None,
):
    data = dp.synth_logistic(d, n_samples, separation, np.random.default_rng(data_seed))
    rng = np.random.default_rng(part_seed)
    if theta is None:
        part = dp.iid_partition(n_samples, n_clients, rng)
    else:
        part = dp.dirichlet_partition(data.labels, n_clients, theta, rng)
    return dp.make_problem("logistic", data, part, noise_std=noise_std)


def single_shard(dataset, kind="logistic", hidden=None, noise_std=None):
    part = dp.Partition((np.arange(dataset.n_samples, dtype=np.int64),), 1, None)
    return dp.make_problem(kind, dataset, part, hidden=hidden, noise_std=noise_std)


def drive(state, hp, problem, w, reg, seed, n_steps, step_fn=None):
    """Run n_steps, returning the state list [s^0 .. s^n] and step logs."""
    from depositum.optimizer import step
    from depositum.seeding import rng_stream

    step_fn = step_fn or step
    fac = lambda c, t: rng_stream(seed, c, t)
    states, logs = [state], []
    for _ in range(n_steps):
        state, log = step_fn(state, hp, problem, w, reg, fac)
        states.append(state)
        logs.append(log)
    return states, logs
