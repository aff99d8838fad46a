"""Decentralized proximal stochastic gradient tracking with momentum.

Each client keeps five d-vectors: the iterate x, the tracked gradient y, the
momentum output nu, the lookahead buffer mu (only the lookahead option reads
it), and the last batch gradient g.  One iteration t does, in order:

  1. momentum:   heavy-ball   nu <- gamma nu + (1-gamma) y
                 lookahead    mu <- gamma mu + (1-gamma) y;  nu <- gamma mu + (1-gamma) y
                 none         nu <- y
  2. x update:   z = prox(h, alpha, x - alpha nu); gossip z when t is a
                 communication round, else keep it local
  3. fresh batch gradient g+ at the new x
  4. y update:   y <- y + beta (g+ - g), passed through the same gossip
                 matrix as step 2 on communication rounds

Initialization is x shared across clients and y = nu = mu = g = 0, which
yields the tracking identity mean(y) = beta * mean(g) at every iteration and
makes iteration 0 a no-op on x whenever gamma momentum starts from rest.

The baseline variant (plain decentralized prox-SGD) is identical except the
momentum consumes the raw batch gradient g instead of the tracked y, and y is
never updated; it exists to expose the heterogeneity drift that tracking
removes.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .regularizers import Regularizer, prox, weak_modulus, StepTooLarge
from .topology import MixingMatrix, delta_params, is_comm_round
from .seeding import rng_stream

MOMENTUM_OPTIONS = ("polyak", "nesterov", "none")


class BudgetTooSmall(ValueError):
    """Iteration budget below the schedule's admissibility threshold."""


@dataclass(frozen=True)
class HyperParams:
    alpha: float
    beta: float = 1.0
    gamma: float = 0.0
    T0: int = 1
    B: int = 1
    T: int = 100
    momentum: str = "polyak"

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if not self.beta > 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must be in [0, 1), got {self.gamma}")
        if self.T0 < 1:
            raise ValueError(f"T0 must be >= 1, got {self.T0}")
        if self.B < 1:
            raise ValueError(f"B must be >= 1, got {self.B}")
        if self.T < 0:
            raise ValueError(f"T must be >= 0, got {self.T}")
        if self.momentum not in MOMENTUM_OPTIONS:
            raise ValueError(f"momentum must be one of {MOMENTUM_OPTIONS}")


@dataclass
class SwarmState:
    """Stacked per-client state; every array is (n, d)."""

    x: np.ndarray
    y: np.ndarray
    nu: np.ndarray
    mu: np.ndarray
    g: np.ndarray
    t: int = 0

    @property
    def n(self) -> int:
        return self.x.shape[0]

    def client(self, i: int):
        return self.x[i], self.y[i], self.nu[i], self.mu[i], self.g[i]

    def tracking_residual(self, beta: float) -> float:
        """|| mean(y) - beta * mean(g) ||, which stays at rounding level."""
        return float(np.linalg.norm(self.y.mean(axis=0) - beta * self.g.mean(axis=0)))


@dataclass(frozen=True)
class StepLog:
    """What the metrics evaluator needs from one iteration.

    x_prev is the pre-update iterate x^t and nu_next the momentum nu^{t+1}
    produced inside the same iteration; the stationarity measure pairs them.
    """

    t: int
    communicated: bool
    x_prev: np.ndarray
    nu_next: np.ndarray


def init_state(n: int, d: int, x0: np.ndarray | None = None) -> SwarmState:
    """All clients start at the shared x0; y, nu, mu, g start at zero."""
    if n < 1 or d < 1:
        raise ValueError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    if x0 is None:
        x0 = np.zeros(d)
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (d,):
        raise ValueError(f"x0 must have shape ({d},), got {x0.shape}")
    zeros = lambda: np.zeros((n, d))
    return SwarmState(np.tile(x0, (n, 1)), zeros(), zeros(), zeros(), zeros(), 0)


def _momentum(source, nu, mu, gamma: float, option: str):
    if option == "polyak":
        return gamma * nu + (1.0 - gamma) * source, mu
    if option == "nesterov":
        mu_next = gamma * mu + (1.0 - gamma) * source
        return gamma * mu_next + (1.0 - gamma) * source, mu_next
    if option == "none":
        return source.copy(), mu
    raise ValueError(f"momentum must be one of {MOMENTUM_OPTIONS}")


def momentum_update(state: SwarmState, gamma: float, option: str):
    """(nu_next, mu_next) consuming the tracked gradients y."""
    if not 0.0 <= gamma < 1.0:
        raise ValueError(f"gamma must be in [0, 1), got {gamma}")
    return _momentum(state.y, state.nu, state.mu, gamma, option)


def _batch_gradients(problem, x_next: np.ndarray, hp: HyperParams, rng_factory, t_next: int):
    g = np.empty_like(x_next)
    for i in range(x_next.shape[0]):
        shard_n = problem.shards[i].n_samples
        rng = rng_factory(i, t_next)
        if hp.B >= shard_n:
            batch = np.arange(shard_n)
        else:
            batch = rng.choice(shard_n, size=hp.B, replace=False)
        _, g[i] = problem.loss_and_grad(x_next[i], batch, i, rng=rng)
    return g


def _iterate(state, hp, problem, w, regularizer, rng_factory, *, track: bool):
    source = state.y if track else state.g
    nu_next, mu_next = _momentum(source, state.nu, state.mu, hp.gamma, hp.momentum)
    z = prox(regularizer, hp.alpha, state.x - hp.alpha * nu_next)
    comm = is_comm_round(state.t, hp.T0)
    x_next = w.mix(z) if comm else z
    g_next = _batch_gradients(problem, x_next, hp, rng_factory, state.t + 1)
    if track:
        y_next = state.y + hp.beta * (g_next - state.g)
        if comm:
            y_next = w.mix(y_next)
    else:
        y_next = state.y
    log = StepLog(state.t, comm, state.x, nu_next)
    return SwarmState(x_next, y_next, nu_next, mu_next, g_next, state.t + 1), log


def step(state: SwarmState, hp: HyperParams, problem, w: MixingMatrix, regularizer: Regularizer, rng_factory):
    """One tracked iteration; rng_factory(client, t) supplies batch streams."""
    return _iterate(state, hp, problem, w, regularizer, rng_factory, track=True)


def baseline_prox_dsgd_step(state, hp, problem, w, regularizer, rng_factory):
    """One untracked iteration: momentum reads g, y stays untouched."""
    return _iterate(state, hp, problem, w, regularizer, rng_factory, track=False)


def _check_run_args(problem, w, hp, regularizer):
    if problem.n != w.n:
        raise ValueError(f"problem has {problem.n} clients but matrix has {w.n}")
    rho = weak_modulus(regularizer)
    if hp.alpha * rho >= 1.0:
        raise StepTooLarge(f"alpha * weak_modulus = {hp.alpha * rho} >= 1")


def run(
    problem,
    w: MixingMatrix,
    hp: HyperParams,
    regularizer: Regularizer,
    seed: int,
    *,
    x0: np.ndarray | None = None,
    eval_every: int = 1,
    test_set=None,
    variant: str = "depositum",
):
    """Full trajectory with metrics every eval_every iterations plus a final row.

    Row t reports the stationarity quantities s(x^t, mean nu^{t+1}) and the
    composite loss at the mean iterate; the final row probes the momentum one
    more time without stepping.  Identical (inputs, seed) give bit-identical
    traces.
    """
    from .metrics import Trace, evaluate_iteration

    if eval_every < 1:
        raise ValueError(f"eval_every must be >= 1, got {eval_every}")
    if variant not in ("depositum", "prox_dsgd"):
        raise ValueError(f"unknown variant {variant!r}")
    _check_run_args(problem, w, hp, regularizer)
    step_fn = step if variant == "depositum" else baseline_prox_dsgd_step
    L = problem.smoothness()
    state = init_state(problem.n, problem.dim, x0)
    rng_factory = lambda client, t: rng_stream(seed, client, t)
    records = []
    t_start = time.perf_counter()
    for _ in range(hp.T):
        y_t = state.y
        state_next, log = step_fn(state, hp, problem, w, regularizer, rng_factory)
        if log.t % eval_every == 0:
            records.append(
                evaluate_iteration(
                    problem, regularizer, hp.alpha, L,
                    log.x_prev, y_t, log.nu_next, log.t, test_set=test_set,
                )
            )
        state = state_next
    source = state.y if variant == "depositum" else state.g
    nu_probe, _ = _momentum(source, state.nu, state.mu, hp.gamma, hp.momentum)
    records.append(
        evaluate_iteration(
            problem, regularizer, hp.alpha, L,
            state.x, state.y, nu_probe, state.t, test_set=test_set,
        )
    )
    duration = time.perf_counter() - t_start
    return Trace(tuple(records), seed=seed, digest=None, duration=duration)


def linear_speedup_params(
    n: int,
    L: float,
    rho: float,
    T0: int,
    T: int,
    lam: float,
    momentum: str = "polyak",
) -> HyperParams:
    """Budget-driven schedule whose rate improves linearly with client count.

    alpha = sqrt(n) / (24 L sqrt(T+1)),  1 - gamma = sqrt(n) / sqrt(T+1),
    B = round(sqrt(n)), and beta^2 balances the contraction constants
    (delta1, delta2) of the gossip schedule; the lookahead option divides
    beta^2 by the amplification factor omega = (1 + 3 gamma)/(1 - gamma).
    Requires T + 1 >= max(4n/9, 4 n rho^2 / L^2, T0).
    """
    if momentum not in ("polyak", "nesterov"):
        raise ValueError("schedule is defined for 'polyak' or 'nesterov' momentum")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not L > 0:
        raise ValueError(f"L must be > 0, got {L}")
    if rho < 0:
        raise ValueError(f"rho must be >= 0, got {rho}")
    budget = T + 1
    need = max(4.0 * n / 9.0, 4.0 * n * rho**2 / L**2, float(T0))
    if budget < need:
        raise BudgetTooSmall(f"T + 1 = {budget} below required {need}")
    root_n = math.sqrt(n)
    root_budget = math.sqrt(budget)
    alpha = root_n / (24.0 * L * root_budget)
    gamma = 1.0 - root_n / root_budget
    B = max(1, round(root_n))
    d1, d2 = delta_params(lam, T0, alpha * rho)
    base = (1584.0 * d1 + 1077.0 * T0) * math.sqrt(T0 * budget) + 75.0 * T0**2
    if momentum == "nesterov":
        omega = (1.0 + 3.0 * gamma) / (1.0 - gamma)
        beta_sq = 3200.0 * d1 * d2 / (omega * base)
    else:
        beta_sq = 3200.0 * d1 * d2 / base
    return HyperParams(
        alpha=alpha, beta=math.sqrt(beta_sq), gamma=gamma,
        T0=T0, B=B, T=T, momentum=momentum,
    )
