"""Convergence instrumentation for decentralized composite runs.

The per-iteration stationarity measure combines three squared norms: the
proximal gradient map at each client's iterate (computed with the full global
gradient evaluated there), the consensus error L^2 ||x_i - mean x||^2, and the
gradient-estimation error n ||mean_i grad f_i(x_i) - mean nu||^2.  It pairs
the pre-update iterate x^t with the momentum nu^{t+1} produced in the same
iteration.  All terms use exact shard gradients, never minibatches.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .regularizers import Regularizer, eval_h, prox_grad_map

CSV_COLUMNS = (
    "t",
    "loss",
    "prox_grad_sq",
    "cons_x_sq",
    "cons_y_sq",
    "cons_nu_sq",
    "grad_est_sq",
    "s_over_n",
    "accuracy",
)

# 5% value change per tenfold increase of t counts as flat
PLATEAU_SLOPE = math.log10(1.05)


class TooFewPoints(ValueError):
    """Decay fits need at least 10 positive-t points."""


@dataclass(frozen=True)
class MetricsRecord:
    t: int
    loss: float
    prox_grad_sq: float
    cons_x_sq: float
    cons_y_sq: float
    cons_nu_sq: float
    grad_est_sq: float
    s_over_n: float
    accuracy: float | None = None

    def csv_row(self) -> str:
        cells = [str(self.t)]
        for name in CSV_COLUMNS[1:-1]:
            cells.append(repr(getattr(self, name)))
        cells.append("" if self.accuracy is None else repr(self.accuracy))
        return ",".join(cells)


@dataclass(frozen=True)
class Trace:
    records: tuple
    seed: int
    digest: str | None
    duration: float

    def to_csv(self) -> str:
        lines = [",".join(CSV_COLUMNS)]
        lines.extend(r.csv_row() for r in self.records)
        return "\n".join(lines) + "\n"

    def final(self) -> MetricsRecord:
        return self.records[-1]


def _sq(a: np.ndarray) -> float:
    return float((a * a).sum())


def stationarity_measure(x, nu_bar, alpha: float, L: float, problem, regularizer: Regularizer) -> dict:
    """Terms of s(x, nu_bar) from stacked iterates x of shape (n, dim).

    problem must expose n, full_grad_multi(points, client); the global
    gradient at every client's iterate is the shard average of those.
    """
    x = np.asarray(x, dtype=float)
    nu_bar = np.asarray(nu_bar, dtype=float)
    n = x.shape[0]
    shard_grads = np.stack([problem.full_grad_multi(x, j) for j in range(problem.n)])
    global_at = shard_grads.mean(axis=0)  # (n, dim): grad f at each x_i
    local = shard_grads[np.arange(n), np.arange(n)]  # grad f_i at x_i
    gmap = prox_grad_map(regularizer, alpha, x, global_at)
    prox_grad_sq = _sq(gmap)
    cons_x_sq = _sq(x - x.mean(axis=0))
    grad_est_sq = n * _sq(local.mean(axis=0) - nu_bar)
    s = prox_grad_sq + L * L * cons_x_sq + grad_est_sq
    return {
        "prox_grad_sq": prox_grad_sq,
        "cons_x_sq": cons_x_sq,
        "grad_est_sq": grad_est_sq,
        "s_over_n": s / n,
    }


def evaluate_iteration(
    problem,
    regularizer: Regularizer,
    alpha: float,
    L: float,
    x: np.ndarray,
    y: np.ndarray,
    nu_next: np.ndarray,
    t: int,
    test_set=None,
) -> MetricsRecord:
    """Assemble one trace row from the iteration-t snapshots."""
    terms = stationarity_measure(x, nu_next.mean(axis=0), alpha, L, problem, regularizer)
    x_bar = x.mean(axis=0)
    loss = problem.mean_loss(x_bar) + eval_h(regularizer, x_bar)
    accuracy = None
    if test_set is not None:
        pred = problem.predict(x_bar, test_set.features)
        accuracy = float(np.mean(pred == test_set.labels))
    return MetricsRecord(
        t=t,
        loss=float(loss),
        prox_grad_sq=terms["prox_grad_sq"],
        cons_x_sq=terms["cons_x_sq"],
        cons_y_sq=_sq(y - y.mean(axis=0)),
        cons_nu_sq=_sq(nu_next - nu_next.mean(axis=0)),
        grad_est_sq=terms["grad_est_sq"],
        s_over_n=terms["s_over_n"],
        accuracy=accuracy,
    )


def running_average(series) -> list[tuple[int, float]]:
    """(t, mean of values up to and including t) for a (t, value) series."""
    out = []
    total = 0.0
    for k, (t, v) in enumerate(series, start=1):
        total += v
        out.append((t, total / k))
    return out


def fit_decay_rate(series, window: float = 1.0) -> float:
    """Log-log slope of a decaying positive series over its pre-plateau part.

    series is (t, value) pairs; points with t <= 0 are dropped.  The plateau
    is the longest suffix whose secant slope to the last point stays within
    5% value change per decade of t; a fully flat series returns 0.0.  window
    in (0, 1] caps the fit to the first fraction of the points.
    """
    pts = [(float(t), float(v)) for t, v in series if t > 0]
    if len(pts) < 10:
        raise TooFewPoints(f"need >= 10 points with t > 0, got {len(pts)}")
    if any(v <= 0 for _, v in pts):
        raise ValueError("decay fit needs strictly positive values")
    if not 0.0 < window <= 1.0:
        raise ValueError(f"window must be in (0, 1], got {window}")
    logt = np.log10([t for t, _ in pts])
    logv = np.log10([v for _, v in pts])
    m = len(pts)
    start = m - 1  # plateau start; last point is trivially in the plateau
    for j in range(m - 2, -1, -1):
        dt = logt[-1] - logt[j]
        if dt <= 0:
            break
        if abs(logv[-1] - logv[j]) <= PLATEAU_SLOPE * dt:
            start = j
        else:
            break
    if start == 0:
        return 0.0  # entirely flat
    cut = min(start, max(2, math.ceil(window * m)))
    if cut < 2:
        return 0.0
    slope = np.polyfit(logt[:cut], logv[:cut], 1)[0]
    return float(slope)
