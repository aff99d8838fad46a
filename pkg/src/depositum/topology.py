"""Communication graphs, gossip matrices, and their contraction constants.

A mixing matrix W is symmetric, doubly stochastic, and supported on the graph
(w_ij > 0 only for edges and the diagonal).  Its contraction factor is

    lambda = || W - (1/n) 1 1^T ||_2 = max(|eig_2|, |eig_n|)  in  [0, 1),

which is 0 exactly when W averages in one shot (complete graph) and creeps
toward 1 as the graph gets poorly connected.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

STOCHASTIC_TOL = 1e-9
# eigensolver noise floor; a contraction factor below this is treated as 0
LAMBDA_SNAP = 1e-12


class DisconnectedGraph(ValueError):
    """The graph does not connect all nodes."""


class NonDoublyStochastic(ValueError):
    """Uniform weighting requested on a graph where it is not doubly stochastic."""


class NotStochastic(ValueError):
    """Row or column sums deviate from 1 beyond tolerance."""


class DimensionMismatch(ValueError):
    """Stacked array's leading dimension does not match the matrix size."""


class InadmissibleStep(ValueError):
    """alpha * rho falls outside [0, 1 - lambda^(1/(2 T0)))."""


def _normalize_edges(n: int, edges) -> frozenset[tuple[int, int]]:
    out = set()
    for i, j in edges:
        i, j = int(i), int(j)
        if i == j:
            raise ValueError(f"self-loop ({i}, {j}) not allowed")
        if not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"edge ({i}, {j}) out of range for n={n}")
        out.add((min(i, j), max(i, j)))
    return frozenset(out)


@dataclass(frozen=True)
class TopologySpec:
    """Named graph family plus a weighting rule ('uniform' or 'metropolis')."""

    kind: str
    n: int
    weighting: str = "metropolis"
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"topology needs n >= 2, got n={self.n}")
        if self.kind not in ("complete", "ring", "star", "edgelist"):
            raise ValueError(f"unknown topology kind {self.kind!r}")
        if self.weighting not in ("uniform", "metropolis"):
            raise ValueError(f"unknown weighting {self.weighting!r}")

    @staticmethod
    def complete(n: int, weighting: str = "uniform") -> "TopologySpec":
        return TopologySpec("complete", n, weighting)

    @staticmethod
    def ring(n: int, weighting: str = "uniform") -> "TopologySpec":
        return TopologySpec("ring", n, weighting)

    @staticmethod
    def star(n: int, weighting: str = "metropolis") -> "TopologySpec":
        return TopologySpec("star", n, weighting)

    @staticmethod
    def edge_list(n: int, edges, weighting: str = "metropolis") -> "TopologySpec":
        return TopologySpec("edgelist", n, weighting, _normalize_edges(n, edges))


def _adjacency(spec: TopologySpec) -> np.ndarray:
    n = spec.n
    adj = np.zeros((n, n), dtype=bool)
    if spec.kind == "complete":
        adj[:] = True
        np.fill_diagonal(adj, False)
    elif spec.kind == "ring":
        for i in range(n):
            adj[i, (i + 1) % n] = adj[(i + 1) % n, i] = True
        np.fill_diagonal(adj, False)
    elif spec.kind == "star":
        adj[0, 1:] = adj[1:, 0] = True
    else:
        for i, j in spec.edges:
            adj[i, j] = adj[j, i] = True
    return adj


def _connected(adj: np.ndarray) -> bool:
    n = adj.shape[0]
    seen = np.zeros(n, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        i = stack.pop()
        for j in np.flatnonzero(adj[i]):
            if not seen[j]:
                seen[j] = True
                stack.append(int(j))
    return bool(seen.all())


@dataclass(frozen=True)
class MixingMatrix:
    n: int
    w: np.ndarray
    lam: float

    @staticmethod
    def trivial() -> "MixingMatrix":
        """Degenerate single-agent matrix [[1.0]]; lambda = 0."""
        return MixingMatrix(1, np.ones((1, 1)), 0.0)

    def mix(self, stacked: np.ndarray) -> np.ndarray:
        return mix(self, stacked)


def build_mixing(spec: TopologySpec) -> MixingMatrix:
    """Construct the gossip matrix for a graph spec.

    Uniform weighting puts 1/(deg+1) on every neighbor and on self; it is
    doubly stochastic only for regular graphs and is rejected otherwise.
    Metropolis weighting, w_ij = 1/(1 + max(deg_i, deg_j)) with the diagonal
    absorbing the remainder, works for any connected graph.
    """
    adj = _adjacency(spec)
    if not _connected(adj):
        raise DisconnectedGraph(f"{spec.kind} graph on n={spec.n} is not connected")
    deg = adj.sum(axis=1)
    n = spec.n
    if spec.weighting == "uniform":
        if len(set(deg.tolist())) != 1:
            raise NonDoublyStochastic(
                "uniform weighting 1/(deg+1) is doubly stochastic only for "
                f"regular graphs; degrees are {sorted(set(deg.tolist()))}"
            )
        w = np.where(adj, 1.0 / (deg[0] + 1.0), 0.0)
        np.fill_diagonal(w, 1.0 / (deg[0] + 1.0))
    else:
        w = np.zeros((n, n))
        ii, jj = np.nonzero(adj)
        w[ii, jj] = 1.0 / (1.0 + np.maximum(deg[ii], deg[jj]))
        np.fill_diagonal(w, 1.0 - w.sum(axis=1))
    lam = spectral_gap(w)
    return MixingMatrix(n, w, lam)


def spectral_gap(w: np.ndarray) -> float:
    """max(|eig_2|, |eig_n|) of a symmetric doubly stochastic matrix."""
    w = np.asarray(w, dtype=float)
    n = w.shape[0]
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {w.shape}")
    if (np.abs(w.sum(axis=1) - 1.0) > STOCHASTIC_TOL).any() or (
        np.abs(w.sum(axis=0) - 1.0) > STOCHASTIC_TOL
    ).any():
        raise NotStochastic("row/column sums deviate from 1 beyond 1e-9")
    dev = w - np.full((n, n), 1.0 / n)
    lam = float(np.max(np.abs(np.linalg.eigvalsh(dev))))
    return 0.0 if lam < LAMBDA_SNAP else lam


def mix(w: MixingMatrix, stacked: np.ndarray) -> np.ndarray:
    """One gossip round: row i of the result is sum_j w_ij * stacked[j].

    Preserves the column average exactly up to floating point because W is
    doubly stochastic.
    """
    stacked = np.asarray(stacked, dtype=float)
    if stacked.shape[0] != w.n:
        raise DimensionMismatch(
            f"stacked leading dim {stacked.shape[0]} != matrix size {w.n}"
        )
    return w.w @ stacked


def is_comm_round(t: int, T0: int) -> bool:
    """True when iteration t performs gossip: t in {T0, 2*T0, ...}.

    Iteration 0 is never a communication round; the first mixing happens
    during iteration t = T0.
    """
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    if T0 < 1:
        raise ValueError(f"T0 must be >= 1, got {T0}")
    return t > 0 and t % T0 == 0


def delta_params(lam: float, T0: int, alpha_rho: float = 0.0) -> tuple[float, float]:
    """Contraction constants (delta1, delta2) for a gossip factor lambda.

    Admissibility requires 0 <= alpha_rho < 1 - lambda^(1/(2 T0)).  For a
    one-shot averaging matrix (lambda = 0) the constants degenerate to the
    T0-local-step expressions; for 0 < lambda < 1 they carry the extra
    lambda^(1/T0) geometry of partial mixing.
    """
    if not 0.0 <= lam < 1.0:
        raise ValueError(f"lambda must be in [0, 1), got {lam}")
    if T0 < 1:
        raise ValueError(f"T0 must be >= 1, got {T0}")
    bound = 1.0 - lam ** (1.0 / (2.0 * T0))
    if not 0.0 <= alpha_rho < bound:
        raise InadmissibleStep(
            f"alpha*rho = {alpha_rho} outside [0, {bound}) for lambda={lam}, T0={T0}"
        )
    if lam == 0.0:
        base = T0**T0 / (1.0 + T0) ** (T0 + 1)
        delta1 = base * (1.0 - alpha_rho) ** (2 * T0 + 2)
        delta2 = base
    else:
        root = lam ** (1.0 / T0)
        delta1 = lam * (1.0 - lam) * ((1.0 - alpha_rho) ** 2 - root)
        delta2 = lam * (1.0 - lam) * (1.0 - root)
    return float(delta1), float(delta2)
