"""Datasets, client shards, and smooth per-client losses.

The global smooth objective is the unweighted client average
f(x) = (1/n) sum_i f_i(x), where f_i is the mean loss over client i's shard.
Three model families are supported: binary logistic regression on labels in
{-1, +1}, multinomial (softmax) linear classification, and a one-hidden-layer
tanh network with a softmax head.  All parameters travel as flat float64
vectors so the optimizer never needs to know the model structure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

L_FLOOR = 1e-8


class ParseError(ValueError):
    def __init__(self, line: int, column: int, message: str):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


class NonMonotoneIndex(ParseError):
    """Feature indices within a line must be strictly increasing."""


class IndexOutOfRange(IndexError):
    """Batch indices must fall inside the client's shard."""


@dataclass(frozen=True)
class Dataset:
    features: object  # (N, d) ndarray or scipy.sparse CSR
    labels: np.ndarray  # (N,) ints

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]


def parse_libsvm(text, d: int | None = None) -> Dataset:
    """Parse '<label> <idx>:<val> ...' lines; indices are 1-based on the wire.

    Raises ParseError(line, column) on malformed tokens and NonMonotoneIndex
    when indices within a line fail to strictly increase.  d defaults to the
    largest index seen.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    labels: list[int] = []
    data: list[float] = []
    indices: list[int] = []
    indptr = [0]
    max_idx = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        pos = 0
        toks = []
        for tok in line.split():
            col = line.index(tok, pos)
            toks.append((tok, col + 1))
            pos = col + len(tok)
        tok, col = toks[0]
        try:
            labels.append(int(tok))
        except ValueError:
            raise ParseError(lineno, col, f"bad label {tok!r}") from None
        prev = 0
        for tok, col in toks[1:]:
            head, sep, tail = tok.partition(":")
            if not sep:
                raise ParseError(lineno, col, f"expected idx:val, got {tok!r}")
            try:
                idx = int(head)
            except ValueError:
                raise ParseError(lineno, col, f"bad index {head!r}") from None
            if idx < 1:
                raise ParseError(lineno, col, f"index must be >= 1, got {idx}")
            if idx <= prev:
                raise NonMonotoneIndex(
                    lineno, col, f"index {idx} does not increase past {prev}"
                )
            if d is not None and idx > d:
                raise ParseError(lineno, col, f"index {idx} exceeds d={d}")
            try:
                val = float(tail)
            except ValueError:
                raise ParseError(lineno, col + len(head) + 1, f"bad value {tail!r}") from None
            indices.append(idx - 1)
            data.append(val)
            prev = idx
        indptr.append(len(data))
        max_idx = max(max_idx, prev)
    dim = d if d is not None else max_idx
    feats = sp.csr_matrix(
        (np.array(data), np.array(indices, dtype=np.int32), np.array(indptr)),
        shape=(len(labels), dim),
    )
    return Dataset(feats, np.array(labels, dtype=np.int64))


def serialize_libsvm(dataset: Dataset) -> str:
    """Inverse of parse_libsvm; round trips sparsity pattern and values."""
    feats = sp.csr_matrix(dataset.features)
    lines = []
    for i in range(dataset.n_samples):
        row = feats.getrow(i)
        parts = [str(int(dataset.labels[i]))]
        order = np.argsort(row.indices)
        for j in order:
            parts.append(f"{row.indices[j] + 1}:{float(row.data[j])!r}")
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def load_libsvm(path, d: int | None = None) -> Dataset:
    with open(path, "rb") as fh:
        return parse_libsvm(fh.read(), d=d)


@dataclass(frozen=True)
class Partition:
    assignments: tuple  # per-client int index arrays into the dataset
    n: int
    theta: float | None  # None marks the IID split

    def sizes(self) -> np.ndarray:
        return np.array([len(a) for a in self.assignments])


def dirichlet_partition(labels: np.ndarray, n: int, theta: float, rng) -> Partition:
    """Label-skewed split: per class, client shares drawn from Dir(theta * 1).

    Small theta concentrates each class on few clients; theta ~ 1e6 is an
    effectively IID split.  Empty clients are repaired by moving one sample
    from the largest client.
    """
    labels = np.asarray(labels)
    if n < 1:
        raise ValueError(f"need n >= 1 clients, got {n}")
    if labels.size < n:
        raise ValueError(f"cannot split {labels.size} samples over {n} clients")
    if not theta > 0:
        raise ValueError(f"theta must be > 0, got {theta}")
    buckets: list[list[int]] = [[] for _ in range(n)]
    for k in np.unique(labels):
        idx = np.flatnonzero(labels == k)
        p = rng.dirichlet(np.full(n, theta))
        owners = rng.choice(n, size=idx.size, p=p)
        for c in range(n):
            buckets[c].extend(idx[owners == c].tolist())
    sizes = np.array([len(b) for b in buckets])
    while (sizes == 0).any():
        empty = int(np.argmin(sizes))
        donor = int(np.argmax(sizes))
        buckets[empty].append(buckets[donor].pop())
        sizes = np.array([len(b) for b in buckets])
    assignments = tuple(np.sort(np.array(b, dtype=np.int64)) for b in buckets)
    return Partition(assignments, n, theta)


def iid_partition(n_samples: int, n: int, rng) -> Partition:
    """Uniform random split into n near-equal shards."""
    if n_samples < n:
        raise ValueError(f"cannot split {n_samples} samples over {n} clients")
    perm = rng.permutation(n_samples)
    assignments = tuple(np.sort(chunk) for chunk in np.array_split(perm, n))
    return Partition(assignments, n, None)


def synth_logistic(d: int, n_samples: int, separation: float, rng) -> Dataset:
    """Two unit-covariance Gaussian clusters at +-separation*u, labels +-1."""
    u = rng.standard_normal(d)
    u /= np.linalg.norm(u)
    b = np.where(rng.random(n_samples) < 0.5, 1, -1).astype(np.int64)
    a = b[:, None] * (separation * u)[None, :] + rng.standard_normal((n_samples, d))
    return Dataset(a, b)


def _rows(features, idx):
    return features[idx]


def _softmax_terms(logits: np.ndarray, y: np.ndarray):
    z = logits - logits.max(axis=1, keepdims=True)
    ez = np.exp(z)
    denom = ez.sum(axis=1)
    logp = z - np.log(denom)[:, None]
    p = ez / denom[:, None]
    loss = -logp[np.arange(y.size), y].mean()
    resid = p
    resid[np.arange(y.size), y] -= 1.0
    return loss, resid


@dataclass
class Problem:
    """Per-client shards plus one of the three model families.

    kind is 'logistic', 'softmax', or 'mlp'.  For softmax/mlp, labels are
    remapped to 0..k-1 internally; class_values keeps the original ids so
    predictions can be reported in the caller's label space.
    """

    kind: str
    shards: tuple  # per-client Dataset
    d: int
    dim: int
    n_classes: int | None = None
    hidden: int | None = None
    class_values: np.ndarray | None = None
    noise_std: float | None = None
    _L: float | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return len(self.shards)

    # -- mlp parameter packing ------------------------------------------------
    def _unpack(self, params: np.ndarray):
        d, m, k = self.d, self.hidden, self.n_classes
        o = 0
        w1 = params[o : o + d * m].reshape(d, m)
        o += d * m
        b1 = params[o : o + m]
        o += m
        w2 = params[o : o + m * k].reshape(m, k)
        o += m * k
        b2 = params[o : o + k]
        return w1, b1, w2, b2

    def _loss_grad_shard(self, feats, y, params: np.ndarray):
        n_b = feats.shape[0]
        if self.kind == "logistic":
            margins = np.asarray(feats @ params).ravel() * y
            loss = float(np.logaddexp(0.0, -margins).mean())
            coef = -y / (1.0 + np.exp(margins)) / n_b
            grad = np.asarray(feats.T @ coef).ravel()
            return loss, grad
        if self.kind == "softmax":
            w = params.reshape(self.d, self.n_classes)
            logits = np.asarray(feats @ w)
            loss, resid = _softmax_terms(logits, y)
            grad = np.asarray(feats.T @ resid).ravel() / n_b
            return float(loss), grad
        w1, b1, w2, b2 = self._unpack(params)
        hpre = np.asarray(feats @ w1) + b1
        h = np.tanh(hpre)
        logits = h @ w2 + b2
        loss, resid = _softmax_terms(logits, y)
        resid /= n_b
        gw2 = h.T @ resid
        gb2 = resid.sum(axis=0)
        dh = (resid @ w2.T) * (1.0 - h * h)
        gw1 = np.asarray(feats.T @ dh)
        gb1 = dh.sum(axis=0)
        grad = np.concatenate([gw1.ravel(), gb1, gw2.ravel(), gb2])
        return float(loss), grad

    def loss_and_grad(self, params, batch, client: int, rng=None):
        shard = self.shards[client]
        batch = np.asarray(batch, dtype=np.int64)
        if batch.size == 0:
            raise ValueError("empty batch")
        if (batch < 0).any() or (batch >= shard.n_samples).any():
            raise IndexOutOfRange(
                f"batch indices outside [0, {shard.n_samples}) for client {client}"
            )
        params = np.asarray(params, dtype=float)
        loss, grad = self._loss_grad_shard(
            _rows(shard.features, batch), shard.labels[batch], params
        )
        if self.noise_std and rng is not None:
            grad = grad + rng.normal(0.0, self.noise_std, size=grad.shape)
        return loss, grad

    def full_loss(self, params, client: int) -> float:
        shard = self.shards[client]
        loss, _ = self._loss_grad_shard(shard.features, shard.labels, np.asarray(params, dtype=float))
        return loss

    def full_grad(self, params, client: int) -> np.ndarray:
        shard = self.shards[client]
        _, grad = self._loss_grad_shard(shard.features, shard.labels, np.asarray(params, dtype=float))
        return grad

    def full_grad_multi(self, params_2d: np.ndarray, client: int) -> np.ndarray:
        """Shard-mean gradients at several parameter vectors, stacked (m, dim)."""
        params_2d = np.asarray(params_2d, dtype=float)
        shard = self.shards[client]
        feats, y = shard.features, shard.labels
        n_b = feats.shape[0]
        if self.kind == "logistic":
            margins = np.asarray(feats @ params_2d.T) * y[:, None]
            coef = -y[:, None] / (1.0 + np.exp(margins)) / n_b
            return np.asarray(feats.T @ coef).T
        return np.stack([self.full_grad(p, client) for p in params_2d])

    def mean_loss(self, params) -> float:
        """f(params): unweighted mean of shard losses."""
        return float(np.mean([self.full_loss(params, i) for i in range(self.n)]))

    def mean_grad(self, params) -> np.ndarray:
        """grad f(params): unweighted mean of shard gradients."""
        return np.mean([self.full_grad(params, i) for i in range(self.n)], axis=0)

    def predict(self, params, features) -> np.ndarray:
        params = np.asarray(params, dtype=float)
        if self.kind == "logistic":
            scores = np.asarray(features @ params).ravel()
            return np.where(scores >= 0, 1, -1).astype(np.int64)
        if self.kind == "softmax":
            logits = np.asarray(features @ params.reshape(self.d, self.n_classes))
        else:
            w1, b1, w2, b2 = self._unpack(params)
            logits = np.tanh(np.asarray(features @ w1) + b1) @ w2 + b2
        return self.class_values[np.argmax(logits, axis=1)]

    def smoothness(self) -> float:
        if self._L is None:
            self._L = estimate_L(self)
        return self._L


def make_problem(
    kind: str,
    dataset: Dataset,
    partition: Partition,
    *,
    hidden: int | None = None,
    noise_std: float | None = None,
) -> Problem:
    shards = tuple(
        Dataset(_rows(dataset.features, idx), dataset.labels[idx])
        for idx in partition.assignments
    )
    if kind == "logistic":
        if not set(np.unique(dataset.labels).tolist()) <= {-1, 1}:
            raise ValueError("logistic model needs labels in {-1, +1}")
        return Problem("logistic", shards, dataset.d, dataset.d, noise_std=noise_std)
    class_values = np.unique(dataset.labels)
    k = class_values.size
    lookup = {int(v): i for i, v in enumerate(class_values)}
    shards = tuple(
        Dataset(s.features, np.array([lookup[int(v)] for v in s.labels], dtype=np.int64))
        for s in shards
    )
    if kind == "softmax":
        return Problem(
            "softmax", shards, dataset.d, dataset.d * k,
            n_classes=k, class_values=class_values, noise_std=noise_std,
        )
    if kind == "mlp":
        if not hidden or hidden < 1:
            raise ValueError("mlp model needs hidden width >= 1")
        dim = dataset.d * hidden + hidden + hidden * k + k
        return Problem(
            "mlp", shards, dataset.d, dim,
            n_classes=k, hidden=hidden, class_values=class_values, noise_std=noise_std,
        )
    raise ValueError(f"unknown model kind {kind!r}")


def loss_and_grad(problem: Problem, params, batch, client: int, rng=None):
    return problem.loss_and_grad(params, batch, client, rng=rng)


def full_grad(problem: Problem, params, client: int) -> np.ndarray:
    return problem.full_grad(params, client)


def _power_lambda_max(feats, iters: int = 30, tol: float = 1e-8) -> float:
    """Largest eigenvalue of feats^T feats by power iteration."""
    d = feats.shape[1]
    v = np.full(d, 1.0 / math.sqrt(d))
    lam = 0.0
    for _ in range(iters):
        u = np.asarray(feats.T @ np.asarray(feats @ v).ravel()).ravel()
        norm = np.linalg.norm(u)
        if norm == 0.0:
            return 0.0
        v_new = u / norm
        lam_new = float(v_new @ np.asarray(feats.T @ np.asarray(feats @ v_new).ravel()).ravel())
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            return lam_new
        lam, v = lam_new, v_new
    return lam


def estimate_L(problem: Problem) -> float:
    """Smoothness bound for the client losses, maximized over clients.

    Logistic: lambda_max(A^T A) / (4 N) per shard.  Softmax: the same with
    denominator 2 N.  The tanh network has no tight closed form, so it gets
    an empirical secant estimate over random parameter pairs with a safety
    factor of 2.  Never returns below a small positive floor.
    """
    if problem.kind in ("logistic", "softmax"):
        denom = 4.0 if problem.kind == "logistic" else 2.0
        best = 0.0
        for shard in problem.shards:
            lam = _power_lambda_max(shard.features)
            best = max(best, lam / (denom * shard.n_samples))
        return max(best, L_FLOOR)
    rng = np.random.default_rng(np.random.SeedSequence(20260817))
    best = 0.0
    for _ in range(25):
        u = rng.normal(0.0, 0.5, size=problem.dim)
        v = rng.normal(0.0, 0.5, size=problem.dim)
        du = np.linalg.norm(u - v)
        if du == 0.0:
            continue
        ratio = np.linalg.norm(problem.mean_grad(u) - problem.mean_grad(v)) / du
        best = max(best, ratio)
    return max(2.0 * best, L_FLOOR)
