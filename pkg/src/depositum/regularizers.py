"""Separable nonsmooth penalties and their proximal maps.

Every penalty h here is coordinate-separable and weakly convex: there is a
modulus rho >= 0 such that h(z) + (rho/2) z^2 is convex in each coordinate.
The proximal map uses the step-size convention

    prox(h, alpha, x) = argmin_z  h(z) + (1 / (2 alpha)) ||z - x||^2,

so the quadratic coefficient is 1/(2 alpha) and the map is single-valued and
well defined exactly when alpha * rho < 1.  (Under the coefficient convention
prox^c with quadratic term (c/2)||z - x||^2 the same map is prox^{1/alpha};
optimizer code that writes prox^{1/alpha} and code that writes a step size
alpha mean the same object.  That mapping is stated here once and assumed
everywhere else.)

All prox formulas are closed-form and elementwise, so they apply unchanged to
stacked (n, d) arrays of per-client parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class StepTooLarge(ValueError):
    """Raised when alpha * weak_modulus >= 1 and the prox is ill posed."""


@dataclass(frozen=True)
class Regularizer:
    """Base marker type; concrete penalties are the dataclasses below."""


@dataclass(frozen=True)
class Zero(Regularizer):
    """No penalty: h = 0, prox is the identity."""


@dataclass(frozen=True)
class L1(Regularizer):
    weight: float

    def __post_init__(self):
        if not self.weight >= 0:
            raise ValueError(f"L1 weight must be >= 0, got {self.weight}")


@dataclass(frozen=True)
class MCP(Regularizer):
    """Minimax concave penalty with level lam and concavity span theta."""

    lam: float
    theta: float

    def __post_init__(self):
        if not self.lam >= 0:
            raise ValueError(f"MCP lam must be >= 0, got {self.lam}")
        if not self.theta > 0:
            raise ValueError(f"MCP theta must be > 0, got {self.theta}")


@dataclass(frozen=True)
class SCAD(Regularizer):
    """Smoothly clipped absolute deviation penalty; requires a > 2."""

    lam: float
    a: float

    def __post_init__(self):
        if not self.lam >= 0:
            raise ValueError(f"SCAD lam must be >= 0, got {self.lam}")
        if not self.a > 2:
            raise ValueError(f"SCAD a must be > 2, got {self.a}")


@dataclass(frozen=True)
class Box(Regularizer):
    """Indicator of the box [lo, hi]; evaluates to +inf outside."""

    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ValueError(f"Box requires lo <= hi, got [{self.lo}, {self.hi}]")


RegularizerSpec = Regularizer


def weak_modulus(spec: Regularizer) -> float:
    """Smallest rho such that h + (rho/2)||.||^2 is convex."""
    if isinstance(spec, (Zero, L1, Box)):
        return 0.0
    if isinstance(spec, MCP):
        return 1.0 / spec.theta
    if isinstance(spec, SCAD):
        return 1.0 / (spec.a - 1.0)
    raise TypeError(f"unknown regularizer {spec!r}")


def h_pointwise(spec: Regularizer, z) -> np.ndarray:
    """Per-coordinate penalty values; Box uses +inf outside the box."""
    z = np.asarray(z, dtype=float)
    a = np.abs(z)
    if isinstance(spec, Zero):
        return np.zeros_like(z)
    if isinstance(spec, L1):
        return spec.weight * a
    if isinstance(spec, MCP):
        lam, theta = spec.lam, spec.theta
        inner = lam * a - z * z / (2.0 * theta)
        return np.where(a <= theta * lam, inner, theta * lam * lam / 2.0)
    if isinstance(spec, SCAD):
        lam, aa = spec.lam, spec.a
        mid = (2.0 * aa * lam * a - z * z - lam * lam) / (2.0 * (aa - 1.0))
        out = np.where(a <= aa * lam, mid, lam * lam * (aa + 1.0) / 2.0)
        return np.where(a <= lam, lam * a, out)
    if isinstance(spec, Box):
        inside = (z >= spec.lo) & (z <= spec.hi)
        return np.where(inside, 0.0, np.inf)
    raise TypeError(f"unknown regularizer {spec!r}")


def eval_h(spec: Regularizer, x) -> float:
    """Total penalty value, summed over all coordinates."""
    vals = h_pointwise(spec, x)
    if np.isinf(vals).any():
        return math.inf
    return float(vals.sum())


def _check_step(spec: Regularizer, alpha: float) -> None:
    if not alpha > 0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    rho = weak_modulus(spec)
    if alpha * rho >= 1.0:
        raise StepTooLarge(
            f"alpha * weak_modulus = {alpha * rho} >= 1; prox undefined for {spec!r}"
        )


def prox(spec: Regularizer, alpha: float, x) -> np.ndarray:
    """Closed-form proximal map, elementwise on arrays of any shape.

    Requires alpha * weak_modulus(spec) < 1, which makes the objective
    h(z) + (1/(2 alpha))(z - x)^2 strongly convex per coordinate and the
    minimizer unique.
    """
    _check_step(spec, alpha)
    x = np.asarray(x, dtype=float)
    if isinstance(spec, Zero):
        return x.copy()
    if isinstance(spec, L1):
        tau = alpha * spec.weight
        return np.sign(x) * np.maximum(np.abs(x) - tau, 0.0)
    if isinstance(spec, MCP):
        lam, theta = spec.lam, spec.theta
        a = np.abs(x)
        shrunk = np.sign(x) * np.maximum(a - alpha * lam, 0.0) / (1.0 - alpha / theta)
        return np.where(a <= theta * lam, shrunk, x)
    if isinstance(spec, SCAD):
        lam, aa = spec.lam, spec.a
        a = np.abs(x)
        soft = np.sign(x) * np.maximum(a - alpha * lam, 0.0)
        mid = np.sign(x) * ((aa - 1.0) * a - aa * alpha * lam) / (aa - 1.0 - alpha)
        out = np.where(a <= lam * (1.0 + alpha), soft, mid)
        return np.where(a > aa * lam, x, out)
    if isinstance(spec, Box):
        return np.clip(x, spec.lo, spec.hi)
    raise TypeError(f"unknown regularizer {spec!r}")


def prox_grad_map(spec: Regularizer, alpha: float, x, v) -> np.ndarray:
    """Proximal gradient map (1/alpha) * (x - prox(spec, alpha, x - alpha v)).

    With spec = Zero this reduces to v exactly.  v is whatever first-order
    vector the caller pairs with x: a full gradient for the plain map, a
    momentum estimate for the momentum variant.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if isinstance(spec, Zero):
        _check_step(spec, alpha)
        return v.copy()
    return (x - prox(spec, alpha, x - alpha * v)) / alpha
