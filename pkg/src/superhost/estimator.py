"""Cardinality math for bit-vector columns.

Saturated columns (no zero bits left) return ``math.inf`` rather than
raising; callers decide what a saturated column means.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .config import SketchConfig

EPSILON_CAP = 1.0 - 2.0 ** -20
FORMULAS = ("paper", "inverted")


@dataclass(frozen=True)
class LoadEstimate:
    eta: float
    epsilon: float


@dataclass(frozen=True)
class Thresholds:
    theta: int
    theta_bn: float


def linear_estimate(g: int, z: int) -> float:
    """Linear counting: ``-g ln(z/g)``."""
    if z <= 0:
        return math.inf
    if z > g:
        raise ValueError(f"zero count {z} exceeds column height {g}")
    return -g * math.log(z / g)


def shared_bit_prob(eta: float, cfg: SketchConfig) -> float:
    """Probability that a union-column bit was set by other hosts' flows."""
    if eta <= 0:
        return 0.0
    eps = 1.0
    for c in cfg.col_counts:
        eps *= -math.expm1(-eta / (c * cfg.g))
    return eps


def corrected_estimate(z: int, epsilon: float, g: int) -> float:
    """Union-column estimate with the shared-bit correction, clamped at 0."""
    if not epsilon < 1:
        raise ValueError(f"epsilon={epsilon} must be < 1")
    if z <= 0:
        return math.inf
    if epsilon == 0:
        return linear_estimate(g, z)
    est = -g * math.log(z / (g * (1.0 - epsilon)))
    return max(est, 0.0)


def hot_threshold(theta: float, epsilon: float, g: int, formula: str = "paper") -> float:
    """Zero-bit count at or below which a column counts as hot.

    ``paper`` is ``g(1+eps)e^{-theta/g} - g eps``; ``inverted`` solves the
    corrected estimate for ``theta`` directly, ``g(1-eps)e^{-theta/g}``.
    """
    if theta < 1:
        raise ValueError("theta must be >= 1")
    if not epsilon < 1:
        raise ValueError(f"epsilon={epsilon} must be < 1")
    decay = math.exp(-theta / g)
    if formula == "paper":
        t = g * (1 + epsilon) * decay - g * epsilon
    elif formula == "inverted":
        t = g * (1 - epsilon) * decay
    else:
        raise ValueError(f"unknown threshold formula {formula!r}; use one of {FORMULAS}")
    return max(t, 0.0)


def thresholds(theta: int, epsilon: float, g: int, formula: str = "paper") -> Thresholds:
    return Thresholds(theta, hot_threshold(theta, epsilon, g, formula))


def estimate_cs_load(cube, cs_idx: int) -> LoadEstimate:
    # whole-array linear counting over restoring array 0 of this sketch
    cfg = cube.config
    total = cfg.col_counts[0] * cfg.g
    z_total = int(cube.array_zero_counts(cs_idx, 0).sum())
    if z_total == 0:
        return LoadEstimate(math.inf, EPSILON_CAP)
    eta = -total * math.log(z_total / total)
    return LoadEstimate(eta, min(shared_bit_prob(eta, cfg), EPSILON_CAP))
