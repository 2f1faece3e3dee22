"""Range measurement models between fixed radio nodes.

Ranges are always taken against physical positions.  A node can lie
about its coordinates, but the propagation delay between two radios is
set by where they actually are, so the only corruption applied here is
measurement noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Point2

_KINDS = ("exact", "gaussian", "lognormal")


@dataclass(frozen=True)
class RangingModel:
    """Noise model for a single range measurement.

    kind:
        "exact"      measured = d
        "gaussian"   measured = max(0, d + N(0, sigma)), additive error
        "lognormal"  measured = d * exp(N(0, sigma)), multiplicative error
    With sigma = 0 every kind returns the true distance bit for bit.
    """

    kind: str = "exact"
    sigma: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown ranging kind {self.kind!r}, expected one of {_KINDS}")
        if not (self.sigma >= 0.0):
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")

    @classmethod
    def exact(cls) -> "RangingModel":
        return cls("exact", 0.0)

    @classmethod
    def gaussian(cls, sigma: float) -> "RangingModel":
        return cls("gaussian", sigma)

    @classmethod
    def lognormal(cls, sigma: float) -> "RangingModel":
        return cls("lognormal", sigma)


def true_distance(p: Point2, q: Point2) -> float:
    """Euclidean distance between two points, in meters."""
    return math.hypot(p.x - q.x, p.y - q.y)


def measure(true_d: float, model: RangingModel, rng: np.random.Generator) -> float:
    """Draw one range measurement of a true distance.

    Never returns a negative value; additive noise is clamped at zero.
    """
    if true_d < 0.0:
        raise ValueError(f"true distance must be >= 0, got {true_d}")
    if model.kind == "exact":
        return true_d
    if model.kind == "gaussian":
        noisy = true_d + rng.normal(0.0, model.sigma)
        return noisy if noisy > 0.0 else 0.0
    return true_d * math.exp(rng.normal(0.0, model.sigma))
