"""Sampleable distributions used by adversaries and strategies.

Each distribution draws ``size`` points with ``sample(rng, size)`` and
returns an array whose first axis is the sample axis.  Finite ones also
expose ``pmf`` over their support, which lets the centered complexity
estimator compute conditional means exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class Distribution:
    point_shape: tuple[int, ...] = ()

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError

    def mean(self) -> np.ndarray | float:
        raise NotImplementedError


@dataclass(frozen=True)
class PointMass(Distribution):
    value: float | tuple[float, ...]

    @property
    def point_shape(self):
        return np.shape(self.value)

    def sample(self, rng, size):
        v = np.asarray(self.value, dtype=float)
        return np.broadcast_to(v, (size,) + v.shape).copy()

    def mean(self):
        return np.asarray(self.value, dtype=float)


@dataclass(frozen=True)
class Uniform(Distribution):
    """Uniform on ``[low, high)``."""

    low: float = 0.0
    high: float = 1.0

    def sample(self, rng, size):
        return rng.uniform(self.low, self.high, size=size)

    def mean(self):
        return 0.5 * (self.low + self.high)

    def cdf(self, x):
        return np.clip((np.asarray(x, dtype=float) - self.low) / (self.high - self.low), 0.0, 1.0)


@dataclass(frozen=True)
class UniformSphere(Distribution):
    """Uniform on the Euclidean unit sphere in ``dim`` dimensions."""

    dim: int = 2

    @property
    def point_shape(self):
        return (self.dim,)

    def sample(self, rng, size):
        g = rng.standard_normal((size, self.dim))
        return g / np.linalg.norm(g, axis=1, keepdims=True)

    def mean(self):
        return np.zeros(self.dim)


@dataclass(frozen=True)
class UniformBox(Distribution):
    """Uniform on ``[-radius, radius]^dim``."""

    dim: int = 2
    radius: float = 1.0

    @property
    def point_shape(self):
        return (self.dim,)

    def sample(self, rng, size):
        return rng.uniform(-self.radius, self.radius, size=(size, self.dim))

    def mean(self):
        return np.zeros(self.dim)


@dataclass(frozen=True)
class Categorical(Distribution):
    """Distribution over ``support`` (defaults to ``0..len(probs)-1``)."""

    probs: tuple[float, ...]
    support: tuple = field(default=())

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or np.any(p < 0) or not np.isclose(p.sum(), 1.0):
            raise ValueError("probs must be a nonnegative vector summing to 1")
        if self.support and len(self.support) != len(p):
            raise ValueError("support and probs differ in length")

    @property
    def values(self) -> np.ndarray:
        if self.support:
            return np.asarray(self.support)
        return np.arange(len(self.probs))

    def pmf(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=float)

    def sample(self, rng, size):
        p = self.pmf()
        idx = np.searchsorted(np.cumsum(p), rng.random(size), side="right")
        return self.values[np.minimum(idx, len(p) - 1)]

    def mean(self):
        return self.pmf() @ self.values

    def cdf(self, x):
        order = np.argsort(self.values)
        v, c = self.values[order], np.cumsum(self.pmf()[order])
        idx = np.searchsorted(v, np.asarray(x), side="right")
        return np.where(idx == 0, 0.0, c[np.maximum(idx - 1, 0)])


def uniform_categorical(k: int) -> Categorical:
    return Categorical(tuple(np.full(k, 1.0 / k)))
