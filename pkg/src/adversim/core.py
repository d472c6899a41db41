"""Hypothesis classes, losses, comparators and game descriptions.

Four class variants are supported:

* ``FiniteTable``  -- an explicit ``|F| x |X|`` matrix over abstract points
  (points are column indices); hypotheses are row indices.
* ``LinearBall``   -- ``{f : ||f|| <= R}`` acting linearly, ``f(x) = <f, x>``;
  ``norm="euclidean"`` pairs the l2 ball with l2 moves, ``norm="sup-dual"``
  pairs the l1 ball with sup-norm moves.  Hypotheses are vectors.
* ``Simplex``      -- the probability simplex acting linearly.
* ``ThresholdGrid``-- thresholds on [0, 1].  On a pair ``(z, y)`` a threshold
  evaluates to ``|y - 1{z < theta}|``; on a bare ``z`` to ``1{z < theta}``.
  Hypotheses are the threshold values themselves.  ``resolution=None``
  gives the continuum ``[margin, 1 - margin]``.

All types are immutable after construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

LOSSES = ("linear", "absolute")
PROTOCOLS = ("plain", "supervised", "smoothed")


class DomainError(ValueError):
    """A point or hypothesis does not belong to the class it was used with."""


class FunctionClass:
    variant: str = "abstract"

    @property
    def is_finite(self) -> bool:
        return False


@dataclass(frozen=True, eq=False)
class FiniteTable(FunctionClass):
    values: np.ndarray
    domain: tuple = field(default=())

    variant = "FiniteTable"

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or v.size == 0:
            raise ValueError("FiniteTable values must be a nonempty |F| x |X| matrix")
        if np.any(np.abs(v) > 1.0 + 1e-12):
            raise ValueError("FiniteTable values must lie in [-1, 1]")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self.domain and len(self.domain) != v.shape[1]:
            raise ValueError("domain labels do not match the number of columns")

    @property
    def is_finite(self):
        return True

    @property
    def size(self) -> int:
        return self.values.shape[0]

    @property
    def n_points(self) -> int:
        return self.values.shape[1]

    def rows(self, idx) -> "FiniteTable":
        return FiniteTable(self.values[np.asarray(idx)], self.domain)


@dataclass(frozen=True)
class LinearBall(FunctionClass):
    dimension: int
    radius: float = 1.0
    norm: str = "euclidean"

    variant = "LinearBall"

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be positive")
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")
        if self.norm not in ("euclidean", "sup-dual"):
            raise ValueError(f"unknown norm {self.norm!r}")

    def class_norm(self, f) -> float:
        f = np.asarray(f, dtype=float)
        return float(np.linalg.norm(f) if self.norm == "euclidean" else np.abs(f).sum())

    def dual_norm(self, x, axis=-1):
        x = np.asarray(x, dtype=float)
        if self.norm == "euclidean":
            return np.linalg.norm(x, axis=axis)
        return np.abs(x).max(axis=axis)


@dataclass(frozen=True)
class Simplex(FunctionClass):
    dimension: int

    variant = "Simplex"

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be positive")

    def vertex(self, j: int) -> np.ndarray:
        e = np.zeros(self.dimension)
        e[j] = 1.0
        return e


@dataclass(frozen=True)
class ThresholdGrid(FunctionClass):
    resolution: int | None
    margin: float = 0.0

    variant = "ThresholdGrid"

    def __post_init__(self):
        if self.resolution is not None and self.resolution < 1:
            raise ValueError("resolution must be a positive integer (or None)")
        if not 0.0 <= self.margin <= 0.5:
            raise ValueError("margin must lie in [0, 1/2]")
        if self.margin == 0.5 and self.resolution is None:
            raise ValueError("the continuum class needs margin < 1/2")

    @property
    def is_finite(self):
        return self.resolution is not None

    @property
    def size(self) -> int:
        if self.resolution is None:
            raise DomainError("the continuum threshold class has no finite size")
        return self.resolution

    @property
    def lo(self) -> float:
        return self.margin

    @property
    def hi(self) -> float:
        return 1.0 - self.margin

    def theta(self, i):
        """Grid thresholds ``margin + (1 - 2 margin) (i + 1) / (N + 1)``."""
        n = self.size
        i = np.asarray(i)
        out = self.margin + (1.0 - 2.0 * self.margin) * (i + 1) / (n + 1)
        return float(out) if out.ndim == 0 else out

    def theta_scalar(self, i: int) -> float:
        """Same value as ``theta`` for one integer index, without numpy overhead."""
        return self.margin + (1.0 - 2.0 * self.margin) * (i + 1) / (self.size + 1)

    @property
    def thresholds(self) -> np.ndarray:
        if self.size > 10**7:
            raise MemoryError("refusing to materialize more than 1e7 thresholds")
        return self.theta(np.arange(self.size))

    def _count_le_scalar(self, z) -> int:
        n = self.size
        if self.margin == 0.5:  # every threshold sits at 1/2
            return n if z >= 0.5 else 0
        approx = (float(z) - self.margin) * (n + 1) / (1.0 - 2.0 * self.margin)
        c = int(min(max(math.floor(approx), 0), n)) if math.isfinite(approx) else (0 if approx < 0 else n)
        while c < n and self.theta_scalar(c) <= z:
            c += 1
        while c > 0 and self.theta_scalar(c - 1) > z:
            c -= 1
        return c

    def count_at_or_below(self, z):
        """Number of grid thresholds ``theta_i <= z`` (index of the first one above ``z``)."""
        arr = np.asarray(z)
        if arr.ndim == 0:
            return self._count_le_scalar(arr.item())
        if arr.dtype == object:
            return np.array([self._count_le_scalar(v) for v in arr], dtype=np.int64)
        n = self.size
        zf = arr.astype(float)
        if self.margin == 0.5:
            return np.where(zf >= 0.5, n, 0).astype(np.int64)
        approx = (zf - self.margin) * (n + 1) / (1.0 - 2.0 * self.margin)
        c = np.clip(np.floor(np.nan_to_num(approx, nan=0.0)), 0, n).astype(np.int64)
        for _ in range(4):
            up = (c < n) & (self.theta(np.minimum(c, n - 1)) <= zf)
            down = (c > 0) & (self.theta(np.maximum(c - 1, 0)) > zf)
            if not up.any() and not down.any():
                break
            c = c + up - down
        return c

    def contains(self, theta) -> bool:
        if self.resolution is None:
            return self.lo <= theta <= self.hi
        c = self._count_le_scalar(theta)
        return c > 0 and self.theta(c - 1) == theta


@dataclass(frozen=True)
class GameSpec:
    horizon: int
    cls: FunctionClass
    loss: str = "linear"
    protocol: str = "plain"

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.loss not in LOSSES:
            raise ValueError(f"unknown loss {self.loss!r}")
        if self.protocol not in PROTOCOLS:
            raise ValueError(f"unknown protocol {self.protocol!r}")
        if self.loss == "absolute" and self.protocol == "plain":
            raise ValueError("absolute loss requires the supervised or smoothed protocol")


@dataclass
class RegretRecord:
    """Outcome of one replicate.

    ``cumulative_regret[t]`` is the learner's loss over rounds ``0..t`` minus
    the loss over the same rounds of the full-horizon comparator (or of the
    prefix-optimal comparator when built with ``prefix=True``).
    """

    per_round_loss: np.ndarray
    comparator_loss: float
    cumulative_regret: np.ndarray
    seed: int

    @property
    def final_regret(self) -> float:
        return float(self.cumulative_regret[-1])

    @property
    def horizon(self) -> int:
        return len(self.per_round_loss)

    @classmethod
    def build(cls, losses, comparator_round_losses, seed: int, prefix_optimal=None) -> "RegretRecord":
        losses = np.asarray(losses, dtype=float)
        comp = np.asarray(comparator_round_losses, dtype=float)
        cum_loss = np.cumsum(losses)
        if prefix_optimal is None:
            cum = cum_loss - np.cumsum(comp)
            total = float(comp.sum())
        else:
            cum = cum_loss - np.asarray(prefix_optimal, dtype=float)
            total = float(prefix_optimal[-1])
        # exact final identity
        cum[-1] = float(losses.sum()) - total
        return cls(losses, total, cum, int(seed))


# ---------------------------------------------------------------------------
# points


def is_labeled(x) -> bool:
    return isinstance(x, (tuple, list, np.ndarray)) and np.ndim(x) == 1 and len(x) == 2


def split_pairs(sequence) -> tuple[np.ndarray, np.ndarray]:
    """``(z, y)`` arrays from a sequence of labelled points."""
    seq = list(sequence)
    z = np.array([p[0] for p in seq])
    if z.dtype != object:
        z = z.astype(float)
    y = np.array([float(p[1]) for p in seq])
    return z, y


def _labeled_sequence(cls, sequence) -> bool:
    if isinstance(cls, ThresholdGrid):
        return len(sequence) > 0 and is_labeled(sequence[0])
    if isinstance(cls, FiniteTable):
        return len(sequence) > 0 and is_labeled(sequence[0])
    return False


# ---------------------------------------------------------------------------
# evaluation


def evaluate(cls: FunctionClass, hypothesis, x) -> float:
    """Value of ``hypothesis`` at domain point ``x``."""
    if isinstance(cls, FiniteTable):
        i = int(hypothesis)
        if not 0 <= i < cls.size:
            raise DomainError(f"FiniteTable has no row {hypothesis!r}")
        j = x
        if isinstance(j, (float, np.floating)) and float(j).is_integer():
            j = int(j)
        if not isinstance(j, (int, np.integer)) or not 0 <= j < cls.n_points:
            raise DomainError(f"FiniteTable point must be a column index, got {x!r}")
        return float(cls.values[i, j])
    if isinstance(cls, (LinearBall, Simplex)):
        f = np.asarray(hypothesis, dtype=float)
        v = np.asarray(x, dtype=float)
        if f.shape != (cls.dimension,) or v.shape != (cls.dimension,):
            raise DomainError(f"{cls.variant} expects {cls.dimension}-vectors")
        return float(f @ v)
    if isinstance(cls, ThresholdGrid):
        if is_labeled(x):
            z, y = x
            return abs(float(y) - float(z < hypothesis))
        if np.ndim(x) != 0:
            raise DomainError("ThresholdGrid points are z or (z, y)")
        return float(x < hypothesis)
    raise DomainError(f"unsupported class {type(cls).__name__}")


def loss_value(cls: FunctionClass, hypothesis, x, loss: str = "linear") -> float:
    """Loss of ``hypothesis`` on ``x``: linear is the value itself; absolute is
    ``|f(x) - y|`` for a labelled point (threshold pairs already encode it)."""
    if loss == "absolute" and isinstance(cls, FiniteTable):
        j, y = x
        return abs(evaluate(cls, hypothesis, int(j)) - float(y))
    return evaluate(cls, hypothesis, x)


def finite_loss_matrix(cls: FunctionClass, sequence, loss: str = "linear") -> np.ndarray:
    """``(T, |F|)`` matrix of per-round losses for every hypothesis of a finite class."""
    if isinstance(cls, FiniteTable):
        if _labeled_sequence(cls, sequence):
            j, y = split_pairs(sequence)
            return np.abs(cls.values[:, j.astype(int)].T - y[:, None])
        return cls.values[:, np.asarray(sequence, dtype=int)].T.copy()
    if isinstance(cls, ThresholdGrid) and cls.is_finite:
        th = cls.thresholds
        if _labeled_sequence(cls, sequence):
            z, y = split_pairs(sequence)
            ind = np.array([[zz < t for t in th] for zz in z], dtype=float) if z.dtype == object \
                else (z[:, None] < th[None, :]).astype(float)
            return np.abs(y[:, None] - ind)
        z = np.asarray(sequence)
        return (z[:, None] < th[None, :]).astype(float)
    raise DomainError(f"{cls.variant} is not a finite class")


# ---------------------------------------------------------------------------
# threshold patterns


def threshold_candidates(cls: ThresholdGrid, z_sorted) -> tuple[np.ndarray, np.ndarray]:
    """Candidate thresholds (ascending) and their pattern counts ``#{z < theta}``.

    Every labelling of the points realizable by the class is realized by some
    candidate, and on a grid the candidate is the smallest threshold giving it.
    """
    z_sorted = np.asarray(z_sorted)
    if cls.resolution is None:
        inner = z_sorted[(z_sorted > cls.lo) & (z_sorted <= cls.hi)] if len(z_sorted) else z_sorted
        cands = np.concatenate([np.array([cls.lo], dtype=z_sorted.dtype if z_sorted.dtype == object else float),
                                inner, np.array([cls.hi], dtype=z_sorted.dtype if z_sorted.dtype == object else float)])
    else:
        nxt = cls.count_at_or_below(z_sorted) if len(z_sorted) else np.zeros(0, dtype=np.int64)
        idx = np.unique(np.concatenate([[0], nxt[nxt < cls.size]]))
        cands = np.atleast_1d(cls.theta(idx))
    k = np.searchsorted(z_sorted, cands, side="left") if len(z_sorted) else np.zeros(len(cands), dtype=np.int64)
    return cands, np.asarray(k, dtype=np.int64)


def threshold_prefix_scores(cls: ThresholdGrid, z, weights) -> tuple[np.ndarray, np.ndarray]:
    """``sum_t w_t 1{z_t < theta}`` for every candidate theta.

    ``weights`` may be ``(T,)`` or ``(K, T)``; the score array has the matching
    leading shape with candidates on the last axis.
    """
    z = np.asarray(z)
    order = np.argsort(z, kind="stable")
    zs = z[order]
    cands, k = threshold_candidates(cls, zs)
    w = np.asarray(weights, dtype=float)[..., order]
    prefix = np.concatenate([np.zeros(w.shape[:-1] + (1,)), np.cumsum(w, axis=-1)], axis=-1)
    return cands, prefix[..., k]


# ---------------------------------------------------------------------------
# comparators


def comparator_round_losses(cls: FunctionClass, hypothesis, sequence, loss: str = "linear") -> np.ndarray:
    """Per-round losses of one fixed hypothesis along ``sequence``."""
    if isinstance(cls, (LinearBall, Simplex)):
        return np.asarray(sequence, dtype=float) @ np.asarray(hypothesis, dtype=float)
    if isinstance(cls, FiniteTable):
        return finite_loss_matrix(cls, sequence, loss)[:, int(hypothesis)]
    if isinstance(cls, ThresholdGrid):
        if _labeled_sequence(cls, sequence):
            z, y = split_pairs(sequence)
            below = np.array([zz < hypothesis for zz in z], dtype=float)
            return np.abs(y - below)
        return np.array([float(zz < hypothesis) for zz in sequence])
    raise DomainError(f"unsupported class {type(cls).__name__}")


def best_fixed_comparator(cls: FunctionClass, sequence, loss: str | None = None) -> tuple[Any, float]:
    """Minimizer of cumulative loss over the class and its total loss.

    Ties go to the lowest row index / smallest threshold; a zero sum for a
    linear ball returns the zero vector.
    """
    if len(sequence) == 0:
        raise ValueError("comparator of an empty sequence is undefined")
    if loss is None:
        loss = "absolute" if _labeled_sequence(cls, sequence) else "linear"

    if isinstance(cls, LinearBall):
        s = np.asarray(sequence, dtype=float).sum(axis=0)
        if s.shape != (cls.dimension,):
            raise DomainError(f"LinearBall expects {cls.dimension}-vectors")
        if cls.norm == "euclidean":
            n = float(np.linalg.norm(s))
            if n == 0.0:
                return np.zeros(cls.dimension), 0.0
            return -cls.radius * s / n, -cls.radius * n
        j = int(np.argmax(np.abs(s)))
        if s[j] == 0.0:
            return np.zeros(cls.dimension), 0.0
        f = np.zeros(cls.dimension)
        f[j] = -cls.radius * np.sign(s[j])
        return f, -cls.radius * abs(float(s[j]))

    if isinstance(cls, Simplex):
        s = np.asarray(sequence, dtype=float).sum(axis=0)
        if s.shape != (cls.dimension,):
            raise DomainError(f"Simplex expects {cls.dimension}-vectors")
        j = int(np.argmin(s))
        return cls.vertex(j), float(s[j])

    if isinstance(cls, FiniteTable):
        totals = finite_loss_matrix(cls, sequence, loss).sum(axis=0)
        i = int(np.argmin(totals))
        return i, float(totals[i])

    if isinstance(cls, ThresholdGrid):
        if _labeled_sequence(cls, sequence):
            z, y = split_pairs(sequence)
            cands, scores = threshold_prefix_scores(cls, z, 1.0 - 2.0 * y)
            totals = y.sum() + scores
        else:
            z = np.asarray(sequence)
            cands, totals = threshold_prefix_scores(cls, z, np.ones(len(z)))
        i = int(np.argmin(totals))
        theta = cands[i]
        return (float(theta) if not hasattr(theta, "denominator") else theta), float(totals[i])

    raise DomainError(f"unsupported class {type(cls).__name__}")


def prefix_optimal_losses(cls: FunctionClass, sequence, loss: str | None = None) -> np.ndarray:
    """Best-in-hindsight loss of every prefix (diagnostic regret mode)."""
    return np.array([best_fixed_comparator(cls, sequence[: t + 1], loss)[1] for t in range(len(sequence))])


def random_hypotheses(cls: FunctionClass, rng: np.random.Generator, k: int) -> list:
    """``k`` random members of the class (used by property tests)."""
    if isinstance(cls, FiniteTable):
        return list(rng.integers(0, cls.size, size=k))
    if isinstance(cls, LinearBall):
        out = []
        for _ in range(k):
            g = rng.standard_normal(cls.dimension)
            r = cls.radius * rng.random()
            n = cls.class_norm(g)
            out.append(g / n * r if n > 0 else g * 0)
        return out
    if isinstance(cls, Simplex):
        return list(rng.dirichlet(np.ones(cls.dimension), size=k))
    if isinstance(cls, ThresholdGrid):
        if cls.resolution is None:
            return list(rng.uniform(cls.lo, cls.hi, size=k))
        return list(cls.theta(rng.integers(0, cls.size, size=k)))
    raise DomainError(f"unsupported class {type(cls).__name__}")


def check_sequence(seq: Sequence) -> None:
    if len(seq) == 0:
        raise ValueError("empty sequence")
