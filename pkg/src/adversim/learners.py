"""Player strategies: exponential weights, optimistic mirror descent and follow-the-leader.

Every learner follows the same round protocol driven by the engine:

``sample(rng)``     draw the hypothesis ``f_t ~ q_t`` (kept hidden from the adversary),
``expected_loss``   loss of ``q_t`` on a point (analytic mode),
``update(x)``       observe the realized point and move to ``q_{t+1}``.

Adversaries may also query ``q_t`` through ``mean_hypothesis()`` (linear
games) or ``prob_label_one(z)`` (threshold games).
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np

from .core import (DomainError, FiniteTable, FunctionClass, GameSpec, LinearBall, Simplex, ThresholdGrid,
                   best_fixed_comparator, finite_loss_matrix, is_labeled, loss_value)

EW_CAP = 10**8


# ---------------------------------------------------------------------------
# primitive updates


def ew_step(weights, losses, eta: float) -> np.ndarray:
    """One exponential-weights update, computed in log space."""
    w = np.asarray(weights, dtype=float)
    with np.errstate(divide="ignore"):
        logw = np.log(w) - eta * np.asarray(losses, dtype=float)
    logw -= logw.max()
    out = np.exp(logw)
    return out / out.sum()


@dataclass(frozen=True)
class Regularizer:
    """``half_squared_euclidean`` (1-strongly convex in l2) or ``negative_entropy``
    (1-strongly convex in l1 on the simplex, bounded by ``log d``)."""

    kind: str = "half_squared_euclidean"
    strong_convexity: float = 1.0
    radius_sq: float = 1.0

    def __post_init__(self):
        if self.kind not in ("half_squared_euclidean", "negative_entropy"):
            raise ValueError(f"unknown regularizer {self.kind!r}")
        if self.strong_convexity <= 0 or self.radius_sq <= 0:
            raise ValueError("strong convexity and radius bound must be positive")

    @classmethod
    def for_class(cls, c: FunctionClass) -> "Regularizer":
        if isinstance(c, Simplex):
            return cls("negative_entropy", 1.0, max(math.log(c.dimension), 1e-12))
        if isinstance(c, LinearBall) and c.norm == "euclidean":
            return cls("half_squared_euclidean", 1.0, c.radius**2 if c.radius > 0 else 1e-12)
        raise DomainError(f"no regularizer for {getattr(c, 'variant', c)}")

    @property
    def R(self) -> float:
        return math.sqrt(self.radius_sq)


def project_ball(f, radius: float) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    n = math.sqrt(float(f @ f))
    return f if n <= radius else f * (radius / n)


def omd_step(point, loss_gradient, eta: float, reg: Regularizer) -> np.ndarray:
    """Mirror step: projected gradient step (Euclidean) or multiplicative update (entropic)."""
    f = np.asarray(point, dtype=float)
    g = np.asarray(loss_gradient, dtype=float)
    if reg.kind == "half_squared_euclidean":
        return project_ball(f - eta * g, reg.R)
    return ew_step(f, g, eta)


def ftl_step(history, cls: FunctionClass, loss: str | None = None):
    """Follow the leader: the best fixed hypothesis on the history so far."""
    if len(history) == 0:
        return default_hypothesis(cls)
    return best_fixed_comparator(cls, history, loss)[0]


def default_hypothesis(cls: FunctionClass):
    if isinstance(cls, FiniteTable):
        return 0
    if isinstance(cls, LinearBall):
        return np.zeros(cls.dimension)
    if isinstance(cls, Simplex):
        return cls.vertex(0)
    if isinstance(cls, ThresholdGrid):
        return cls.lo if cls.resolution is None else cls.theta(0)
    raise DomainError(f"unsupported class {cls!r}")


# ---------------------------------------------------------------------------
# learners


class Learner:
    name = "abstract"

    def reset(self, game: GameSpec):
        self.game = game
        self.t = 0

    def sample(self, rng: np.random.Generator):
        raise NotImplementedError

    def expected_loss(self, x) -> float:
        raise NotImplementedError

    def update(self, x) -> None:
        raise NotImplementedError

    def mean_hypothesis(self):
        raise NotImplementedError(f"{self.name} does not expose a mean hypothesis")

    def prob_label_one(self, z) -> float:
        raise NotImplementedError(f"{self.name} does not predict labels")


def hedge_eta(n_experts: int, T: int) -> float:
    return math.sqrt(8.0 * math.log(n_experts) / T) if n_experts > 1 else 0.0


class ExponentialWeights(Learner):
    """Dense exponential weights over a finite class (table rows or a small grid)."""

    name = "ew"

    def __init__(self, eta: float | None = None):
        self.eta_override = eta

    def reset(self, game):
        super().reset(game)
        c = game.cls
        if isinstance(c, FiniteTable):
            self.handles = list(range(c.size))
        elif isinstance(c, ThresholdGrid) and c.is_finite:
            self.handles = list(c.thresholds)
        else:
            raise DomainError(f"dense exponential weights needs a finite class, got {c.variant}")
        n = len(self.handles)
        self.eta = hedge_eta(n, game.horizon) if self.eta_override is None else self.eta_override
        self.weights = np.full(n, 1.0 / n)

    def _losses(self, x):
        return finite_loss_matrix(self.game.cls, [x], self.game.loss)[0]

    def sample(self, rng):
        i = int(np.searchsorted(np.cumsum(self.weights), rng.random(), side="right"))
        return self.handles[min(i, len(self.handles) - 1)]

    def expected_loss(self, x):
        return float(self.weights @ self._losses(x))

    def prob_label_one(self, z):
        th = np.asarray(self.handles, dtype=float)
        return float(self.weights[np.array([z < v for v in th])].sum())

    def update(self, x):
        self.weights = ew_step(self.weights, self._losses(x), self.eta)
        self.t += 1


class _GridBlocks:
    """Grid thresholds grouped into blocks that share their loss history.

    Block ``j`` holds the grid indices ``[pos[j], pos[j+1])``; a point ``z``
    splits the grid at ``count_at_or_below(z)`` (indices below satisfy
    ``theta <= z``).
    """

    def __init__(self, cls: ThresholdGrid):
        self.cls = cls
        self.n = cls.size
        self.pos = [0]
        self.L = np.zeros(1)
        self.S = np.array([float(self.n)])

    def split(self, z) -> int:
        k = self.cls.count_at_or_below(z)
        if 0 < k < self.n:
            j = bisect.bisect_left(self.pos, k)
            if j == len(self.pos) or self.pos[j] != k:
                end = self.pos[j] if j < len(self.pos) else self.n
                self.pos.insert(j, k)
                self.L = np.insert(self.L, j, self.L[j - 1])
                self.S[j - 1] = k - self.pos[j - 1]
                self.S = np.insert(self.S, j, end - k)
        return k

    def sizes(self) -> np.ndarray:
        return self.S

    def add(self, k: int, below: float, above: float):
        j = bisect.bisect_left(self.pos, k)
        self.L[:j] += below
        self.L[j:] += above

    def rep(self, j: int):
        return self.cls.theta_scalar(self.pos[j])


class _ContinuumBlocks:
    """Continuum thresholds on ``[lo, hi]`` split at observed points.

    Blocks are ``[lo, c_1], (c_1, c_2], ..., (c_k, hi]``; the representative
    of a block is its smallest member, or its right end when it is open on
    the left, matching the comparator's tie-breaking.
    """

    def __init__(self, cls: ThresholdGrid):
        self.lo, self.hi = cls.lo, cls.hi
        self.cuts = []
        self.L = np.zeros(1)

    def split(self, z) -> int:
        """Number of blocks entirely at or below ``z``."""
        if z < self.lo:
            return 0
        if z >= self.hi:
            return len(self.cuts) + 1
        j = bisect.bisect_left(self.cuts, z)
        if j == len(self.cuts) or self.cuts[j] != z:
            self.cuts.insert(j, z)
            self.L = np.insert(self.L, j, self.L[j])
        return j + 1

    def add(self, k: int, below: float, above: float):
        self.L[:k] += below
        self.L[k:] += above

    def rep(self, j: int):
        if j == 0:
            return self.lo
        return self.cuts[j] if j < len(self.cuts) else self.hi


def _label_split(x):
    if not is_labeled(x):
        raise DomainError("threshold learners expect labelled points (z, y)")
    return x[0], float(x[1])


class ThresholdEW(Learner):
    """Exact exponential weights over a threshold grid of any size.

    Thresholds with identical loss histories are kept as one block, so the
    cost per round grows with the number of distinct points seen, not with
    the grid size.
    """

    name = "ew"

    def __init__(self, eta: float | None = None, cls: ThresholdGrid | None = None):
        self.eta_override = eta
        self.expert_cls = cls

    def reset(self, game):
        super().reset(game)
        self.cls = self.expert_cls or game.cls
        if not isinstance(self.cls, ThresholdGrid) or not self.cls.is_finite:
            raise DomainError("ThresholdEW needs a finite threshold grid")
        if self.cls.size >= EW_CAP + 1:
            raise MemoryError(f"grid of {self.cls.size} thresholds exceeds the cap {EW_CAP}")
        self.eta = hedge_eta(self.cls.size, game.horizon) if self.eta_override is None else self.eta_override
        self.blocks = _GridBlocks(self.cls)
        self._probs = None

    def block_probs(self) -> np.ndarray:
        if self._probs is None:
            b = self.blocks
            logit = -self.eta * b.L + np.log(b.sizes())
            p = np.exp(logit - logit.max())
            self._probs = p / p.sum()
        return self._probs

    def sample(self, rng):
        p = self.block_probs()
        j = min(int(np.searchsorted(np.cumsum(p), rng.random(), side="right")), len(p) - 1)
        lo = self.blocks.pos[j]
        size = int(self.blocks.sizes()[j])
        i = lo + min(int(rng.random() * size), size - 1)
        return self.cls.theta_scalar(i)

    def prob_label_one(self, z):
        k = self.cls.count_at_or_below(z)
        p = self.block_probs()
        starts = np.asarray(self.blocks.pos, dtype=float)
        sizes = self.blocks.sizes()
        above = np.clip(starts + sizes - k, 0.0, sizes)
        return float(p @ (above / sizes))

    def expected_loss(self, x):
        z, y = _label_split(x)
        p1 = self.prob_label_one(z)
        return y * (1.0 - p1) + (1.0 - y) * p1

    def update(self, x):
        z, y = _label_split(x)
        k = self.blocks.split(z)
        self.blocks.add(k, y, 1.0 - y)
        self._probs = None
        self.t += 1


def discretization_exponent(T: int, gamma: float) -> float:
    return 3.0 + math.log(1.0 / gamma) / math.log(T)


def grid_size(T: int, a: float) -> int:
    return int(math.ceil(round(T**a, 6)))


def max_feasible_exponent(T: int, cap: int = EW_CAP) -> float:
    return math.log(cap - 1) / math.log(T)


def discretized_ew_learner(T: int, gamma: float, a: float | None = None, cap: int = EW_CAP) -> ThresholdEW:
    """Exponential weights over ``ceil(T**a)`` thresholds with margin ``gamma / 2``.

    The default exponent is ``3 + log(1/gamma) / log T``.  Grids of ``cap``
    or more thresholds are refused; the error names the largest exponent
    that fits.
    """
    if not 0 < gamma <= 1:
        raise ValueError("gamma must lie in (0, 1]")
    if T < 2:
        raise ValueError("T must be >= 2")
    if a is None:
        a = discretization_exponent(T, gamma)
    n = grid_size(T, a)
    if n >= cap:
        raise MemoryError(f"T**a = {n} thresholds reaches the cap {cap}; largest feasible a = "
                          f"{max_feasible_exponent(T, cap):.6f}")
    learner = ThresholdEW(eta=hedge_eta(n, T), cls=ThresholdGrid(n, gamma / 2.0))
    learner.exponent = a
    return learner


class FollowTheLeader(Learner):
    """Deterministic leader; round one plays the documented default hypothesis."""

    name = "ftl"

    def reset(self, game):
        super().reset(game)
        c = game.cls
        self.cls = c
        if isinstance(c, ThresholdGrid):
            self.blocks = _ContinuumBlocks(c) if c.resolution is None else _GridBlocks(c)
        elif isinstance(c, FiniteTable):
            self.totals = np.zeros(c.size)
        elif isinstance(c, (LinearBall, Simplex)):
            self.total = np.zeros(c.dimension)
        self.leader = default_hypothesis(c)

    def sample(self, rng):
        return self.leader

    def expected_loss(self, x):
        return loss_value(self.cls, self.leader, x, self.game.loss)

    def mean_hypothesis(self):
        return np.asarray(self.leader, dtype=float)

    def prob_label_one(self, z):
        return float(z < self.leader)

    def update(self, x):
        c = self.cls
        if isinstance(c, ThresholdGrid):
            z, y = _label_split(x)
            k = self.blocks.split(z)
            self.blocks.add(k, y, 1.0 - y)
            self.leader = self.blocks.rep(int(np.argmin(self.blocks.L)))
        elif isinstance(c, FiniteTable):
            self.totals += finite_loss_matrix(c, [x], self.game.loss)[0]
            self.leader = int(np.argmin(self.totals))
        else:
            self.total = self.total + np.asarray(x, dtype=float)
            self.leader = best_fixed_comparator(c, [self.total])[0]
        self.t += 1


class OptimisticMirrorDescent(Learner):
    """Mirror descent with a hint ``M_t`` about the next move.

    ``f_t = step(g_{t-1}, M_t)`` is played and ``g_t = step(g_{t-1}, x_t)``.
    ``hint="mean"`` uses the running mean of past moves, ``"last"`` the
    previous move, ``"none"`` the zero vector (plain mirror descent).  With
    ``budget`` (the known sum of squared deviations) the default step size
    is ``R sqrt(lambda) / sqrt(budget)``.
    """

    name = "omd"

    def __init__(self, hint: str = "mean", eta: float | None = None, budget: float | None = None):
        if hint not in ("mean", "last", "none"):
            raise ValueError(f"unknown hint {hint!r}")
        self.hint, self.eta_override, self.budget = hint, eta, budget

    def reset(self, game):
        super().reset(game)
        c = game.cls
        self.reg = Regularizer.for_class(c)
        self.d = c.dimension
        if self.eta_override is not None:
            self.eta = self.eta_override
        else:
            budget = self.budget if self.budget is not None else float(game.horizon)
            self.eta = self.reg.R * math.sqrt(self.reg.strong_convexity) / math.sqrt(max(budget, 1e-12))
        self.g = np.zeros(self.d) if self.reg.kind == "half_squared_euclidean" else np.full(self.d, 1.0 / self.d)
        self.sum_x = np.zeros(self.d)
        self.last = np.zeros(self.d)
        self._play()

    def _hint(self):
        if self.hint == "none" or self.t == 0:
            return np.zeros(self.d)
        return self.sum_x / self.t if self.hint == "mean" else self.last

    def _play(self):
        self.f = omd_step(self.g, self._hint(), self.eta, self.reg)

    def sample(self, rng):
        return self.f

    def mean_hypothesis(self):
        return self.f

    def expected_loss(self, x):
        return float(self.f @ np.asarray(x, dtype=float))

    def update(self, x):
        x = np.asarray(x, dtype=float)
        self.g = omd_step(self.g, x, self.eta, self.reg)
        self.sum_x += x
        self.last = x
        self.t += 1
        self._play()


class FixedHypothesis(Learner):
    """Always plays one hypothesis (useful for singleton classes and baselines)."""

    name = "fixed"

    def __init__(self, hypothesis=None):
        self.h = hypothesis

    def reset(self, game):
        super().reset(game)
        if self.h is None:
            self.h = default_hypothesis(game.cls)

    def sample(self, rng):
        return self.h

    def expected_loss(self, x):
        return loss_value(self.game.cls, self.h, x, self.game.loss)

    def mean_hypothesis(self):
        return np.asarray(self.h, dtype=float)

    def prob_label_one(self, z):
        return float(z < self.h)

    def update(self, x):
        self.t += 1


def make_learner(kind: str, cls: FunctionClass, T: int, **params) -> Learner:
    """Build a learner from its id and keyword parameters."""
    if kind == "ew":
        if isinstance(cls, ThresholdGrid):
            res = params.pop("resolution", None)
            grid = ThresholdGrid(res, params.pop("margin", 0.0)) if res is not None else None
            if grid is None and cls.resolution is None:
                raise ValueError("exponential weights on a continuum class needs a grid resolution")
            return ThresholdEW(eta=params.pop("eta", None), cls=grid)
        return ExponentialWeights(eta=params.pop("eta", None))
    if kind == "discretized_ew":
        return discretized_ew_learner(T, params.pop("gamma"), params.pop("a", None))
    if kind == "ftl":
        return FollowTheLeader()
    if kind == "omd":
        return OptimisticMirrorDescent(params.pop("hint", "mean"), params.pop("eta", None), params.pop("budget", None))
    if kind == "fixed":
        return FixedHypothesis(params.pop("hypothesis", None))
    raise ValueError(f"unknown learner {kind!r}")
