"""Adversaries: oblivious, constrained, smoothed, hybrid and the lower-bound constructions.

An adversary object holds one game's state.  The engine calls
``move(t, learner)`` after the learner has committed to ``q_t`` and then
``observe(x)`` with the realized (possibly perturbed) point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable

import numpy as np

from .distributions import Distribution, Uniform
from .trees import ObliviousStrategy

TOL = 1e-12


class ConstraintViolation(RuntimeError):
    pass


class History(list):
    """Move list that also keeps the running sum of numeric moves."""

    def __init__(self, items=()):
        super().__init__()
        self.total = None
        for x in items:
            self.append(x)

    def append(self, x):
        super().append(x)
        if isinstance(x, np.ndarray):
            self.total = x.astype(float) if self.total is None else self.total + x

    def mean(self, upto: int | None = None):
        """Mean of the first ``upto`` moves (all by default)."""
        n = len(self) if upto is None else upto
        if self.total is not None and n in (len(self), len(self) - 1):
            s = self.total if n == len(self) else self.total - self[-1]
            return s / n
        return np.mean(np.asarray(self[:n], dtype=float), axis=0)


@dataclass
class AdversaryState:
    rng: np.random.Generator
    history: History = field(default_factory=History)
    extra: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# constraints


def _dual_norm(v, norm):
    v = np.asarray(v, dtype=float)
    return math.sqrt(float(v @ v)) if norm == "euclidean" else float(np.abs(v).max())


def project_onto_ball(point, center, radius, norm="euclidean"):
    """Metric projection onto ``{x : ||x - center|| <= radius}`` (l2 radial, or
    coordinate clipping for the sup norm)."""
    p = np.asarray(point, dtype=float)
    c = np.asarray(center, dtype=float)
    if norm == "euclidean":
        d = p - c
        n = math.sqrt(float(d @ d))
        return p.copy() if n <= radius else c + d * (radius / n)
    return np.clip(p, c - radius, c + radius)


@dataclass
class Constraint:
    """Restriction ``C_t`` on the adversary's moves.

    ``variance``: ``||x_t - mean(x_{1:t-1})|| <= sigma_t``; ``slow_change``:
    ``||x_t - x_{t-1}|| <= delta``; ``custom``: ``predicate(history, x)``
    with optional ``projector(history, x)``.  The first move is free.
    """

    kind: str = "none"
    sigma: Any = None
    delta: float | None = None
    norm: str = "euclidean"
    predicate: Callable | None = None
    projector: Callable | None = None

    def __post_init__(self):
        if self.kind not in ("none", "variance", "slow_change", "custom"):
            raise ValueError(f"unknown constraint {self.kind!r}")
        if self.norm not in ("euclidean", "sup"):
            raise ValueError(f"unknown constraint norm {self.norm!r}")
        if self.kind == "variance" and self.sigma is None:
            raise ValueError("variance constraint needs sigma")
        if self.kind == "slow_change" and (self.delta is None or self.delta < 0):
            raise ValueError("slow_change constraint needs delta >= 0")
        if self.kind == "custom" and self.predicate is None:
            raise ValueError("custom constraint needs a predicate")

    def sigma_at(self, t: int) -> float:
        s = self.sigma
        if isinstance(s, (int, float)):
            return float(s)
        if callable(s):
            return float(s(t))
        if np.ndim(s) == 0:
            return float(s)
        return float(np.asarray(s)[t - 1])

    def sigma_schedule(self, T: int) -> np.ndarray:
        return np.array([self.sigma_at(t) for t in range(1, T + 1)])

    def ball(self, history, upto: int | None = None):
        """(center, radius) of the feasible set after the first ``upto`` moves
        (all of ``history`` by default), or None if the next move is free."""
        n = len(history) if upto is None else upto
        if self.kind in ("none", "custom") or n == 0:
            return None
        if self.kind == "variance":
            m = history.mean(n) if isinstance(history, History) else np.mean(np.asarray(history[:n], dtype=float), axis=0)
            return m, self.sigma_at(n + 1)
        return np.asarray(history[n - 1], dtype=float), float(self.delta)

    def last_move_ok(self, history) -> bool:
        """Whether the most recent move of ``history`` satisfied the constraint."""
        n = len(history) - 1
        if self.kind == "custom":
            return bool(self.predicate(history[:n], history[n]))
        b = self.ball(history, n)
        if b is None:
            return True
        return _dual_norm(np.asarray(history[n], dtype=float) - b[0], self.norm) <= b[1] + TOL

    def satisfied(self, history, x) -> bool:
        if self.kind == "custom":
            return bool(self.predicate(history, x))
        b = self.ball(history)
        if b is None:
            return True
        center, radius = b
        return _dual_norm(np.asarray(x, dtype=float) - center, self.norm) <= radius + TOL

    def project(self, history, x):
        if self.kind == "custom":
            if self.projector is None:
                raise ConstraintViolation("custom constraint rejected the proposal and has no projector")
            return self.projector(history, x)
        b = self.ball(history)
        if b is None:
            return np.asarray(x, dtype=float)
        return project_onto_ball(x, b[0], b[1], self.norm)


def iid_move(state: AdversaryState, dist: Distribution):
    """Fresh draw from ``dist``; history is ignored."""
    x = dist.sample(state.rng, 1)[0]
    state.history.append(x)
    return x


def constrained_move(state: AdversaryState, constraint: Constraint, proposal, domain_projector=None):
    """The proposal if feasible, otherwise its projection onto the feasible set.

    ``domain_projector`` (a projection onto a convex domain containing the
    history) is applied afterwards; being non-expansive it keeps the result
    feasible.
    """
    x = np.asarray(proposal, dtype=float)
    if constraint.kind != "custom" or not constraint.satisfied(state.history, x):
        # metric projection leaves feasible points unchanged
        x = np.asarray(constraint.project(state.history, x), dtype=float)
    if domain_projector is not None:
        x = domain_projector(x)
    if not constraint.satisfied(state.history, x):
        raise ConstraintViolation(f"move at round {len(state.history) + 1} violates the {constraint.kind} constraint")
    state.history.append(x)
    return x


# ---------------------------------------------------------------------------
# noise


@dataclass(frozen=True)
class UniformNoise:
    """``s ~ Unif[-gamma/2, gamma/2]``; one uniform draw per round even when gamma = 0."""

    gamma: float

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")

    def sample(self, rng, size=None):
        u = rng.random(size)
        return self.gamma * (u - 0.5)


def omega_threshold(x, s):
    """Perturb ``z`` only: ``((z, y), s) -> (z + s, y)``; exact for fractional ``z``."""
    z, y = x
    if isinstance(z, Fraction):
        return (z + Fraction(float(s)), y)
    return (float(z) + float(s), y)


def omega_additive(x, s):
    return np.asarray(x, dtype=float) + s


def smoothed_move(state: AdversaryState, inner, noise, omega=omega_threshold, t: int = 1, learner=None):
    """Intended move of ``inner``, the noise draw and the perturbed point."""
    x = inner.move(t, learner)
    s = noise.sample(state.rng) if hasattr(noise, "gamma") else noise.sample(state.rng, 1)[0]
    return x, omega(x, s), s


# ---------------------------------------------------------------------------
# adversary objects


class Adversary:
    name = "abstract"
    constraint: Constraint | None = None

    def reset(self, game, rng: np.random.Generator):
        self.game = game
        self.state = AdversaryState(rng)

    def move(self, t: int, learner):
        raise NotImplementedError

    def observe(self, x) -> None:
        pass


class ObliviousAdversary(Adversary):
    """Plays a fixed oblivious strategy (i.i.d., deterministic, Markov, custom)."""

    name = "oblivious"

    def __init__(self, strategy: ObliviousStrategy):
        self.strategy = strategy

    def move(self, t, learner):
        st = self.strategy
        hist = None
        if st.memory == "last" and self.state.history:
            hist = np.asarray([self.state.history[-1]], dtype=float)
        elif st.memory == "full":
            hist = np.asarray(self.state.history, dtype=float)[None]
        x = st.sample(self.state.rng, t, hist, 1)[0]
        self.state.history.append(x)
        return x


class SequenceAdversary(Adversary):
    """Replays a fixed sequence of points."""

    name = "sequence"

    def __init__(self, sequence):
        self.sequence = list(sequence)

    def move(self, t, learner):
        if t > len(self.sequence):
            raise ValueError(f"sequence adversary has no move for round {t}")
        x = self.sequence[t - 1]
        self.state.history.append(x)
        return x


def box_projector(radius=1.0):
    return lambda x: np.clip(x, -radius, radius)


def ball_projector(radius=1.0):
    return lambda x: project_onto_ball(x, 0.0, radius, "euclidean")


class ConstrainedAdversary(Adversary):
    """Moves inside a constraint set, aimed against the learner's current play.

    The proposal is the unit-norm direction maximizing ``<E f_t - c, x>`` in
    the move norm (``c`` is the class center: zero for a ball, uniform
    weights for the simplex), or a random direction when that vanishes.  It
    is projected onto the constraint ball and then onto the domain (the unit
    ball for l2 moves, the box ``[-1, 1]^d`` for sup-norm moves).
    """

    name = "constrained"

    def __init__(self, constraint: Constraint, policy: str | Callable = "anti_learner", scale: float = 1.0):
        self.constraint = constraint
        self.policy = policy
        self.scale = scale

    def reset(self, game, rng):
        super().reset(game, rng)
        self.d = game.cls.dimension
        self.center = np.full(self.d, 1.0 / self.d) if game.cls.variant == "Simplex" else np.zeros(self.d)
        if self.constraint.norm == "euclidean":
            self.domain = ball_projector(self.scale)
        else:
            self.domain = box_projector(self.scale)

    def _direction(self, v):
        if self.constraint.norm == "euclidean":
            n = math.sqrt(float(v @ v))
            return v / n if n > 1e-15 else None
        if np.abs(v).max() <= 1e-15:
            return None
        return np.sign(v)

    def proposal(self, learner):
        if callable(self.policy):
            return np.asarray(self.policy(self.state.history, learner, self.state.rng), dtype=float)
        rng = self.state.rng
        g = rng.standard_normal(self.d)  # drawn every round for a fixed consumption order
        if self.policy == "anti_learner":
            u = self._direction(np.asarray(learner.mean_hypothesis(), dtype=float) - self.center)
            if u is not None:
                return self.scale * u
        elif self.policy != "random":
            raise ValueError(f"unknown policy {self.policy!r}")
        return self.scale * self._direction(g)

    def move(self, t, learner):
        return constrained_move(self.state, self.constraint, self.proposal(learner), self.domain)


def anti_learner_label(learner, z) -> int:
    """The label the learner assigns probability at most 1/2 (ties give 1)."""
    return 1 if learner.prob_label_one(z) <= 0.5 else 0


class HalvingAdversary(Adversary):
    """Plays the midpoint of the consistent-threshold interval with the label
    the learner considers less likely.

    The version space ``(lo, hi]`` starts as the class's threshold range and
    is kept in exact rational arithmetic.  A
    realized point inside it shrinks it consistently with its label; points
    that land elsewhere (after noise) leave it unchanged.
    """

    name = "halving"

    def reset(self, game, rng):
        super().reset(game, rng)
        c = game.cls
        lo, hi = getattr(c, "lo", 0.0), getattr(c, "hi", 1.0)
        self.lo, self.hi = Fraction(lo), Fraction(hi)

    @property
    def version_space(self):
        return self.lo, self.hi

    def move(self, t, learner):
        z = (self.lo + self.hi) / 2
        y = anti_learner_label(learner, z)
        x = (z, y)
        self.state.history.append(x)
        return x

    def observe(self, x):
        z, y = x
        z = z if isinstance(z, Fraction) else Fraction(float(z))
        if self.lo <= z < self.hi:
            if y == 1:
                self.lo = z
            else:
                self.hi = z


def rademacher_label_move(state: AdversaryState, x_dist: Distribution):
    x = x_dist.sample(state.rng, 1)[0]
    y = int(state.rng.random() < 0.5)
    state.history.append((x, y))
    return x, y


def hybrid_move(state: AdversaryState, x_dist: Distribution, label_policy, learner=None):
    """``x`` i.i.d. from ``x_dist``; ``y`` from an adaptive rule of the history, ``x`` and the learner."""
    x = x_dist.sample(state.rng, 1)[0]
    if label_policy == "rademacher":
        y = int(state.rng.random() < 0.5)
    elif label_policy in ("anti_learner", "majority_opposite"):
        y = anti_learner_label(learner, x)
    elif callable(label_policy):
        y = int(label_policy(state.history, x, learner, state.rng))
    else:
        raise ValueError(f"unknown label policy {label_policy!r}")
    state.history.append((x, y))
    return x, y


class RademacherLabelAdversary(Adversary):
    name = "rademacher_labels"

    def __init__(self, x_dist: Distribution = Uniform()):
        self.x_dist = x_dist

    def move(self, t, learner):
        x, y = rademacher_label_move(self.state, self.x_dist)
        return (float(x), y) if np.ndim(x) == 0 else (x, y)


class HybridAdversary(Adversary):
    name = "hybrid"

    def __init__(self, x_dist: Distribution = Uniform(), label_policy="anti_learner"):
        self.x_dist = x_dist
        self.label_policy = label_policy

    def move(self, t, learner):
        x, y = hybrid_move(self.state, self.x_dist, self.label_policy, learner)
        return (float(x), y) if np.ndim(x) == 0 else (x, y)


def bin_collisions(z, n_bins: int) -> bool:
    """Whether two of the points fall in the same of ``n_bins`` equal bins of [0, 1]."""
    b = np.floor(np.asarray(z, dtype=float) * n_bins).astype(np.int64)
    return len(np.unique(b)) < len(b)
