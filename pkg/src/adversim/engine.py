"""Round-by-round game runner, closed-form bounds and verdicts.

Per round the replicate's generator is consumed in a fixed order: the
learner's draw of ``f_t`` first, then the adversary's draws, then the noise
draw (smoothed protocol only).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .adversaries import (Adversary, Constraint, ConstrainedAdversary, ConstraintViolation, HalvingAdversary,
                          HybridAdversary, ObliviousAdversary, RademacherLabelAdversary, SequenceAdversary,
                          UniformNoise, omega_additive, omega_threshold)
from .complexity import EstimateCI, classical_rademacher, combined_se
from .core import (FunctionClass, GameSpec, LinearBall, RegretRecord, Simplex, ThresholdGrid,
                   best_fixed_comparator, comparator_round_losses, loss_value, prefix_optimal_losses)
from .distributions import Distribution
from .learners import FollowTheLeader, Learner, make_learner
from .seeding import derive_seed, parallel_map
from .trees import IIDStrategy


@dataclass
class ExperimentSpec:
    game: GameSpec
    learner: str | Callable[[], Learner]
    adversary: str | Callable[[], Adversary]
    learner_params: dict = field(default_factory=dict)
    adversary_params: dict = field(default_factory=dict)
    replicates: int = 1
    master_seed: int = 0
    noise_gamma: float | None = None
    analytic: bool = False
    prefix_comparator: bool = False
    id: str = "experiment"

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if self.game.protocol == "smoothed" and self.noise_gamma is None:
            raise ValueError("the smoothed protocol needs noise_gamma")
        # resolve ids early so typos fail before any work
        self.make_learner()
        self.make_adversary()

    def make_learner(self) -> Learner:
        if callable(self.learner):
            return self.learner()
        return make_learner(self.learner, self.game.cls, self.game.horizon, **dict(self.learner_params))

    def make_adversary(self) -> Adversary:
        if callable(self.adversary):
            return self.adversary()
        return make_adversary(self.adversary, self.game, **dict(self.adversary_params))


def make_constraint(params: dict) -> Constraint:
    kind = params.get("constraint", "none")
    return Constraint(kind, sigma=params.get("sigma"), delta=params.get("delta"), norm=params.get("norm", "euclidean"))


def make_adversary(kind: str, game: GameSpec, **params) -> Adversary:
    if kind == "constrained":
        return ConstrainedAdversary(make_constraint(params), params.get("policy", "anti_learner"),
                                    params.get("scale", 1.0))
    if kind == "halving":
        return HalvingAdversary()
    if kind == "rademacher_labels":
        return RademacherLabelAdversary(params["x_dist"]) if "x_dist" in params else RademacherLabelAdversary()
    if kind == "hybrid":
        args = {k: params[k] for k in ("x_dist", "label_policy") if k in params}
        return HybridAdversary(**args)
    if kind == "iid":
        dist = params["dist"]
        return ObliviousAdversary(IIDStrategy(dist))
    if kind == "oblivious":
        return ObliviousAdversary(params["strategy"])
    if kind == "sequence":
        return SequenceAdversary(params["sequence"])
    raise ValueError(f"unknown adversary {kind!r}")


def _omega_for(cls: FunctionClass):
    return omega_threshold if isinstance(cls, ThresholdGrid) else omega_additive


def run_replicate(spec: ExperimentSpec, r: int) -> RegretRecord:
    game = spec.game
    seed = derive_seed(spec.master_seed, r)
    rng = np.random.default_rng(seed)
    learner = spec.make_learner()
    adversary = spec.make_adversary()
    learner.reset(game)
    adversary.reset(game, rng)
    noise = UniformNoise(spec.noise_gamma) if game.protocol == "smoothed" else None
    omega = _omega_for(game.cls)
    constraint = getattr(adversary, "constraint", None)
    T = game.horizon
    losses = np.empty(T)
    realized = []
    for t in range(1, T + 1):
        h = learner.sample(rng)
        x = adversary.move(t, learner)
        if constraint is not None and not constraint.last_move_ok(adversary.state.history):
            raise ConstraintViolation(f"{spec.id}: constraint violated at round {t}")
        if noise is not None:
            x = omega(x, noise.sample(rng))
        adversary.observe(x)
        losses[t - 1] = learner.expected_loss(x) if spec.analytic else loss_value(game.cls, h, x, game.loss)
        learner.update(x)
        realized.append(x)
    comp, _ = best_fixed_comparator(game.cls, realized, game.loss)
    comp_losses = comparator_round_losses(game.cls, comp, realized, game.loss)
    prefix = prefix_optimal_losses(game.cls, realized, game.loss) if spec.prefix_comparator else None
    return RegretRecord.build(losses, comp_losses, seed, prefix)


def run_game(spec: ExperimentSpec, threads: int | None = None) -> list[RegretRecord]:
    """All replicates of an experiment, in replicate order."""
    return parallel_map(lambda r: run_replicate(spec, r), list(range(spec.replicates)), threads)


# ---------------------------------------------------------------------------
# bounds


@dataclass(frozen=True)
class BoundTrace:
    bound_id: str
    value: float
    params: dict

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("bound values are nonnegative")


def simplex_radius(d: int) -> float:
    """``R`` with ``R**2 = log d`` for the entropic regularizer."""
    return math.sqrt(math.log(d))


def variance_bound(R: float, lam: float, sigma) -> float:
    """``min_alpha 2 R^2 / alpha + (alpha / lambda) sum sigma_t^2 = 2 sqrt(2) R sqrt(sum sigma_t^2 / lambda)``."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    s = np.asarray(sigma, dtype=float)
    if R < 0 or np.any(s < 0):
        raise ValueError("inputs must be nonnegative")
    v = float(np.sum(s**2))
    if v == 0.0:
        return 0.0
    return 2.0 * math.sqrt(2.0) * R * math.sqrt(v / lam)


def slow_change_bound(R: float, lam: float, delta: float, T: int) -> float:
    """``2 R delta sqrt(2 T / lambda)``."""
    if lam <= 0 or R < 0 or delta < 0 or T < 0:
        raise ValueError("inputs must be nonnegative and lambda positive")
    return 2.0 * R * delta * math.sqrt(2.0 * T / lam)


def smoothed_threshold_bound(T: int, gamma: float) -> float:
    """``2 + sqrt(2 T (4 log T + log(1/gamma)))``."""
    if T < 2 or not 0 < gamma <= 1:
        raise ValueError("need T >= 2 and gamma in (0, 1]")
    return 2.0 + math.sqrt(2.0 * T * (4.0 * math.log(T) + math.log(1.0 / gamma)))


def bound_for(kind: str, game: GameSpec, **params) -> BoundTrace:
    """The bound of ``kind`` evaluated with the game's parameters."""
    T = game.horizon
    c = game.cls
    if kind in ("variance", "slow_change"):
        if isinstance(c, Simplex):
            R, lam, d = simplex_radius(c.dimension), 1.0, c.dimension
        elif isinstance(c, LinearBall):
            R, lam, d = c.radius, params.get("lambda", 1.0), c.dimension
        else:
            raise ValueError(f"{kind} bound needs a linear game, got {c.variant}")
        if kind == "variance":
            sigma = params["sigma"]
            sched = np.full(T, float(sigma)) if np.ndim(sigma) == 0 else np.asarray(sigma, dtype=float)
            return BoundTrace(kind, variance_bound(R, lam, sched), {"R": R, "lambda": lam, "sigma": sigma, "T": T, "d": d})
        delta = params["delta"]
        return BoundTrace(kind, slow_change_bound(R, lam, delta, T), {"R": R, "lambda": lam, "delta": delta, "T": T, "d": d})
    if kind == "smoothed_threshold":
        if not isinstance(c, ThresholdGrid):
            raise ValueError("smoothed threshold bound needs a threshold game")
        gamma = params["gamma"]
        return BoundTrace(kind, smoothed_threshold_bound(T, gamma), {"gamma": gamma, "T": T})
    if kind == "constant":
        return BoundTrace(kind, float(params["value"]), {"T": T})
    raise ValueError(f"unknown bound {kind!r}")


_FAMILIES = {"variance": (LinearBall, Simplex), "slow_change": (LinearBall, Simplex),
             "smoothed_threshold": (ThresholdGrid,)}


def verify_bound(records: list[RegretRecord], bound: BoundTrace, game: GameSpec | None = None) -> dict:
    """Pass iff the largest final regret over replicates is at most the bound."""
    if not records:
        raise ValueError("no records to verify")
    T = bound.params.get("T")
    if T is not None and any(r.horizon != T for r in records):
        raise ValueError(f"bound {bound.bound_id} is for T={T} but records have T={records[0].horizon}")
    if game is not None and bound.bound_id in _FAMILIES:
        if not isinstance(game.cls, _FAMILIES[bound.bound_id]):
            raise ValueError(f"bound {bound.bound_id} does not apply to a {game.cls.variant} game")
    final = np.array([r.final_regret for r in records])
    slack = bound.value - final
    return {
        "verdict": "pass" if final.max() <= bound.value else "fail",
        "bound": bound.value,
        "max_final_regret": float(final.max()),
        "mean_final_regret": float(final.mean()),
        "slack": {"min": float(slack.min()), "mean": float(slack.mean()), "max": float(slack.max())},
    }


def regret_summary(records: list[RegretRecord]) -> EstimateCI:
    final = np.array([r.final_regret for r in records])
    if len(final) < 2:
        return EstimateCI(float(final.mean()), 0.0, len(final))
    return EstimateCI.from_samples(final)


def lower_bound_check(cls: FunctionClass, x_dist: Distribution, learner: str, T: int, replicates: int,
                      seed: int = 0, n_rademacher: int = 20000, threads: int | None = None,
                      learner_params: dict | None = None) -> dict:
    """Mean regret against Rademacher labels versus the classical Rademacher complexity.

    Passes iff the mean measured regret is at least the complexity estimate
    minus three combined standard errors.
    """
    game = GameSpec(T, cls, "absolute", "supervised")
    spec = ExperimentSpec(game, learner, "rademacher_labels", learner_params or {}, {"x_dist": x_dist},
                          replicates, seed, id=f"lower_bound_{learner}")
    records = run_game(spec, threads)
    reg = regret_summary(records)
    rad = classical_rademacher(cls, x_dist, T, n_rademacher, seed=derive_seed(seed, 10**6), threads=threads)
    se = combined_se(reg, rad)
    return {
        "verdict": "pass" if reg.mean >= rad.mean - 3 * se else "fail",
        "mean_regret": reg.to_json(),
        "rademacher": rad.to_json(),
        "combined_se": se,
        "records": records,
    }
