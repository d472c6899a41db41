"""Verification suites behind ``adversim verify`` and the acceptance tests.

Each suite runs a fixed experiment from a master seed and returns a
``SuiteResult``: a list of named checks (each with its own verdict and the
numbers it was decided on) plus the CSV/JSON bytes it produced.  Nothing
time- or thread-dependent goes into those bytes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .adversaries import UniformNoise
from .complexity import (EstimateCI, classical_rademacher, combined_se, composition_check, covering_number,
                         distdep_rademacher, distinct_profiles, dudley_bound, sign_averaged_values, sup_over_class,
                         worstcase_sequential_rademacher)
from .core import FiniteTable, GameSpec, LinearBall, Simplex, ThresholdGrid
from .distributions import Uniform, uniform_categorical
from .engine import (ExperimentSpec, bound_for, lower_bound_check, regret_summary, run_game, verify_bound)
from .learners import discretization_exponent, discretized_ew_learner, grid_size, max_feasible_exponent
from .output import dumps_json, runs_csv, summary
from .seeding import derive_seed, derived_rng
from .trees import (BinaryTree, DeterministicStrategy, IIDStrategy, MarkovStrategy, mirror_nodes,
                    path_node_indices, path_sign_matrix, sample_tree_pairs)

DEFAULT_SEED = 20240601
TOL = 1e-9


@dataclass
class SuiteResult:
    name: str
    checks: list = field(default_factory=list)
    files: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c["verdict"] == "pass" for c in self.checks)

    def verdict(self) -> dict:
        return {"suite": self.name, "verdict": "pass" if self.passed else "fail", "checks": self.checks}

    def check(self, name: str, ok: bool, **info):
        info = {("bound_verdict" if k == "verdict" else k): v for k, v in info.items()}
        self.checks.append({"check": name, "verdict": "pass" if ok else "fail", **_plain(info)})

    def finish(self) -> "SuiteResult":
        self.files["verdict.json"] = dumps_json(self.verdict())
        return self


def _plain(obj):
    """Convert numpy scalars/arrays and estimates into JSON-friendly values."""
    if isinstance(obj, EstimateCI):
        return obj.to_json()
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def _random_table(seed: int, idx: int, shape=(5, 4), scale: float = 1.0) -> FiniteTable:
    return FiniteTable(derived_rng(seed, idx).uniform(-scale, scale, shape))


def _add_game_files(res: SuiteResult, tag: str, records, bound: float | None, verdict: str | None):
    res.files[f"runs_{tag}.csv"] = runs_csv(records, bound)
    res.files[f"summary_{tag}.json"] = dumps_json(summary(records, bound, verdict))


# ---------------------------------------------------------------------------
# complexity suites


def suite_prop2(seed: int = DEFAULT_SEED, threads: int | None = None) -> SuiteResult:
    """i.i.d. strategy: distribution-dependent value equals the classical one."""
    res = SuiteResult("prop2")
    T, n = 6, 20000
    dist = uniform_categorical(4)
    for k in range(5):
        cls = _random_table(seed, k)
        dd = distdep_rademacher(cls, IIDStrategy(dist), T, n, seed=derive_seed(seed, 100 + k), threads=threads)
        cl = classical_rademacher(cls, dist, T, n, seed=derive_seed(seed, 200 + k), threads=threads)
        se = combined_se(dd, cl)
        res.check(f"class_{k}", abs(dd.mean - cl.mean) <= 3 * se, distdep=dd, classical=cl, combined_se=se,
                  gap=abs(dd.mean - cl.mean))
    return res.finish()


def _strategies(seed: int):
    chain = np.array([[0.6, 0.2, 0.1, 0.1], [0.1, 0.6, 0.2, 0.1], [0.1, 0.1, 0.6, 0.2], [0.2, 0.1, 0.1, 0.6]])
    return {
        "iid": IIDStrategy(uniform_categorical(4)),
        "deterministic": DeterministicStrategy([0, 1, 2, 3, 0, 1]),
        "markov": MarkovStrategy.finite_chain([0.25] * 4, chain),
    }


def suite_prop3(seed: int = DEFAULT_SEED, threads: int | None = None) -> SuiteResult:
    """Every strategy's value is at most the worst-case sequential value."""
    res = SuiteResult("prop3")
    T, n = 6, 20000
    cls = _random_table(seed, 0)
    wc = worstcase_sequential_rademacher(cls, T)
    for i, (name, strat) in enumerate(_strategies(seed).items()):
        dd = distdep_rademacher(cls, strat, T, n, seed=derive_seed(seed, 300 + i), threads=threads)
        res.check(f"{name}_le_worstcase", dd.mean <= wc + 3 * dd.std_error, distdep=dd, worstcase=wc)
    return res.finish()


def _path_values(cls, X, T):
    """(n, 2**T) values ``sup_f sum eps_t f(x_t(eps))`` for every tree and path."""
    n = X.shape[0]
    S = path_sign_matrix(T)
    P = X[:, path_node_indices(T)].reshape((n * len(S), T) + X.shape[2:])
    return sup_over_class(cls, P, np.tile(S, (n, 1))).reshape(n, len(S))


def suite_prop4(seed: int = DEFAULT_SEED, threads: int | None = None) -> SuiteResult:
    """Structural identities, evaluated on shared trees and shared signs."""
    res = SuiteResult("prop4")
    T, n = 6, 1000
    rng = derived_rng(seed, 400)
    X, _ = sample_tree_pairs(IIDStrategy(uniform_categorical(4)), T, rng, n)
    base = derived_rng(seed, 401).uniform(-0.4, 0.4, (5, 4))
    F = FiniteTable(base)
    vF = _path_values(F, X, T)
    S = path_sign_matrix(T)

    # (i) subset monotonicity
    G = FiniteTable(base[[0, 2, 4]])
    d = _path_values(G, X, T) - vF
    res.check("subset_monotone", d.max() <= TOL, max_excess=float(d.max()))

    # (ii) convex mixtures of rows change nothing
    w = derived_rng(seed, 402).dirichlet(np.ones(5), size=10)
    H = FiniteTable(np.vstack([base, w @ base]))
    d = np.abs(_path_values(H, X, T) - vF)
    res.check("convex_hull_invariant", d.max() <= TOL, max_abs_diff=float(d.max()))

    # (iii) |c|-homogeneity; c < 0 pairs each tree with its mirror image and negated signs
    d = np.abs(_path_values(FiniteTable(2.5 * base), X, T) - 2.5 * vF)
    res.check("homogeneity_c_2.5", d.max() <= TOL, max_abs_diff=float(d.max()))
    neg = _path_values(FiniteTable(-base), X, T)
    mir = _path_values(F, mirror_nodes(X, axis=1), T)
    flip = np.array([int(np.flatnonzero((S == -s).all(axis=1))[0]) for s in S])
    d = np.abs(neg - mir[:, flip])
    res.check("homogeneity_c_-1", d.max() <= TOL, max_abs_diff=float(d.max()))
    avg_neg, avg_pos = neg.mean(axis=1), vF.mean(axis=1)
    diff = EstimateCI.from_samples(avg_neg - avg_pos)
    res.check("homogeneity_c_-1_in_mean", abs(diff.mean) <= 3 * diff.std_error, paired_difference=diff)

    # (iv) translation by a fixed function h: the extra sum vanishes per tree
    h = derived_rng(seed, 403).uniform(-0.4, 0.4, 4)
    shifted = FiniteTable(base + h[None, :])
    a = sign_averaged_values(shifted, X)
    b = sign_averaged_values(F, X)
    d = np.abs(a - b)
    res.check("translation_invariant", d.max() <= TOL, max_abs_diff=float(d.max()))
    return res.finish()


def suite_dudley(seed: int = DEFAULT_SEED, threads: int | None = None) -> SuiteResult:
    """The Dudley entropy bound dominates the complexity estimate."""
    res = SuiteResult("dudley")
    T = 6
    strat = IIDStrategy(uniform_categorical(4))
    for k in range(5):
        cls = _random_table(seed, 500 + k)
        du = dudley_bound(cls, strat, T, 200, seed=derive_seed(seed, 510 + k), threads=threads)
        dd = distdep_rademacher(cls, strat, T, 20000, seed=derive_seed(seed, 520 + k), threads=threads)
        se = combined_se(du, dd)
        res.check(f"class_{k}", du.mean >= dd.mean - 3 * se, dudley=du, distdep=dd, combined_se=se)
    return res.finish()


def suite_cover(seed: int = DEFAULT_SEED, threads: int | None = None) -> SuiteResult:
    """Exact covering numbers on small instances."""
    res = SuiteResult("cover")
    consts = FiniteTable(np.array([[0.0] * 4, [1.0] * 4]))
    strat = IIDStrategy(uniform_categorical(4))
    rng = derived_rng(seed, 600)
    got = []
    for i in range(20):
        depth = 1 + i % 6
        X, _ = sample_tree_pairs(strat, depth, rng, 1)
        tree = BinaryTree(depth, X[0])
        n5, n4 = covering_number(consts, tree, 0.5), covering_number(consts, tree, 0.4)
        got.append((int(n5), int(n4), bool(n5.certified and n4.certified)))
    res.check("constants_N(0.5)=1_N(0.4)=2", all(g == (1, 2, True) for g in got), values=got)

    rng = derived_rng(seed, 601)
    rows = []
    for k in range(10):
        n_unique = int(rng.integers(2, 7))
        uniq = rng.uniform(-1, 1, (n_unique, 4))
        dup = uniq[rng.integers(0, n_unique, int(rng.integers(0, 4)))]
        cls = FiniteTable(np.vstack([uniq, dup]))
        depth = int(rng.integers(2, 6))
        X, _ = sample_tree_pairs(strat, depth, rng, 1)
        tree = BinaryTree(depth, X[0])
        rows.append((int(covering_number(cls, tree, 0.0)), distinct_profiles(cls, tree)))
    res.check("alpha_0_profile_count", all(a == b for a, b in rows), values=rows)
    return res.finish()


# ---------------------------------------------------------------------------
# game suites


def _linear_games(d: int, T: int):
    return {"ball": GameSpec(T, LinearBall(d), "linear", "plain"),
            "simplex": GameSpec(T, Simplex(d), "linear", "plain")}


def _constrained_suite(name: str, kind: str, seed: int, threads, T: int, level: float, hint: str,
                       replicates: int = 100, d: int = 16) -> SuiteResult:
    res = SuiteResult(name)
    key = "sigma" if kind == "variance" else "delta"
    for j, (geo, game) in enumerate(_linear_games(d, T).items()):
        norm = "euclidean" if geo == "ball" else "sup"
        spec = ExperimentSpec(game, "omd", "constrained", {"hint": hint, "budget": T * level**2},
                              {"constraint": kind, key: level, "norm": norm}, replicates,
                              derive_seed(seed, 700 + j), id=f"{name}_{geo}")
        records = run_game(spec, threads)
        bound = bound_for(kind, game, **{key: level})
        v = verify_bound(records, bound, game)
        res.check(geo, v["verdict"] == "pass", **v, params=bound.params)
        _add_game_files(res, geo, records, bound.value, v["verdict"])
    return res.finish()


def suite_prop5(seed: int = DEFAULT_SEED, threads: int | None = None) -> SuiteResult:
    """Variance-constrained adversary against optimistic mirror descent."""
    return _constrained_suite("prop5", "variance", seed, threads, T=1000, level=0.1, hint="mean")


def suite_prop6(seed: int = DEFAULT_SEED, threads: int | None = None) -> SuiteResult:
    """Slowly changing adversary against optimistic mirror descent."""
    return _constrained_suite("prop6", "slow_change", seed, threads, T=2000, level=0.05, hint="last")


def _smoothed_run(T: int, gamma: float, replicates: int, seed: int, threads):
    a = max_feasible_exponent(T)
    game = GameSpec(T, ThresholdGrid(None, gamma / 2.0), "absolute", "smoothed")
    spec = ExperimentSpec(game, lambda: discretized_ew_learner(T, gamma, a), "halving", replicates=replicates,
                          master_seed=seed, noise_gamma=gamma, id=f"smoothed_T{T}")
    return game, a, run_game(spec, threads)


def collision_frequency(T: int, gamma: float, runs: int, seed: int, z: float = 0.5) -> tuple[EstimateCI, float]:
    """Fraction of runs in which two of ``T`` noisy copies of ``z`` share a grid cell.

    The grid is the discretization used by the smoothed learner; returns the
    estimate and the predicted ceiling ``1 / (gamma T**(a-2))``.
    """
    a = discretization_exponent(T, gamma)
    grid = ThresholdGrid(grid_size(T, a), gamma / 2.0)
    noise = UniformNoise(gamma)
    rng = derived_rng(seed, 0)
    hits = np.empty(runs)
    for r in range(runs):
        cells = grid.count_at_or_below(z + noise.sample(rng, T))
        hits[r] = len(np.unique(cells)) < T
    return EstimateCI.from_samples(hits), 1.0 / (gamma * T ** (a - 2.0))


def suite_prop7(seed: int = DEFAULT_SEED, threads: int | None = None) -> SuiteResult:
    """Discretized exponential weights against the noisy halving adversary."""
    res = SuiteResult("prop7")
    gamma, reps = 0.01, 50
    per_T = {}
    for i, T in enumerate((250, 500, 1000, 2000)):
        game, a, records = _smoothed_run(T, gamma, reps, derive_seed(seed, 800 + i), threads)
        per_T[T] = (game, a, records)
    game, a, records = per_T[1000]
    bound = bound_for("smoothed_threshold", game, gamma=gamma)
    v = verify_bound(records, bound, game)
    res.check("bound_T1000", v["verdict"] == "pass", **v, exponent=a, grid_size=grid_size(1000, a))
    _add_game_files(res, "T1000", records, bound.value, v["verdict"])
    rates = [regret_summary(per_T[T][2]).mean / T for T in sorted(per_T)]
    res.check("regret_rate_decreasing", all(x > y for x, y in zip(rates, rates[1:])),
              horizons=sorted(per_T), regret_per_round=rates,
              exponents=[per_T[T][1] for T in sorted(per_T)])
    freq, ceiling = collision_frequency(100, 0.1, 1000, derive_seed(seed, 810))
    res.check("collision_frequency", freq.mean <= ceiling + 3 * freq.std_error, frequency=freq, ceiling=ceiling,
              T=100, gamma=0.1, exponent=discretization_exponent(100, 0.1))
    return res.finish()


def suite_halving(seed: int = DEFAULT_SEED, threads: int | None = None) -> SuiteResult:
    """Without noise the halving adversary forces linear regret."""
    res = SuiteResult("halving")
    for i, T in enumerate((64, 256)):
        game = GameSpec(T, ThresholdGrid(None), "absolute", "supervised")
        for j, (learner, params) in enumerate((("ew", {"resolution": T**3}), ("ftl", {}))):
            spec = ExperimentSpec(game, learner, "halving", params, {}, 200, derive_seed(seed, 900 + 10 * i + j),
                                  id=f"halving_{learner}_T{T}")
            records = run_game(spec, threads)
            s = regret_summary(records)
            res.check(f"{learner}_T{T}", s.mean >= 0.4 * T, mean_regret=s, threshold=0.4 * T)
            _add_game_files(res, f"{learner}_T{T}", records, None, None)
            if T == 64 and learner == "ew":
                bound = bound_for("smoothed_threshold", game, gamma=1.0)
                v = verify_bound(records, bound)
                res.check("noiseless_exceeds_smoothed_bound_T64", v["verdict"] == "fail", **v)
    return res.finish()


def suite_lemma4(seed: int = DEFAULT_SEED, threads: int | None = None) -> SuiteResult:
    """Rademacher labels force regret of at least the classical complexity."""
    res = SuiteResult("lemma4")
    for j, learner in enumerate(("ew", "ftl")):
        out = lower_bound_check(ThresholdGrid(16), Uniform(), learner, 200, 2000, seed=derive_seed(seed, 1000 + j),
                                n_rademacher=20000, threads=threads)
        records = out.pop("records")
        res.check(learner, out["verdict"] == "pass", **out)
        _add_game_files(res, learner, records, None, out["verdict"])
    return res.finish()


def suite_cor5(seed: int = DEFAULT_SEED, threads: int | None = None) -> SuiteResult:
    """i.i.d. points with adversarial labels stay learnable."""
    res = SuiteResult("cor5")
    cls = ThresholdGrid(64)
    rates = []
    horizons = (250, 500, 1000, 2000)
    for i, T in enumerate(horizons):
        game = GameSpec(T, cls, "absolute", "supervised")
        spec = ExperimentSpec(game, "ew", "hybrid", {}, {"x_dist": Uniform(), "label_policy": "anti_learner"}, 50,
                              derive_seed(seed, 1100 + i), analytic=True, id=f"hybrid_T{T}")
        records = run_game(spec, threads)
        rates.append(regret_summary(records).mean / T)
        _add_game_files(res, f"T{T}", records, None, None)
    res.check("regret_rate_decreasing", all(x > y for x, y in zip(rates, rates[1:])), horizons=list(horizons),
              regret_per_round=rates)
    composed, classical = composition_check(cls, Uniform(), 6, 2000, seed=derive_seed(seed, 1110), threads=threads)
    res.check("composition_le_classical", composed.mean <= classical.mean + 3 * combined_se(composed, classical),
              composed=composed, classical=classical)
    return res.finish()


SUITES: dict[str, Callable[..., SuiteResult]] = {
    "prop2": suite_prop2,
    "prop3": suite_prop3,
    "prop4": suite_prop4,
    "prop5": suite_prop5,
    "prop6": suite_prop6,
    "prop7": suite_prop7,
    "lemma4": suite_lemma4,
    "cor5": suite_cor5,
    "dudley": suite_dudley,
    "halving": suite_halving,
    "cover": suite_cover,
}


def run_suite(name: str, seed: int = DEFAULT_SEED, threads: int | None = None) -> SuiteResult:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    return SUITES[name](seed, threads)
