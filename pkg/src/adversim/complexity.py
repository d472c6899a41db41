"""Rademacher-type complexities, sequential covering numbers and the Dudley bound.

All Monte Carlo estimators work in fixed-size chunks; chunk ``i`` draws from
``derived_rng(seed, i)`` and per-sample values are concatenated in chunk
order before reduction, so results do not depend on the thread count.

When the depth is small (``T <= EXACT_SIGN_DEPTH``) the average over sign
vectors is taken exactly over all ``2**T`` paths of each sampled tree;
otherwise one path per sample is drawn along with the tree.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import (DomainError, FiniteTable, FunctionClass, LinearBall, Simplex, ThresholdGrid,
                   threshold_prefix_scores)
from .distributions import Distribution
from .seeding import chunk_sizes, derived_rng, parallel_map
from .trees import (BinaryTree, ObliviousStrategy, path_node_indices, path_sign_matrix, sample_leftmost,
                    sample_paths, sample_tree_pairs)

EXACT_SIGN_DEPTH = 12
CHUNK = 512
INNER_MC = 256
WORK_BUDGET = 10**8
DENSE_GRID_MAX = 4096


class BudgetError(RuntimeError):
    """An exact computation would exceed its work budget."""


@dataclass(frozen=True)
class EstimateCI:
    mean: float
    std_error: float
    n_samples: int

    def __post_init__(self):
        if self.std_error < 0:
            raise ValueError("std_error must be nonnegative")

    @property
    def interval(self) -> tuple[float, float]:
        return self.mean - 3 * self.std_error, self.mean + 3 * self.std_error

    def to_json(self) -> dict:
        return {"mean": self.mean, "std_error": self.std_error, "n": self.n_samples}

    @classmethod
    def from_samples(cls, values) -> "EstimateCI":
        v = np.asarray(values, dtype=float)
        if v.size < 2:
            raise ValueError("need at least 2 samples for a standard error")
        return cls(float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size)), int(v.size))

    @classmethod
    def exact(cls, value: float) -> "EstimateCI":
        return cls(float(value), 0.0, 1)


def combined_se(*cis: EstimateCI) -> float:
    return math.sqrt(sum(c.std_error**2 for c in cis))


# ---------------------------------------------------------------------------
# evaluating a class on batches of points


def class_values(cls: FunctionClass, points, labeled: bool = False) -> np.ndarray | None:
    """``(..., F)`` values of every member of a finite class at ``points``.

    For thresholds, ``labeled`` says the trailing axis holds ``(z, y)``.
    Returns None for classes without a small explicit enumeration.
    """
    if isinstance(cls, FiniteTable):
        idx = np.asarray(points)
        if idx.dtype.kind == "f":
            if np.any(idx != np.round(idx)):
                raise DomainError("FiniteTable points must be column indices")
            idx = idx.astype(np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= cls.n_points):
            raise DomainError("FiniteTable column index out of range")
        return cls.values.T[idx]
    if isinstance(cls, Simplex):
        p = np.asarray(points, dtype=float)
        if p.shape[-1] != cls.dimension:
            raise DomainError(f"Simplex expects {cls.dimension}-vectors")
        return p
    if isinstance(cls, ThresholdGrid) and cls.is_finite and cls.size <= DENSE_GRID_MAX:
        th = cls.thresholds
        p = np.asarray(points, dtype=float)
        if labeled:
            ind = (p[..., 0:1] < th).astype(float)
            return np.abs(p[..., 1:2] - ind)
        return (p[..., None] < th).astype(float)
    return None


def _labeled(cls, points, lead_axes: int) -> bool:
    p = np.asarray(points)
    return isinstance(cls, ThresholdGrid) and p.ndim == lead_axes + 1 and p.shape[-1] == 2


def sup_over_class(cls: FunctionClass, points, weights, offsets=None) -> np.ndarray:
    """``sup_f sum_t w_t (f(x_t) - m_t(f))`` for each row of a batch.

    ``points`` has shape ``(B, T, ...)`` and ``weights`` ``(B, T)``.  The
    optional centering ``offsets`` is ``(B, T, F)`` for finite classes and
    ``(B, T, d)`` (conditional means of x) for the linear ball.
    """
    w = np.asarray(weights, dtype=float)
    if isinstance(cls, LinearBall):
        x = np.asarray(points, dtype=float)
        if offsets is not None:
            x = x - offsets
        s = np.einsum("bt,btd->bd", w, x)
        return cls.radius * cls.dual_norm(s)
    if isinstance(cls, ThresholdGrid) and not (cls.is_finite and cls.size <= DENSE_GRID_MAX):
        if offsets is not None:
            raise DomainError("centering is not available for large threshold classes")
        return _threshold_sup_rows(cls, points, w)
    vals = class_values(cls, points, _labeled(cls, points, w.ndim))
    if vals is None:
        raise DomainError(f"no supremum routine for {cls.variant}")
    if offsets is not None:
        vals = vals - offsets
    return np.einsum("bt,btf->bf", w, vals).max(axis=-1)


def _threshold_sup_rows(cls, points, w):
    p = np.asarray(points)
    out = np.empty(len(w))
    labeled = p.ndim == 3 and p.shape[-1] == 2
    for b in range(len(w)):
        if labeled:
            z, y = p[b, :, 0], p[b, :, 1].astype(float)
            _, sc = threshold_prefix_scores(cls, z, w[b] * (1.0 - 2.0 * y))
            out[b] = float(w[b] @ y) + sc.max()
        else:
            _, sc = threshold_prefix_scores(cls, p[b], w[b])
            out[b] = sc.max()
    return out


# ---------------------------------------------------------------------------
# estimators


def _run_chunks(fn, n: int, seed: int, threads: int | None) -> np.ndarray:
    sizes = chunk_sizes(n, CHUNK)
    parts = parallel_map(lambda i: fn(derived_rng(seed, i), sizes[i]), list(range(len(sizes))), threads)
    return np.concatenate(parts)


def _all_signs_rows(points, T):
    """Repeat each row of ``points`` for every sign vector."""
    S = path_sign_matrix(T)
    n = points.shape[0]
    P = np.repeat(points, len(S), axis=0)
    W = np.tile(S, (n, 1))
    return P, W, len(S)


def classical_rademacher(cls: FunctionClass, dist: Distribution, T: int, n: int, seed: int = 0,
                         threads: int | None = None) -> EstimateCI:
    """``E_{x ~ p^T} E_eps sup_f sum_t eps_t f(x_t)`` (unnormalized)."""
    if n < 2:
        raise ValueError("need n >= 2 samples")

    def chunk(rng, c):
        x = np.asarray(dist.sample(rng, c * T))
        x = x.reshape((c, T) + x.shape[1:])
        if T <= EXACT_SIGN_DEPTH:
            P, W, k = _all_signs_rows(x, T)
            return sup_over_class(cls, P, W).reshape(c, k).mean(axis=1)
        eps = np.where(rng.random((c, T)) < 0.5, -1.0, 1.0)
        return sup_over_class(cls, x, eps)

    return EstimateCI.from_samples(_run_chunks(chunk, n, seed, threads))


def _finite_pmf_offsets(cls, support, probs):
    vals = class_values(cls, support, _labeled(cls, support, 1))  # (K, F)
    return probs @ vals


def _node_offsets(cls, strategy, t, hist, size, rng, inner_mc):
    """Centering terms ``E_{t-1} f(x_t)`` for a batch of nodes sharing a level."""
    if isinstance(cls, LinearBall):
        m = strategy.conditional_mean(t, hist, size)
        if m is not None:
            return np.asarray(m, dtype=float)
    else:
        pm = strategy.conditional_pmf(t, hist, size)
        if pm is not None and class_values(cls, pm[0][:1], _labeled(cls, pm[0][:1], 1)) is not None:
            return _finite_pmf_offsets(cls, pm[0], pm[1])
        if isinstance(cls, Simplex):
            m = strategy.conditional_mean(t, hist, size)
            if m is not None:
                return np.asarray(m, dtype=float)
    if not inner_mc:
        raise ValueError(f"{strategy.variant} strategy has no conditional-mean oracle and inner Monte Carlo is disabled")
    rep = None if hist is None else np.repeat(hist, inner_mc, axis=0)
    draws = strategy.sample(rng, t, rep, size * inner_mc)
    if isinstance(cls, LinearBall):
        return draws.reshape((size, inner_mc) + draws.shape[1:]).mean(axis=1)
    vals = class_values(cls, draws, _labeled(cls, draws, 1))
    if vals is None:
        raise DomainError(f"centering needs an enumerable class, got {cls.variant}")
    return vals.reshape(size, inner_mc, -1).mean(axis=1)


def distdep_rademacher(cls: FunctionClass, strategy: ObliviousStrategy, T: int, n: int, *, centered: bool = False,
                       path_mode: str = "full", seed: int = 0, inner_mc: int = INNER_MC,
                       threads: int | None = None) -> EstimateCI:
    """Distribution-dependent sequential Rademacher complexity of ``cls`` under ``strategy``.

    ``path_mode="full"`` evaluates ``sup_f sum eps_t f(x_t(eps))`` on trees
    drawn from the probability tree of the strategy; ``"leftmost"`` evaluates
    on the all-(-1) path with independent signs.  ``centered`` subtracts the
    conditional mean of each ``f(x_t(eps))`` given the selected history.
    """
    if n < 2:
        raise ValueError("need n >= 2 samples")
    if path_mode not in ("full", "leftmost"):
        raise ValueError(f"unknown path_mode {path_mode!r}")

    def leftmost(rng, c):
        if centered:
            signs, xs, _, hists = sample_paths(strategy, T, rng, c, signs=-np.ones((c, T), dtype=np.int64),
                                               keep_histories=True)
            off = np.stack([_node_offsets(cls, strategy, t + 1, hists[t], c, rng, inner_mc) for t in range(T)],
                           axis=1)
        else:
            xs, off = sample_leftmost(strategy, T, rng, c), None
        if T <= EXACT_SIGN_DEPTH:
            P, W, k = _all_signs_rows(xs, T)
            O = None if off is None else np.repeat(off, k, axis=0)
            return sup_over_class(cls, P, W, O).reshape(c, k).mean(axis=1)
        eps = np.where(rng.random((c, T)) < 0.5, -1.0, 1.0)
        return sup_over_class(cls, xs, eps, off)

    def full_exact(rng, c):
        if centered:
            X, _, hists = sample_tree_pairs(strategy, T, rng, c, keep_histories=True)
            node_off = np.concatenate(
                [_node_offsets(cls, strategy, t + 1, hists[t], c << t, rng, inner_mc).reshape((c, 1 << t, -1))
                 for t in range(T)], axis=1)
        else:
            X, _ = sample_tree_pairs(strategy, T, rng, c)
            node_off = None
        idx = path_node_indices(T)
        S = path_sign_matrix(T)
        k = len(S)
        P = X[:, idx].reshape((c * k, T) + X.shape[2:])
        W = np.tile(S, (c, 1))
        O = None if node_off is None else node_off[:, idx].reshape(c * k, T, -1)
        return sup_over_class(cls, P, W, O).reshape(c, k).mean(axis=1)

    def full_sampled(rng, c):
        if centered:
            signs, xs, _, hists = sample_paths(strategy, T, rng, c, keep_histories=True)
            off = np.stack([_node_offsets(cls, strategy, t + 1, hists[t], c, rng, inner_mc) for t in range(T)],
                           axis=1)
        else:
            signs, xs, _ = sample_paths(strategy, T, rng, c)
            off = None
        return sup_over_class(cls, xs, signs, off)

    if path_mode == "leftmost":
        fn = leftmost
    else:
        fn = full_exact if T <= EXACT_SIGN_DEPTH else full_sampled
    return EstimateCI.from_samples(_run_chunks(fn, n, seed, threads))


def sign_averaged_values(cls: FunctionClass, trees: np.ndarray) -> np.ndarray:
    """``E_eps sup_f sum_t eps_t f(x_t(eps))`` for each flat tree in a batch,
    averaging exactly over all ``2**T`` sign vectors."""
    n = trees.shape[0]
    T = int(np.log2(trees.shape[1] + 1))
    if T > EXACT_SIGN_DEPTH:
        raise BudgetError(f"exact sign averaging is limited to depth {EXACT_SIGN_DEPTH}")
    idx = path_node_indices(T)
    S = path_sign_matrix(T)
    k = len(S)
    P = trees[:, idx].reshape((n * k, T) + trees.shape[2:])
    return sup_over_class(cls, P, np.tile(S, (n, 1))).reshape(n, k).mean(axis=1)


def tree_value(cls: FunctionClass, tree: BinaryTree, signs) -> float:
    """``sup_f sum_t eps_t f(x_t(eps))`` for one tree and one path."""
    from .trees import path_values

    x = path_values(tree, signs)
    return float(sup_over_class(cls, x[None], np.asarray(signs, dtype=float)[None])[0])


def pathwise_values(cls: FunctionClass, trees: np.ndarray, signs: np.ndarray) -> np.ndarray:
    """Per-sample values on a batch of (flat tree array, path) pairs."""
    T = signs.shape[1]
    bits = np.zeros(len(signs), dtype=np.int64)
    cols = []
    for t in range(1, T + 1):
        cols.append((1 << (t - 1)) - 1 + bits)
        bits = (bits << 1) | (signs[:, t - 1] > 0)
    idx = np.stack(cols, axis=1)
    x = np.take_along_axis(trees, idx.reshape(idx.shape + (1,) * (trees.ndim - 2)), axis=1)
    return sup_over_class(cls, x, signs)


# ---------------------------------------------------------------------------
# exact worst-case value


def _as_matrix(cls: FunctionClass, domain) -> np.ndarray:
    if isinstance(cls, FiniteTable) and domain is None:
        return cls.values
    if domain is None and isinstance(cls, ThresholdGrid) and cls.is_finite and cls.size <= DENSE_GRID_MAX:
        # one point below every threshold plus each threshold: all behaviours of the class
        domain = np.concatenate([[0.0], cls.thresholds])
    if domain is None:
        raise ValueError(f"{cls.variant} needs an explicit finite domain")
    vals = class_values(cls, np.asarray(domain), _labeled(cls, domain, 1))
    if vals is None:
        raise DomainError(f"{cls.variant} cannot be tabulated")
    return vals.T


def worstcase_sequential_rademacher(cls: FunctionClass, T: int, domain=None, budget: float = WORK_BUDGET) -> float:
    """Exact ``sup_x E_eps sup_f sum_t eps_t f(x_t(eps))`` over X-valued trees.

    Backward recursion: the state after ``t`` rounds is the vector of
    per-function partial sums; the tree player maximizes over ``x`` and the
    sign is averaged.  Identical states are merged.
    """
    V = np.asarray(_as_matrix(cls, domain), dtype=float)  # (F, X)
    F, X = V.shape
    work = float(X) ** T * F * 2.0**T
    if work > budget:
        raise BudgetError(f"exact recursion needs {work:.3g} work units (budget {budget:.3g}); use Monte Carlo mode")
    signs = np.array([-1.0, 1.0])
    states = np.zeros((1, F))
    children = []
    for _ in range(T):
        kids = states[:, None, None, :] + signs[None, None, :, None] * V.T[None, :, None, :]
        flat = kids.reshape(-1, F)
        _, first, inv = np.unique(np.round(flat, 12), axis=0, return_index=True, return_inverse=True)
        children.append(inv.reshape(states.shape[0], X, 2))
        states = flat[first]
    val = states.max(axis=1)
    for ch in reversed(children):
        val = val[ch].mean(axis=2).max(axis=1)
    return float(val[0])


# ---------------------------------------------------------------------------
# covering numbers


class CoverCount(int):
    """Covering number with provenance flags.

    ``certified`` is True when the value is proven minimal; ``lower_bound``
    is the best proven lower bound; ``upper_bound_only`` marks a heuristic
    cover returned because the exact search budget was exceeded.
    """

    def __new__(cls, value, *, certified=True, lower_bound=None, upper_bound_only=False):
        obj = super().__new__(cls, int(value))
        obj.certified = certified
        obj.lower_bound = int(value) if lower_bound is None else int(lower_bound)
        obj.upper_bound_only = upper_bound_only
        return obj


def node_value_matrix(cls: FunctionClass, tree: BinaryTree) -> np.ndarray:
    """``(F, nodes)`` values of every member of a finite class at every node."""
    vals = class_values(cls, tree.nodes, _labeled(cls, tree.nodes, 1))
    if vals is None:
        raise DomainError(f"covering numbers need a finite class, got {cls.variant}")
    return np.asarray(vals, dtype=float).T


def _path_dist(diff: np.ndarray, p) -> np.ndarray:
    """Path-average ``l_p`` norm over the last axis."""
    a = np.abs(diff)
    if p == np.inf or p == "inf":
        return a.max(axis=-1)
    return (np.mean(a**p, axis=-1)) ** (1.0 / p)


def _exact_zero_cover(A: np.ndarray, depth: int) -> int:
    def rec(rows, t, bits):
        vals = A[rows, (1 << (t - 1)) - 1 + bits]
        total = 0
        for v in np.unique(vals):
            grp = rows[vals == v]
            if t == depth:
                total += 1
            else:
                total += max(rec(grp, t + 1, bits << 1), rec(grp, t + 1, (bits << 1) | 1))
        return total

    return rec(np.arange(A.shape[0]), 1, 0)


def distinct_profiles(cls: FunctionClass, tree: BinaryTree) -> int:
    """Number of distinct rows of the class evaluated on all tree nodes."""
    return int(len(np.unique(node_value_matrix(cls, tree), axis=0)))


def _candidate_trees(A: np.ndarray, exhaustive: bool) -> np.ndarray:
    F = A.shape[0]
    cands = [A, np.zeros((1, A.shape[1]))]
    if exhaustive:
        groups = [g for r in range(2, F + 1) for g in itertools.combinations(range(F), r)]
    else:
        groups = list(itertools.combinations(range(F), 2)) + [tuple(range(F))]
    if groups:
        mids = [0.5 * (A[list(g)].min(axis=0) + A[list(g)].max(axis=0)) for g in groups]
        cands.append(np.array(mids))
    return np.unique(np.concatenate(cands), axis=0)


def covering_number(cls: FunctionClass, tree: BinaryTree, alpha: float, p_norm=2,
                    max_functions: int = 64, max_depth: int = 10) -> CoverCount:
    """Sequential covering number at scale ``alpha`` in the path-average ``l_p`` norm."""
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    p = np.inf if p_norm in (np.inf, "inf", "∞") else float(p_norm)
    A = np.unique(node_value_matrix(cls, tree), axis=0)
    F, T = A.shape[0], tree.depth
    if alpha == 0:
        if F <= max_functions and T <= max_depth:
            return CoverCount(_exact_zero_cover(A, T))
    idx = path_node_indices(T)
    prof = A[:, idx]  # (F, paths, T)

    if F > max_functions or T > max_depth:
        cands = _candidate_trees(A, exhaustive=False)[:, idx]
        cover = (_path_dist(cands[:, None] - prof[None], p) <= alpha + 1e-12)
        return CoverCount(_greedy_cover(cover.reshape(len(cands), -1)), certified=False, lower_bound=1,
                          upper_bound_only=True)

    cands = _candidate_trees(A, exhaustive=F <= 10)[:, idx]
    # incidence: candidate c covers element (f, path)
    inc = np.stack([_path_dist(cands - prof[f][None], p) <= alpha + 1e-12 for f in range(F)], axis=1)
    inc = inc.reshape(len(cands), -1)
    inc = np.unique(inc, axis=1)  # duplicate elements add nothing
    upper = _exact_set_cover(inc)
    lower = _clique_lower_bound(prof, alpha, p)
    return CoverCount(upper, certified=upper == lower, lower_bound=lower)


def _greedy_cover(inc: np.ndarray) -> int:
    left = np.ones(inc.shape[1], dtype=bool)
    k = 0
    while left.any():
        gain = (inc & left).sum(axis=1)
        j = int(np.argmax(gain))
        if gain[j] == 0:
            raise RuntimeError("candidate trees cannot cover every element")
        left &= ~inc[j]
        k += 1
    return k


def _exact_set_cover(inc: np.ndarray) -> int:
    from scipy.optimize import Bounds, LinearConstraint, milp
    from scipy.sparse import csr_matrix

    m = inc.shape[0]
    greedy = _greedy_cover(inc)
    if greedy <= 1:
        return greedy
    res = milp(c=np.ones(m), constraints=LinearConstraint(csr_matrix(inc.T.astype(float)), lb=1, ub=np.inf),
               integrality=np.ones(m), bounds=Bounds(0, 1))
    if not res.success:
        return greedy
    return int(round(res.fun))


def _clique_lower_bound(prof: np.ndarray, alpha: float, p) -> int:
    """Max over paths of the largest set of functions pairwise more than 2 alpha apart."""
    import networkx as nx

    F, n_paths, _ = prof.shape
    best = 1
    seen = set()
    for j in range(n_paths):
        d = _path_dist(prof[:, None, j] - prof[None, :, j], p)
        far = d > 2 * alpha + 1e-12
        key = far.tobytes()
        if key in seen:
            continue
        seen.add(key)
        if far.sum() == 0:
            continue
        g = nx.from_numpy_array(far.astype(int))
        clique, _ = nx.max_weight_clique(g, weight=None)
        best = max(best, len(clique))
    return best


# ---------------------------------------------------------------------------
# Dudley bound


def _group_radii(A: np.ndarray, idx: np.ndarray, p=2) -> np.ndarray:
    """Covering radius of the midpoint tree of every subset (bitmask order)."""
    F = A.shape[0]
    rad = np.zeros(1 << F)
    for mask in range(1, 1 << F):
        rows = [i for i in range(F) if mask >> i & 1]
        if len(rows) == 1:
            continue
        G = A[rows]
        mid = 0.5 * (G.min(axis=0) + G.max(axis=0))
        rad[mask] = _path_dist((G - mid)[:, idx], p).max()
    return rad


def partition_radii(A: np.ndarray, depth: int, p=2) -> np.ndarray:
    """``r[k-1]`` = smallest max-radius over partitions of the rows into ``k`` groups.

    Each group is covered by its per-node midpoint tree, so at any scale
    ``delta >= r[k-1]`` the covering number is at most ``k``.
    """
    A = np.unique(A, axis=0)
    F = A.shape[0]
    idx = path_node_indices(depth)
    if F == 1:
        return np.zeros(1)
    if F <= 8:
        rad = _group_radii(A, idx, p)
        full = (1 << F) - 1
        prev = rad.copy()
        out = [rad[full]]
        for _ in range(2, F + 1):
            cur = np.full(1 << F, np.inf)
            cur[0] = 0.0
            for mask in range(1, 1 << F):
                low = mask & -mask
                rest = mask ^ low
                sub = rest
                best = np.inf
                while True:
                    s = sub | low
                    v = max(rad[s], prev[mask ^ s])
                    if v < best:
                        best = v
                    if sub == 0:
                        break
                    sub = (sub - 1) & rest
                cur[mask] = best
            out.append(cur[full])
            prev = cur
        return np.minimum.accumulate(np.array(out))
    # agglomerative: merge the pair whose union has the smallest radius
    groups = [[i] for i in range(F)]
    radius_of = lambda g: 0.0 if len(g) == 1 else _path_dist(
        (A[g] - 0.5 * (A[g].min(axis=0) + A[g].max(axis=0)))[:, idx], p).max()
    out = [0.0]
    cur = 0.0
    while len(groups) > 1:
        best, pair = np.inf, None
        for a in range(len(groups)):
            for b in range(a + 1, len(groups)):
                r = radius_of(groups[a] + groups[b])
                if r < best:
                    best, pair = r, (a, b)
        a, b = pair
        groups[a] = groups[a] + groups[b]
        del groups[b]
        cur = max(cur, best)
        out.append(cur)
    return np.array(out[::-1])


def dudley_integral_bound(radii: np.ndarray, T: int) -> float:
    """``inf_alpha 4 T alpha + 12 int_alpha^1 sqrt(T log N(delta)) d delta``.

    ``N(delta) = min{k : radii[k-1] <= delta}`` is piecewise constant, so the
    integral is a finite sum and the objective is convex and piecewise linear;
    its infimum is attained at a breakpoint.
    """
    r = np.minimum(np.asarray(radii, dtype=float), 1.0)

    def n_at(delta):
        return int(np.argmax(r <= delta + 1e-15)) + 1

    pts = sorted(set([0.0, 1.0] + [float(v) for v in r if 0.0 <= v <= 1.0]))

    def integral(a):
        total, lo = 0.0, a
        for hi in [q for q in pts if q > a]:
            total += (hi - lo) * math.sqrt(T * math.log(n_at(lo)))
            lo = hi
        return total

    return min(4 * T * a + 12 * integral(a) for a in pts)


def dudley_bound(cls: FunctionClass, strategy: ObliviousStrategy, T: int, n_trees: int, seed: int = 0,
                 threads: int | None = None) -> EstimateCI:
    """Monte Carlo average over trees from the probability tree of the Dudley entropy bound."""
    if n_trees < 2:
        raise ValueError("need n_trees >= 2")

    def chunk(rng, c):
        X, _ = sample_tree_pairs(strategy, T, rng, c)
        out = np.empty(c)
        for i in range(c):
            A = node_value_matrix(cls, BinaryTree(T, X[i]))
            out[i] = dudley_integral_bound(partition_radii(A, T), T)
        return out

    return EstimateCI.from_samples(_run_chunks(chunk, n_trees, seed, threads))


# ---------------------------------------------------------------------------
# absolute-loss composition with adversarial labels


def adversarial_label_value(cls: ThresholdGrid, z) -> float:
    """``sup_y E_eps sup_theta sum_t eps_t |y_t(eps) - 1{z_t < theta}|`` for fixed ``z``.

    Labels form a {0,1}-valued tree chosen by the adversary; computed by the
    same backward recursion as the worst-case value.
    """
    z = np.asarray(z, dtype=float)
    T = len(z)
    if 4.0**T * (T + 2) > WORK_BUDGET:
        raise BudgetError("label-tree recursion exceeds the work budget")
    zs = np.sort(z)
    cands, _ = threshold_prefix_scores(cls, zs, np.zeros(T)) if not (cls.is_finite and cls.size <= DENSE_GRID_MAX) \
        else (cls.thresholds, None)
    H = (z[:, None] < np.asarray(cands, dtype=float)[None, :]).astype(float)  # (T, patterns)
    H = np.unique(H, axis=1)
    states = np.zeros((1, H.shape[1]))
    children = []
    for t in range(T):
        inc = np.stack([np.abs(y - H[t]) for y in (0.0, 1.0)])  # (2, P)
        kids = states[:, None, None, :] + np.array([-1.0, 1.0])[None, None, :, None] * inc[None, :, None, :]
        flat = kids.reshape(-1, H.shape[1])
        _, first, inv = np.unique(np.round(flat, 12), axis=0, return_index=True, return_inverse=True)
        children.append(inv.reshape(states.shape[0], 2, 2))
        states = flat[first]
    val = states.max(axis=1)
    for ch in reversed(children):
        val = val[ch].mean(axis=2).max(axis=1)
    return float(val[0])


def composition_check(cls: ThresholdGrid, dist: Distribution, T: int, n: int, seed: int = 0,
                      threads: int | None = None) -> tuple[EstimateCI, EstimateCI]:
    """Composed (adversarial-label, absolute-loss) complexity and the classical
    complexity of the threshold class, computed on the same i.i.d. draws of z."""

    def chunk(rng, c):
        z = np.asarray(dist.sample(rng, c * T), dtype=float).reshape(c, T)
        comp = np.array([adversarial_label_value(cls, row) for row in z])
        P, W, k = _all_signs_rows(z, T)
        base = sup_over_class(cls, P, W).reshape(c, k).mean(axis=1)
        return np.stack([comp, base], axis=1)

    vals = _run_chunks(chunk, n, seed, threads)
    return EstimateCI.from_samples(vals[:, 0]), EstimateCI.from_samples(vals[:, 1])
