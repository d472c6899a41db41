"""Binary trees of domain values, paths, the selector and paired-tree sampling.

Storage convention: a depth-``T`` tree keeps its ``2**T - 1`` node values in
one flat array, level-major.  The node at level ``t`` (1-based) reached by
the sign prefix ``eps_1..eps_{t-1}`` sits at index ``2**(t-1) - 1 + b``
where ``b`` reads the prefix as bits (``-1 -> 0``, ``+1 -> 1``) with
``eps_1`` as the most significant bit.  A full path of length ``T`` is
numbered the same way with ``T`` bits.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .distributions import Categorical, Distribution, PointMass

MAX_MATERIALIZED_DEPTH = 24


class TreeSamplingError(RuntimeError):
    def __init__(self, level, prefix, cause):
        self.level, self.prefix = level, prefix
        where = f"level {level}" + (f", prefix {prefix}" if prefix is not None else "")
        super().__init__(f"kernel sampling failed at {where}: {cause}")


def chi(x, x_prime, sign):
    """Selector: ``x_prime`` when ``sign = +1``, ``x`` when ``sign = -1``."""
    if sign == 1:
        return x_prime
    if sign == -1:
        return x
    raise ValueError(f"sign must be +1 or -1, got {sign!r}")


def chi_array(x, x_prime, signs):
    """Vectorized selector; ``signs`` broadcasts against the leading axes."""
    s = np.asarray(signs)
    x, x_prime = np.asarray(x), np.asarray(x_prime)
    s = s.reshape(s.shape + (1,) * (x.ndim - s.ndim))
    return np.where(s > 0, x_prime, x)


# ---------------------------------------------------------------------------
# trees and paths


def node_index(level: int, prefix_bits: int) -> int:
    return (1 << (level - 1)) - 1 + prefix_bits


@dataclass(frozen=True, eq=False)
class Path:
    signs: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.signs, dtype=np.int64)
        if s.ndim != 1 or not np.all(np.abs(s) == 1):
            raise ValueError("path signs must be a vector over {+1, -1}")
        s.setflags(write=False)
        object.__setattr__(self, "signs", s)

    def __len__(self):
        return len(self.signs)

    @property
    def bits(self) -> int:
        b = 0
        for s in self.signs:
            b = (b << 1) | int(s > 0)
        return b

    @classmethod
    def from_bits(cls, bits: int, depth: int) -> "Path":
        return cls(np.array([1 if (bits >> (depth - 1 - k)) & 1 else -1 for k in range(depth)]))


@dataclass(frozen=True, eq=False)
class BinaryTree:
    depth: int
    nodes: np.ndarray

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        n = np.asarray(self.nodes)
        if n.shape[0] != (1 << self.depth) - 1:
            raise ValueError(f"a depth-{self.depth} tree has {(1 << self.depth) - 1} nodes, got {n.shape[0]}")
        n = n.copy()
        n.setflags(write=False)
        object.__setattr__(self, "nodes", n)

    def __getitem__(self, key):
        level, bits = key
        if not 1 <= level <= self.depth or not 0 <= bits < (1 << (level - 1)):
            raise IndexError(f"no node at level {level} with prefix bits {bits}")
        return self.nodes[node_index(level, bits)]

    def level(self, t: int) -> np.ndarray:
        lo = (1 << (t - 1)) - 1
        return self.nodes[lo: lo + (1 << (t - 1))]

    @property
    def point_shape(self):
        return self.nodes.shape[1:]


def path_node_indices(depth: int) -> np.ndarray:
    """``(2**depth, depth)`` node indices visited by every path, in path order."""
    p = np.arange(1 << depth)[:, None]
    t = np.arange(1, depth + 1)[None, :]
    return (1 << (t - 1)) - 1 + (p >> (depth - t + 1))


def path_sign_matrix(depth: int) -> np.ndarray:
    """``(2**depth, depth)`` sign vectors of every path, in path order."""
    p = np.arange(1 << depth)[:, None]
    k = np.arange(depth)[None, :]
    return np.where((p >> (depth - 1 - k)) & 1, 1, -1).astype(np.int64)


def path_values(tree: BinaryTree, path) -> np.ndarray:
    """Values ``x_1(eps), ..., x_T(eps)`` along a path."""
    signs = path.signs if isinstance(path, Path) else np.asarray(path)
    if len(signs) != tree.depth:
        raise ValueError(f"path length {len(signs)} does not match tree depth {tree.depth}")
    idx, b = [], 0
    for t in range(1, tree.depth + 1):
        idx.append(node_index(t, b))
        b = (b << 1) | int(signs[t - 1] > 0)
    return tree.nodes[np.array(idx)]


def all_path_values(tree: BinaryTree) -> np.ndarray:
    return tree.nodes[path_node_indices(tree.depth)]


def mirror_nodes(nodes: np.ndarray, axis: int = 0) -> np.ndarray:
    """Level-major node array(s) with left and right children swapped everywhere."""
    nodes = np.asarray(nodes)
    depth = int(np.log2(nodes.shape[axis] + 1))
    perm = np.concatenate([np.arange((1 << t) - 2, (1 << (t - 1)) - 2, -1) for t in range(1, depth + 1)])
    return np.take(nodes, perm, axis=axis)


def mirror(tree: BinaryTree) -> BinaryTree:
    """Swap left and right children everywhere: ``mirror(x)(eps) = x(-eps)``."""
    return BinaryTree(tree.depth, mirror_nodes(tree.nodes))


# ---------------------------------------------------------------------------
# oblivious strategies
#
# A strategy samples a batch of points given a batch of histories.  What the
# history looks like depends on ``memory``: "none" (ignored), "last" (the
# previous point only) or "full" (the whole prefix, shape (B, t-1, ...)).


class ObliviousStrategy:
    variant = "abstract"
    memory = "none"

    def sample(self, rng: np.random.Generator, t: int, history, size: int) -> np.ndarray:
        raise NotImplementedError

    def conditional_pmf(self, t: int, history, size: int):
        """``(support, probs)`` with probs of shape ``(size, K)``, or None."""
        return None

    def conditional_mean(self, t: int, history, size: int):
        """Mean of ``p_t(.|history)`` of shape ``(size, ...)``, or None."""
        return None


def _pmf_of(dist: Distribution):
    if isinstance(dist, Categorical):
        return np.asarray(dist.values, dtype=float), dist.pmf()
    if isinstance(dist, PointMass) and np.ndim(dist.value) == 0:
        return np.array([float(dist.value)]), np.array([1.0])
    return None


class IIDStrategy(ObliviousStrategy):
    variant = "iid"

    def __init__(self, dist: Distribution):
        self.dist = dist

    def sample(self, rng, t, history, size):
        return np.asarray(self.dist.sample(rng, size), dtype=float)

    def conditional_pmf(self, t, history, size):
        sp = _pmf_of(self.dist)
        if sp is None:
            return None
        return sp[0], np.broadcast_to(sp[1], (size, len(sp[1])))

    def conditional_mean(self, t, history, size):
        m = np.asarray(self.dist.mean(), dtype=float)
        return np.broadcast_to(m, (size,) + m.shape)


class DeterministicStrategy(ObliviousStrategy):
    variant = "deterministic"

    def __init__(self, sequence):
        self.sequence = np.asarray(sequence, dtype=float)

    def _at(self, t):
        if t > len(self.sequence):
            raise ValueError(f"deterministic sequence has no round {t}")
        return self.sequence[t - 1]

    def sample(self, rng, t, history, size):
        v = self._at(t)
        return np.broadcast_to(v, (size,) + v.shape).copy()

    def conditional_pmf(self, t, history, size):
        v = self._at(t)
        if v.ndim:
            return None
        return np.array([float(v)]), np.ones((size, 1))

    def conditional_mean(self, t, history, size):
        v = self._at(t)
        return np.broadcast_to(v, (size,) + v.shape)


class MarkovStrategy(ObliviousStrategy):
    """First-order chain: ``x_1 ~ initial``, ``x_t ~ step(x_{t-1})``.

    ``step(prev, rng)`` maps a batch of previous points to a batch of next
    points.  ``transition`` (a row-stochastic matrix over ``support``) gives
    exact conditional laws; ``mean_fn(prev)`` gives conditional means.
    """

    variant = "markov"
    memory = "last"

    def __init__(self, initial: Distribution, step: Callable | None = None, *, support=None,
                 transition=None, mean_fn: Callable | None = None):
        self.initial = initial
        self.support = None if support is None else np.asarray(support, dtype=float)
        self.transition = None if transition is None else np.asarray(transition, dtype=float)
        if self.transition is not None:
            if self.support is None or self.transition.shape != (len(self.support),) * 2:
                raise ValueError("transition must be a K x K matrix over a K-point support")
            if not np.allclose(self.transition.sum(axis=1), 1.0) or np.any(self.transition < 0):
                raise ValueError("transition rows must be probability vectors")
            self._cum = np.cumsum(self.transition, axis=1)
        if step is None and self.transition is None:
            raise ValueError("a Markov strategy needs a step kernel or a transition matrix")
        self.step = step
        self.mean_fn = mean_fn

    @classmethod
    def finite_chain(cls, initial_probs, transition, support=None):
        k = len(initial_probs)
        support = np.arange(k) if support is None else support
        return cls(Categorical(tuple(initial_probs), tuple(np.asarray(support).tolist())),
                   support=support, transition=transition)

    @classmethod
    def random_walk(cls, start: float = 0.0, step: float = 1.0):
        """``x_1 = start`` then uniform on ``{prev - step, prev + step}``."""
        def kernel(prev, rng):
            return prev + step * np.where(rng.random(prev.shape[0]) < 0.5, -1.0, 1.0)

        return cls(PointMass(float(start)), kernel, mean_fn=lambda prev: np.asarray(prev, dtype=float))

    def _state(self, prev):
        pos = np.searchsorted(self.support, prev)
        pos = np.minimum(pos, len(self.support) - 1)
        if not np.all(self.support[pos] == prev):
            raise ValueError("previous point is outside the chain's support")
        return pos

    def sample(self, rng, t, history, size):
        if t == 1:
            return np.asarray(self.initial.sample(rng, size), dtype=float)
        if self.transition is not None and self.step is None:
            cum = self._cum[self._state(history)]
            j = (rng.random(size)[:, None] >= cum).sum(axis=1)
            return self.support[np.minimum(j, len(self.support) - 1)]
        return np.asarray(self.step(history, rng), dtype=float)

    def conditional_pmf(self, t, history, size):
        if t == 1:
            sp = _pmf_of(self.initial)
            return None if sp is None else (sp[0], np.broadcast_to(sp[1], (size, len(sp[1]))))
        if self.transition is None:
            return None
        return self.support, self.transition[self._state(history)]

    def conditional_mean(self, t, history, size):
        if t == 1:
            m = np.asarray(self.initial.mean(), dtype=float)
            return np.broadcast_to(m, (size,) + m.shape)
        pm = self.conditional_pmf(t, history, size)
        if pm is not None:
            return pm[1] @ pm[0]
        if self.mean_fn is not None:
            return np.asarray(self.mean_fn(history), dtype=float)
        return None


class CustomStrategy(ObliviousStrategy):
    """Arbitrary kernel ``kernel(prefix, t, rng) -> point`` on the full history.

    ``mean_fn(prefix, t)`` optionally supplies the conditional mean.
    """

    variant = "custom"
    memory = "full"

    def __init__(self, kernel: Callable, mean_fn: Callable | None = None):
        self.kernel = kernel
        self.mean_fn = mean_fn

    def sample(self, rng, t, history, size):
        out = []
        for b in range(size):
            prefix = history[b] if history is not None else np.zeros((0,))
            try:
                out.append(self.kernel(prefix, t, rng))
            except Exception as exc:  # attach where it happened
                raise TreeSamplingError(t, b, exc) from exc
        return np.asarray(out, dtype=float)

    def conditional_mean(self, t, history, size):
        if self.mean_fn is None:
            return None
        return np.asarray([self.mean_fn(history[b] if history is not None else np.zeros((0,)), t)
                           for b in range(size)], dtype=float)


# ---------------------------------------------------------------------------
# paired-tree sampling


def _extend_history(strategy, hist, chosen):
    """Histories for the children of every node, given each node's history
    ``hist`` (leading axes (n, w)) and the two chi-selected values."""
    if strategy.memory == "none":
        return None
    n, w = chosen[0].shape[:2]
    if strategy.memory == "last":
        out = np.stack(chosen, axis=2)  # (n, w, 2, ...) -> child prefix 2b + bit
        return out.reshape((n, 2 * w) + out.shape[3:])
    kids = []
    for c in chosen:
        step = c[:, :, None]
        kids.append(step if hist is None else np.concatenate([hist, step], axis=2))
    out = np.stack(kids, axis=2)
    return out.reshape((n, 2 * w) + out.shape[3:])


def sample_tree_pairs(strategy: ObliviousStrategy, T: int, rng: np.random.Generator, n: int,
                      keep_histories: bool = False):
    """Batch of ``n`` paired trees as arrays of shape ``(n, 2**T - 1, ...)``.

    Per level, the x values of all nodes are drawn first, then the x' values.
    With ``keep_histories`` the per-level node histories are returned as a
    third element (entries are None for memoryless strategies).
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    if T > MAX_MATERIALIZED_DEPTH:
        raise MemoryError(f"depth {T} exceeds {MAX_MATERIALIZED_DEPTH}; use sample_path")
    xs, xps, hists = [], [], []
    hist = None
    for t in range(1, T + 1):
        w = 1 << (t - 1)
        flat = None if hist is None else hist.reshape((n * w,) + hist.shape[2:])
        try:
            a = strategy.sample(rng, t, flat, n * w)
            b = strategy.sample(rng, t, flat, n * w)
        except TreeSamplingError:
            raise
        except Exception as exc:
            raise TreeSamplingError(t, None, exc) from exc
        a = a.reshape((n, w) + a.shape[1:])
        b = b.reshape((n, w) + b.shape[1:])
        xs.append(a)
        xps.append(b)
        if keep_histories:
            hists.append(flat)
        if t < T:
            # left child (bit 0, eps=-1) continues with x, right child with x'
            hist = _extend_history(strategy, hist, (a, b))
    x = np.concatenate(xs, axis=1)
    xp = np.concatenate(xps, axis=1)
    if keep_histories:
        return x, xp, hists
    return x, xp


def sample_tree_pair(strategy: ObliviousStrategy, T: int, rng: np.random.Generator) -> tuple[BinaryTree, BinaryTree]:
    """One pair ``(x, x')`` drawn from the probability tree of ``strategy``."""
    x, xp = sample_tree_pairs(strategy, T, rng, 1)
    return BinaryTree(T, x[0]), BinaryTree(T, xp[0])


def sample_paths(strategy: ObliviousStrategy, T: int, rng: np.random.Generator, n: int,
                 signs=None, keep_histories: bool = False):
    """Lazy sampling of ``n`` (path, values) triples without building trees.

    Signs are drawn first (unless given, shape ``(n, T)``), then along each
    path ``x_t`` and ``x'_t`` from ``p_t`` given the chi-selected history.
    Returns ``(signs, x_along_path, x_prime_along_path)``.
    """
    if signs is None:
        signs = np.where(rng.random((n, T)) < 0.5, -1, 1)
    signs = np.asarray(signs)
    xs, xps, hists = [], [], []
    hist = None
    for t in range(1, T + 1):
        a = strategy.sample(rng, t, hist, n)
        b = strategy.sample(rng, t, hist, n)
        xs.append(a)
        xps.append(b)
        if keep_histories:
            hists.append(hist)
        c = chi_array(a, b, signs[:, t - 1])
        if strategy.memory == "last":
            hist = c
        elif strategy.memory == "full":
            hist = c[:, None] if hist is None else np.concatenate([hist, c[:, None]], axis=1)
    out = (signs, np.stack(xs, axis=1), np.stack(xps, axis=1))
    return out + (hists,) if keep_histories else out


def sample_leftmost(strategy: ObliviousStrategy, T: int, rng: np.random.Generator, n: int):
    """Values on the all-(-1) path: an ordinary draw ``x_{1:T} ~ p``."""
    return sample_paths(strategy, T, rng, n, signs=-np.ones((n, T), dtype=np.int64))[1]


# ---------------------------------------------------------------------------
# dump format: one line per node, "level prefix-bits value"


def _fmt_value(v) -> str:
    if isinstance(v, Fraction):
        return str(v)
    a = np.asarray(v)
    if a.ndim == 0:
        return repr(float(a))
    return ",".join(repr(float(u)) for u in a.ravel())


def dump_tree(tree: BinaryTree) -> str:
    lines = [f"# depth {tree.depth}"]
    for t in range(1, tree.depth + 1):
        for b in range(1 << (t - 1)):
            bits = format(b, f"0{t - 1}b") if t > 1 else "-"
            lines.append(f"{t} {bits} {_fmt_value(tree.nodes[node_index(t, b)])}")
    return "\n".join(lines) + "\n"


def load_tree(text: str) -> BinaryTree:
    depth, vals = None, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) == 2 and parts[0] == "depth":
                depth = int(parts[1])
            continue
        try:
            level_s, bits_s, value_s = line.split()
            level = int(level_s)
            bits = 0 if bits_s == "-" else int(bits_s, 2)
            if bits_s != "-" and len(bits_s) != level - 1:
                raise ValueError("prefix length does not match level")
            value = [float(u) for u in value_s.split(",")]
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from exc
        vals[node_index(level, bits)] = value[0] if len(value) == 1 else value
    if depth is None:
        depth = max(vals).bit_length() if vals else 0
    n = (1 << depth) - 1
    missing = [i for i in range(n) if i not in vals]
    if missing:
        raise ValueError(f"tree dump is missing {len(missing)} node(s)")
    return BinaryTree(depth, np.array([vals[i] for i in range(n)], dtype=float))
