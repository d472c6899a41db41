import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from adversim.distributions import Categorical, Uniform
from adversim.trees import (BinaryTree, DeterministicStrategy, IIDStrategy, MarkovStrategy, Path, chi, dump_tree,
                            load_tree, mirror, path_values, sample_paths, sample_tree_pair, sample_tree_pairs)


def test_chi_examples():
    assert chi("a", "b", 1) == "b"
    assert chi("a", "b", -1) == "a"
    assert chi("a", "a", 1) == chi("a", "a", -1) == "a"
    with pytest.raises(ValueError):
        chi(0, 1, 0)


@given(x=st.floats(-5, 5), xp=st.floats(-5, 5), s=st.sampled_from([-1, 1]))
def test_chi_symmetry(x, xp, s):
    assert chi(x, xp, s) == chi(xp, x, -s)


def test_path_values_examples():
    assert path_values(BinaryTree(1, np.array([3.0])), [1]) == [3.0]
    tree = BinaryTree(2, np.array([10.0, 20.0, 30.0]))  # (r; a, b)
    np.testing.assert_array_equal(path_values(tree, Path(np.array([1, -1]))), [10.0, 30.0])
    np.testing.assert_array_equal(path_values(tree, [-1, 1]), [10.0, 20.0])
    const = BinaryTree(3, np.full(7, 0.4))
    np.testing.assert_array_equal(path_values(const, [1, -1, 1]), [0.4] * 3)
    assert tree[2, 1] == 30.0 and len(Path.from_bits(2, 3)) == 3


def test_tree_shape_and_mirror():
    tree = BinaryTree(3, np.arange(7.0))
    assert tree.nodes.shape == (7,)
    np.testing.assert_array_equal(tree.level(3), [3, 4, 5, 6])
    for bits in range(8):
        p = Path.from_bits(bits, 3)
        np.testing.assert_array_equal(path_values(mirror(tree), p), path_values(tree, -p.signs))
    with pytest.raises(ValueError):
        BinaryTree(3, np.arange(6.0))


def test_deterministic_strategy_fills_levels():
    x, xp = sample_tree_pair(DeterministicStrategy([1, 2, 3]), 3, np.random.default_rng(0))
    for t in (1, 2, 3):
        assert np.all(x.level(t) == t) and np.all(xp.level(t) == t)


def test_iid_node_marginal_ks():
    X, Xp = sample_tree_pairs(IIDStrategy(Uniform()), 3, np.random.default_rng(1), 10_000)
    for node in (0, 2, 6):
        assert stats.kstest(X[:, node], "uniform").pvalue > 0.01
        assert stats.kstest(Xp[:, node], "uniform").pvalue > 0.01


def test_markov_children_follow_the_selected_parent():
    def kernel(prev, rng):
        return prev + np.where(rng.random(prev.shape[0]) < 0.5, -1.0, 1.0)

    strat = MarkovStrategy(Categorical((0.5, 0.5), (0.0, 10.0)), kernel)
    n = 20_000
    X, Xp = sample_tree_pairs(strat, 2, np.random.default_rng(2), n)
    # left child (eps_1 = -1) continues from x_1, right child from x'_1
    assert np.all(np.abs(X[:, 1] - X[:, 0]) == 1) and np.all(np.abs(X[:, 2] - Xp[:, 0]) == 1)
    assert np.all(np.abs(Xp[:, 2] - Xp[:, 0]) == 1)
    # joint law of (x'_1, right child) against a direct simulation of the chain
    rng = np.random.default_rng(3)
    start = np.where(rng.random(n) < 0.5, 0.0, 10.0)
    direct = start + np.where(rng.random(n) < 0.5, -1.0, 1.0)
    vals = np.array([-1.0, 1.0, 9.0, 11.0])
    table = np.array([[np.sum(X[:, 2] == v) for v in vals], [np.sum(direct == v) for v in vals]])
    assert stats.chi2_contingency(table).pvalue > 0.01


def test_sample_paths_matches_tree_sampling_in_law():
    strat = IIDStrategy(Uniform())
    signs, xs, xps = sample_paths(strat, 4, np.random.default_rng(4), 5000)
    assert xs.shape == (5000, 4) and set(np.unique(signs)) == {-1, 1}
    assert stats.kstest(xs[:, 3], "uniform").pvalue > 0.01


def test_dump_roundtrip():
    tree = BinaryTree(3, np.random.default_rng(5).random(7))
    text = dump_tree(tree)
    assert text.splitlines()[0] == "# depth 3"
    assert text.splitlines()[1].startswith("1 - ")
    assert text.splitlines()[2].startswith("2 0 ")
    np.testing.assert_array_equal(load_tree(text).nodes, tree.nodes)
    vec = BinaryTree(2, np.arange(6.0).reshape(3, 2))
    assert "2 1 4.0,5.0" in dump_tree(vec)
    np.testing.assert_array_equal(load_tree(dump_tree(vec)).nodes, vec.nodes)
    with pytest.raises(ValueError):
        load_tree("# depth 2\n1 - 0.5\n2 0 0.1\n")


def test_sampling_is_seed_deterministic():
    a = sample_tree_pairs(IIDStrategy(Uniform()), 5, np.random.default_rng(9), 3)
    b = sample_tree_pairs(IIDStrategy(Uniform()), 5, np.random.default_rng(9), 3)
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[1], b[1])
