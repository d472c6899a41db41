import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from adversim.core import (FiniteTable, GameSpec, LinearBall, RegretRecord, Simplex, ThresholdGrid,
                           best_fixed_comparator, comparator_round_losses, evaluate, loss_value,
                           prefix_optimal_losses, random_hypotheses)


def test_evaluate_examples():
    assert evaluate(ThresholdGrid(None), 0.5, (0.3, 1)) == 0.0
    assert evaluate(LinearBall(2), np.array([1.0, 0.0]), np.array([0.2, -0.7])) == pytest.approx(0.2)
    tab = FiniteTable(np.array([[0.1, -0.3], [0.5, 0.9]]))
    assert evaluate(tab, 1, 0) == 0.5


def test_table_range_and_threshold_spacing():
    with pytest.raises(ValueError):
        FiniteTable(np.array([[1.5, 0.0]]))
    g = ThresholdGrid(3)
    np.testing.assert_allclose(g.thresholds, [0.25, 0.5, 0.75])
    m = ThresholdGrid(4, 0.1)
    np.testing.assert_allclose(np.diff(m.thresholds), 0.8 / 5)
    assert m.theta(0) == pytest.approx(0.1 + 0.8 / 5)


def test_count_at_or_below_is_exact_at_grid_points():
    g = ThresholdGrid(7, 0.05)
    for i, th in enumerate(g.thresholds):
        assert g.count_at_or_below(th) == i + 1
        assert g.count_at_or_below(np.nextafter(th, -1)) == i
    np.testing.assert_array_equal(g.count_at_or_below(g.thresholds), np.arange(1, 8))


def test_game_spec_rules():
    with pytest.raises(ValueError):
        GameSpec(10, ThresholdGrid(4), "absolute", "plain")
    with pytest.raises(ValueError):
        GameSpec(0, Simplex(2))


def test_comparator_examples():
    f, loss = best_fixed_comparator(LinearBall(2), [np.array([1.0, 0.0])] * 2)
    np.testing.assert_allclose(f, [-1.0, 0.0])
    assert loss == pytest.approx(-2.0)
    th, loss = best_fixed_comparator(ThresholdGrid(3), [(0.1, 1), (0.9, 0)])
    assert (th, loss) == (0.25, 0.0)
    tab = FiniteTable(np.array([[0.2, -0.5, 0.7]]))
    i, loss = best_fixed_comparator(tab, [0, 1, 2, 2])
    assert i == 0 and loss == pytest.approx(0.2 - 0.5 + 1.4)
    v, loss = best_fixed_comparator(Simplex(3), [np.array([0.3, -0.1, 0.2])])
    np.testing.assert_array_equal(v, [0, 1, 0])
    assert loss == pytest.approx(-0.1)


def test_comparator_ties_go_to_lowest_index():
    tab = FiniteTable(np.array([[0.5, 0.5], [0.0, 0.0], [0.0, 0.0]]))
    assert best_fixed_comparator(tab, [0, 1])[0] == 1


def test_regret_record_identity_and_prefix_mode():
    losses = np.array([0.5, 1.0, 0.0, 1.0])
    comp = np.array([1.0, 0.0, 0.0, 0.0])
    rec = RegretRecord.build(losses, comp, seed=1)
    assert rec.final_regret == pytest.approx(losses.sum() - comp.sum(), rel=1e-9)
    np.testing.assert_allclose(rec.cumulative_regret, np.cumsum(losses) - np.cumsum(comp))
    seq = [(0.2, 1), (0.8, 0), (0.4, 1)]
    cls = ThresholdGrid(None)
    pre = prefix_optimal_losses(cls, seq)
    assert pre[-1] == best_fixed_comparator(cls, seq)[1]


def _random_sequence(cls, rng, T):
    if isinstance(cls, FiniteTable):
        return list(rng.integers(0, cls.n_points, T))
    if isinstance(cls, ThresholdGrid):
        return [(float(rng.random()), int(rng.integers(0, 2))) for _ in range(T)]
    return [rng.uniform(-1, 1, cls.dimension) for _ in range(T)]


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), T=st.integers(1, 30), which=st.sampled_from(range(5)))
def test_comparator_dominates_random_hypotheses(seed, T, which):
    rng = np.random.default_rng(seed)
    cls = [FiniteTable(rng.uniform(-1, 1, (6, 4))), LinearBall(3), Simplex(4), ThresholdGrid(None),
           ThresholdGrid(9, 0.1)][which]
    seq = _random_sequence(cls, rng, T)
    _, best = best_fixed_comparator(cls, seq)
    for h in random_hypotheses(cls, rng, 20):
        assert best <= comparator_round_losses(cls, h, seq, "absolute" if isinstance(cls, ThresholdGrid)
                                               else "linear").sum() + 1e-9


@settings(max_examples=30, deadline=None)
@given(z=st.floats(0, 1), y=st.integers(0, 1), th=st.floats(0, 1))
def test_absolute_loss_in_unit_interval(z, y, th):
    v = loss_value(ThresholdGrid(None), th, (z, y), "absolute")
    assert v in (0.0, 1.0)
