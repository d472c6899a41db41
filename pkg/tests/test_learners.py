import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from adversim.core import FiniteTable, GameSpec, LinearBall, Simplex, ThresholdGrid
from adversim.learners import (ExponentialWeights, FollowTheLeader, OptimisticMirrorDescent, Regularizer,
                               ThresholdEW, discretization_exponent, discretized_ew_learner, ew_step, ftl_step,
                               grid_size, hedge_eta, make_learner, max_feasible_exponent, omd_step)


def test_ew_step_examples():
    w = np.array([0.2, 0.3, 0.5])
    np.testing.assert_allclose(ew_step(w, [0.7, 0.7, 0.7], 1.3), w)
    np.testing.assert_allclose(ew_step([0.5, 0.5], [1.0, 0.0], math.log(2)), [1 / 3, 2 / 3])
    np.testing.assert_allclose(ew_step(w, [1.0, 0.0, 0.3], 0.0), w)


def test_omd_step_examples():
    reg = Regularizer.for_class(LinearBall(2))
    np.testing.assert_allclose(omd_step([0.3, 0.1], [0.0, 0.0], 0.5, reg), [0.3, 0.1])
    np.testing.assert_allclose(omd_step([0.0, 0.0], [1.0, 0.0], 0.5, reg), [-0.5, 0.0])
    np.testing.assert_allclose(omd_step([0.9, 0.0], [-1.0, 0.0], 0.5, reg), [1.0, 0.0])
    ent = Regularizer.for_class(Simplex(3))
    out = omd_step(np.full(3, 1 / 3), [1.0, 0.0, 0.0], 0.5, ent)
    assert out.sum() == pytest.approx(1.0) and out[0] < out[1] == pytest.approx(out[2])


def test_discretization_examples():
    assert discretization_exponent(10, 0.1) == pytest.approx(4.0)
    assert grid_size(10, 4.0) == 10**4
    ew = discretized_ew_learner(10, 0.1)
    assert ew.expert_cls.size == 10**4 and ew.expert_cls.margin == pytest.approx(0.05)
    assert discretization_exponent(100, 0.01) == pytest.approx(4.0)
    with pytest.raises(MemoryError, match="largest feasible a"):
        discretized_ew_learner(100, 0.01)
    assert discretized_ew_learner(20, 1.0).expert_cls.size == 20**3
    a = max_feasible_exponent(1000)
    assert grid_size(1000, a) < 10**8


def test_ftl_step_examples():
    assert ftl_step([0, 1], FiniteTable(np.array([[0.2, 0.4, 0.1]]))) == 0
    assert ftl_step([(0.1, 1)], ThresholdGrid(3)) == 0.25
    np.testing.assert_allclose(ftl_step([np.array([1.0, 0.0])], LinearBall(2)), [-1.0, 0.0])


def _expected_regret(loss_rows, eta):
    w = np.full(loss_rows.shape[1], 1.0 / loss_rows.shape[1])
    total = 0.0
    for row in loss_rows:
        total += w @ row
        w = ew_step(w, row, eta)
    return total - loss_rows.sum(axis=0).min()


def test_ew_regret_law_exhaustive_two_experts():
    T, N = 4, 2
    eta = hedge_eta(N, T)
    assert eta == pytest.approx(math.sqrt(8 * math.log(2) / 4))
    bound = math.sqrt(T / 2 * math.log(N))
    for pattern in itertools.product(((1.0, 0.0), (0.0, 1.0)), repeat=T):
        assert _expected_regret(np.array(pattern), eta) <= bound + 1e-12


def test_ew_matches_hand_recursion():
    # losses (1,0), (0,1), (1,0), (1,0) with eta = ln 2
    eta = math.log(2)
    w = [0.5, 0.5]
    paid = 0.5
    w = [1 / 3, 2 / 3]
    paid += 2 / 3
    w = [0.5, 0.5]
    paid += 0.5
    w = [1 / 3, 2 / 3]
    paid += 1 / 3
    rows = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 0.0]])
    assert _expected_regret(rows, eta) == pytest.approx(paid - 1.0)

    tab = FiniteTable(np.array([[1.0, 0.0], [0.0, 1.0]]))
    game = GameSpec(4, tab, "linear", "plain")
    ew = ExponentialWeights(eta=eta)
    ew.reset(game)
    got = 0.0
    for x in (0, 1, 0, 0):
        got += ew.expected_loss(x)
        ew.update(x)
    assert got == pytest.approx(paid)


@pytest.mark.parametrize("fraction_inputs", [False, True])
def test_block_ew_matches_dense_ew(fraction_inputs):
    rng = np.random.default_rng(0)
    cls = ThresholdGrid(25, 0.05)
    game = GameSpec(60, cls, "absolute", "supervised")
    blk, dense = ThresholdEW(eta=0.6), ExponentialWeights(eta=0.6)
    blk.reset(game)
    dense.reset(game)
    for t in range(60):
        z = cls.theta(int(rng.integers(0, 25))) if t % 3 == 0 else float(rng.random())
        zz = Fraction(z) if fraction_inputs else z
        y = int(rng.random() < 0.5)
        assert blk.prob_label_one(zz) == pytest.approx(dense.prob_label_one(z), abs=1e-12)
        assert blk.expected_loss((zz, y)) == pytest.approx(dense.expected_loss((z, y)), abs=1e-12)
        blk.update((zz, y))
        dense.update((z, y))


def test_block_ew_sampling_law():
    cls = ThresholdGrid(6)
    game = GameSpec(10, cls, "absolute", "supervised")
    ew = ThresholdEW(eta=1.0)
    ew.reset(game)
    for x in ((0.3, 1), (0.6, 0), (0.45, 1)):
        ew.update(x)
    dense = ExponentialWeights(eta=1.0)
    dense.reset(game)
    for x in ((0.3, 1), (0.6, 0), (0.45, 1)):
        dense.update(x)
    rng = np.random.default_rng(1)
    draws = np.array([ew.sample(rng) for _ in range(20000)])
    counts = np.array([np.sum(np.isclose(draws, th)) for th in cls.thresholds])
    assert counts.sum() == 20000
    assert stats.chisquare(counts, dense.weights * 20000).pvalue > 0.01


def test_ew_on_continuum_needs_a_grid():
    with pytest.raises(ValueError):
        make_learner("ew", ThresholdGrid(None), 10)
    ew = make_learner("ew", ThresholdGrid(None), 10, resolution=1000)
    assert ew.expert_cls.size == 1000


def test_ftl_block_structures_agree_with_comparator():
    rng = np.random.default_rng(2)
    for cls in (ThresholdGrid(None), ThresholdGrid(50)):
        game = GameSpec(40, cls, "absolute", "supervised")
        ftl = FollowTheLeader()
        ftl.reset(game)
        hist = []
        for _ in range(40):
            x = (float(rng.random()), int(rng.random() < 0.3))
            ftl.update(x)
            hist.append(x)
            lead_loss = sum(abs(y - float(z < ftl.leader)) for z, y in hist)
            best = min(sum(abs(y - float(z < th)) for z, y in hist)
                       for th in ([0.0, 1.0] + [z for z, _ in hist] if cls.resolution is None else cls.thresholds))
            assert lead_loss == best


def test_omd_envelope_against_iid_moves():
    T = 500
    game = GameSpec(T, LinearBall(3), "linear", "plain")
    rng = np.random.default_rng(3)
    omd = OptimisticMirrorDescent(hint="none")
    omd.reset(game)
    xs = rng.normal(size=(T, 3))
    xs /= np.maximum(1.0, np.linalg.norm(xs, axis=1))[:, None]
    paid = 0.0
    for x in xs:
        assert np.linalg.norm(omd.mean_hypothesis()) <= 1 + 1e-12
        paid += omd.expected_loss(x)
        omd.update(x)
    regret = paid + np.linalg.norm(xs.sum(axis=0))
    assert regret <= 2 * math.sqrt(2 * T)


def test_omd_simplex_iterates_stay_feasible():
    game = GameSpec(200, Simplex(5), "linear", "plain")
    omd = OptimisticMirrorDescent(hint="mean", budget=2.0)
    omd.reset(game)
    rng = np.random.default_rng(4)
    for _ in range(200):
        f = omd.mean_hypothesis()
        assert np.all(f >= 0) and f.sum() == pytest.approx(1.0)
        omd.update(rng.uniform(-1, 1, 5))
