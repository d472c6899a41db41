from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from adversim.adversaries import (AdversaryState, Constraint, ConstrainedAdversary, ConstraintViolation,
                                  HalvingAdversary, History, HybridAdversary, UniformNoise, bin_collisions,
                                  constrained_move, hybrid_move, iid_move, omega_threshold,
                                  rademacher_label_move, smoothed_move)
from adversim.core import GameSpec, LinearBall, Simplex, ThresholdGrid
from adversim.distributions import PointMass, Uniform, UniformSphere
from adversim.engine import ExperimentSpec, run_game
from adversim.learners import OptimisticMirrorDescent, ThresholdEW


def _state(seed=0, history=()):
    return AdversaryState(np.random.default_rng(seed), History([np.asarray(h, dtype=float) for h in history]))


def test_iid_move_examples():
    st = _state()
    for _ in range(3):
        np.testing.assert_array_equal(iid_move(st, PointMass(np.array([0.2, 0.4]))), [0.2, 0.4])
    assert len(st.history) == 3
    st = _state(1)
    xs = np.array([iid_move(st, UniformSphere(2)) for _ in range(10_000)])
    se = xs.std(axis=0, ddof=1) / 100
    assert np.all(np.abs(xs.mean(axis=0)) <= 3 * se)
    a, b = _state(5), _state(5)
    np.testing.assert_array_equal(iid_move(a, UniformSphere(3)), iid_move(b, UniformSphere(3)))


def test_constrained_move_examples():
    var0 = Constraint("variance", sigma=0.0)
    st = _state(history=[[1.0, 0.0], [0.0, 1.0]])
    np.testing.assert_allclose(constrained_move(st, var0, [5.0, -3.0]), [0.5, 0.5])

    slow = Constraint("slow_change", delta=0.1)
    st = _state(history=[[0.0, 0.0]])
    np.testing.assert_allclose(constrained_move(st, slow, [1.0, 0.0]), [0.1, 0.0])

    var = Constraint("variance", sigma=0.5)
    st = _state(history=[[1.0, 0.0]])
    np.testing.assert_array_equal(constrained_move(st, var, [1.0, 0.3]), [1.0, 0.3])


def test_first_move_is_free_and_sup_norm_clips():
    st = _state()
    np.testing.assert_array_equal(constrained_move(st, Constraint("slow_change", delta=0.0), [3.0, 4.0]), [3.0, 4.0])
    sup = Constraint("slow_change", delta=0.2, norm="sup")
    np.testing.assert_allclose(constrained_move(st, sup, [0.0, 5.0]), [2.8, 4.2])


def test_custom_constraint_without_projector_fails():
    c = Constraint("custom", predicate=lambda hist, x: float(np.sum(x)) <= 1.0)
    st = _state()
    np.testing.assert_array_equal(constrained_move(st, c, [0.5, 0.5]), [0.5, 0.5])
    with pytest.raises(ConstraintViolation):
        constrained_move(st, c, [1.0, 1.0])


@pytest.mark.parametrize("kind,norm,cls", [("variance", "euclidean", LinearBall(4)),
                                           ("variance", "sup", Simplex(4)),
                                           ("slow_change", "euclidean", LinearBall(4)),
                                           ("slow_change", "sup", Simplex(4))])
@pytest.mark.parametrize("policy", ["anti_learner", "random"])
def test_constraint_postcondition_holds_every_round(kind, norm, cls, policy):
    params = {"sigma": 0.1} if kind == "variance" else {"delta": 0.05}
    con = Constraint(kind, norm=norm, **params)
    T = 3000
    game = GameSpec(T, cls)
    adv = ConstrainedAdversary(con, policy)
    adv.reset(game, np.random.default_rng(0))
    learner = OptimisticMirrorDescent(hint="mean")
    learner.reset(game)
    for t in range(1, T + 1):
        x = adv.move(t, learner)
        assert con.last_move_ok(adv.state.history)
        learner.update(x)
    assert len(adv.state.history) == T


def test_smoothed_move_noise():
    assert UniformNoise(0.0).sample(np.random.default_rng(0)) == 0.0
    inner = HalvingAdversary()
    game = GameSpec(5, ThresholdGrid(8), "absolute", "supervised")
    inner.reset(game, np.random.default_rng(0))
    learner = ThresholdEW(eta=0.5)
    learner.reset(game)
    st = _state()
    x, xs, s = smoothed_move(st, inner, UniformNoise(0.0), t=1, learner=learner)
    assert xs == x and s == 0.0
    for _ in range(200):
        x, xs, s = smoothed_move(st, inner, UniformNoise(0.2), t=1, learner=learner)
        assert abs(xs[0] - x[0]) <= 0.1 and xs[1] == x[1]
    s = UniformNoise(0.3).sample(np.random.default_rng(1), 100_000)
    n = len(s)
    assert abs(s.mean()) <= 3 * s.std(ddof=1) / np.sqrt(n)
    var_se = np.sqrt(np.var((s - s.mean()) ** 2, ddof=1) / n)
    assert abs(s.var(ddof=1) - 0.3**2 / 12) <= 3 * var_se


def test_omega_threshold_is_exact_for_fractions():
    z, y = omega_threshold((Fraction(1, 2), 1), 0.25)
    assert z == Fraction(3, 4) and y == 1


def test_halving_bookkeeping():
    game = GameSpec(8, ThresholdGrid(None), "absolute", "supervised")
    adv = HalvingAdversary()
    adv.reset(game, np.random.default_rng(0))

    class Always0:
        def prob_label_one(self, z):
            return 0.0

    x = adv.move(1, Always0())
    assert x == (Fraction(1, 2), 1) and adv.version_space == (0, 1)
    adv.observe(x)
    assert adv.version_space == (Fraction(1, 2), 1)
    assert adv.move(2, Always0())[0] == Fraction(3, 4)


def test_halving_tie_forces_label_one():
    class Coin:
        def prob_label_one(self, z):
            return 0.5

    adv = HalvingAdversary()
    adv.reset(GameSpec(2, ThresholdGrid(None), "absolute", "supervised"), np.random.default_rng(0))
    assert adv.move(1, Coin())[1] == 1


@pytest.mark.parametrize("learner,analytic", [("ew", True), ("ew", False), ("ftl", False)])
def test_halving_forces_half_loss_per_round(learner, analytic):
    game = GameSpec(8, ThresholdGrid(1000), "absolute", "supervised")
    spec = ExperimentSpec(game, learner, "halving", replicates=1000 if not analytic else 20, master_seed=3,
                          analytic=analytic)
    recs = run_game(spec)
    assert all(r.comparator_loss == 0.0 for r in recs)
    losses = np.array([r.per_round_loss.sum() for r in recs])
    if analytic:
        assert losses.min() >= 4.0 - 1e-12
    else:
        assert losses.mean() >= 4.0 - 3 * losses.std(ddof=1) / np.sqrt(len(losses))


def test_rademacher_label_move_statistics():
    st = _state(2)
    n = 10_000
    draws = [rademacher_label_move(st, Uniform()) for _ in range(n)]
    x = np.array([float(d[0]) for d in draws])
    y = np.array([d[1] for d in draws], dtype=float)
    assert abs(y.mean() - 0.5) <= 3 * 0.5 / np.sqrt(n)
    assert stats.kstest(x, "uniform").pvalue > 0.01
    assert abs(np.corrcoef(x, y)[0, 1]) <= 3 / np.sqrt(n)
    assert len(st.history) == n


def test_hybrid_labels_do_not_change_the_x_marginal():
    game = GameSpec(500, ThresholdGrid(32), "absolute", "supervised")
    adv = HybridAdversary(Uniform(), "majority_opposite")
    adv.reset(game, np.random.default_rng(3))
    learner = ThresholdEW(eta=0.3)
    learner.reset(game)
    xs = []
    for t in range(1, 501):
        x = adv.move(t, learner)
        assert x[1] == (1 if learner.prob_label_one(x[0]) <= 0.5 else 0)
        learner.update(x)
        xs.append(x[0])
    assert len(adv.state.history) == 500
    assert stats.kstest(xs, "uniform").pvalue > 0.01


def test_hybrid_with_rademacher_policy_matches_rademacher_move():
    a, b = _state(4), _state(4)
    for _ in range(50):
        assert hybrid_move(a, Uniform(), "rademacher") == rademacher_label_move(b, Uniform())


def test_bin_collisions():
    assert not bin_collisions([0.05, 0.15, 0.95], 10)
    assert bin_collisions([0.11, 0.19], 10)
    assert bin_collisions([0.3, 0.3], 10**6)
