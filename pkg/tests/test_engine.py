import math

import numpy as np
import pytest

from adversim.core import FiniteTable, GameSpec, LinearBall, RegretRecord, Simplex, ThresholdGrid
from adversim.distributions import uniform_categorical
from adversim.engine import (BoundTrace, ExperimentSpec, bound_for, lower_bound_check, run_game,
                             slow_change_bound, smoothed_threshold_bound, variance_bound, verify_bound)


def _bytes(records):
    return b"".join(r.cumulative_regret.tobytes() + r.per_round_loss.tobytes() for r in records)


@pytest.mark.parametrize("learner", ["ew", "ftl"])
def test_singleton_class_has_zero_regret(learner):
    game = GameSpec(30, FiniteTable(np.array([[0.3, -0.2, 0.9]])))
    spec = ExperimentSpec(game, learner, "iid", adversary_params={"dist": uniform_categorical(3)}, replicates=4)
    for rec in run_game(spec):
        np.testing.assert_array_equal(rec.cumulative_regret, 0.0)


def test_ew_two_experts_hand_simulation():
    # weights (1/2,1/2), (1/3,2/3), (1/2,1/2), (1/3,2/3) with eta = ln 2
    game = GameSpec(4, FiniteTable(np.array([[1.0, 0.0], [0.0, 1.0]])))
    spec = ExperimentSpec(game, "ew", "sequence", {"eta": math.log(2)}, {"sequence": [0, 1, 0, 0]}, analytic=True)
    (rec,) = run_game(spec)
    np.testing.assert_allclose(rec.per_round_loss, [1 / 2, 2 / 3, 1 / 2, 1 / 3])
    assert rec.comparator_loss == 1.0
    assert rec.final_regret == pytest.approx(1.0)


def test_constant_moves_under_zero_variance():
    game = GameSpec(50, LinearBall(2))
    spec = ExperimentSpec(game, "ftl", "constrained", adversary_params={"constraint": "variance", "sigma": 0.0,
                                                                       "policy": "random"}, replicates=10)
    for rec in run_game(spec):
        assert rec.final_regret <= 2.0 + 1e-12


def test_regret_identity():
    game = GameSpec(200, ThresholdGrid(40), "absolute", "supervised")
    spec = ExperimentSpec(game, "ew", "hybrid", replicates=3, master_seed=5)
    for rec in run_game(spec):
        assert rec.final_regret == pytest.approx(rec.per_round_loss.sum() - rec.comparator_loss, rel=1e-9, abs=1e-12)


def test_bound_examples():
    assert variance_bound(1.0, 1.0, np.zeros(100)) == 0.0
    assert variance_bound(1.0, 1.0, np.full(100, 0.1)) == pytest.approx(2 * math.sqrt(2), abs=1e-4)
    simplex = bound_for("variance", GameSpec(100, Simplex(4)), sigma=0.1)
    assert simplex.value == pytest.approx(3.3302, abs=1e-4)
    assert slow_change_bound(1.0, 1.0, 0.0, 200) == 0.0
    assert slow_change_bound(1.0, 1.0, 0.1, 200) == pytest.approx(4.0)
    assert bound_for("slow_change", GameSpec(200, Simplex(8)), delta=0.1).value == pytest.approx(5.7681, abs=1e-4)
    assert smoothed_threshold_bound(100, 0.01) == pytest.approx(69.861, abs=1e-3)
    assert smoothed_threshold_bound(100, 1.0) == pytest.approx(62.697, abs=1e-3)
    vals = [smoothed_threshold_bound(100, g) for g in (1.0, 0.5, 0.1, 0.01, 0.001)]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    assert bound_for("variance", GameSpec(1000, LinearBall(16)), sigma=0.1).value == pytest.approx(8.944, abs=1e-3)


def test_verify_bound_pairing_and_verdicts():
    rec = RegretRecord.build(np.zeros(5), np.zeros(5), seed=0)
    assert verify_bound([rec], BoundTrace("constant", 1.0, {"T": 5}))["verdict"] == "pass"
    with pytest.raises(ValueError, match="T=7"):
        verify_bound([rec], BoundTrace("constant", 1.0, {"T": 7}))
    thr = GameSpec(5, ThresholdGrid(4), "absolute", "supervised")
    with pytest.raises(ValueError):
        verify_bound([rec], bound_for("variance", GameSpec(5, LinearBall(2)), sigma=0.1), thr)
    with pytest.raises(ValueError):
        bound_for("smoothed_threshold", GameSpec(5, LinearBall(2)), gamma=0.1)
    with pytest.raises(ValueError):
        verify_bound([], BoundTrace("constant", 1.0, {}))


def test_noiseless_halving_beats_the_smoothed_bound():
    T = 64
    # the comparator ranges over the continuum, the learner over a T^3 grid
    game = GameSpec(T, ThresholdGrid(None), "absolute", "supervised")
    spec = ExperimentSpec(game, "ew", "halving", {"resolution": T**3}, replicates=5, analytic=True)
    recs = run_game(spec)
    assert all(r.comparator_loss == 0.0 and r.final_regret >= T / 2 for r in recs)
    out = verify_bound(recs, bound_for("smoothed_threshold", game, gamma=1.0), game)
    assert out["verdict"] == "fail"


def test_lower_bound_check_examples():
    consts = FiniteTable(np.array([[0.0, 0.0], [1.0, 1.0]]))
    out = lower_bound_check(consts, uniform_categorical(2), "ew", 2, 4000, seed=1, n_rademacher=4000,
                            learner_params={"eta": 1.0})
    assert out["verdict"] == "pass"
    assert out["rademacher"]["mean"] == pytest.approx(0.5)
    single = FiniteTable(np.array([[0.4, 0.4]]))
    out = lower_bound_check(single, uniform_categorical(2), "ftl", 5, 50, seed=2, n_rademacher=200)
    assert out["verdict"] == "pass" and out["rademacher"]["mean"] == 0.0
    assert out["mean_regret"]["mean"] == 0.0


def test_lower_bound_constant_pair_regret_level():
    # against fair labels FTL on {0, 1} constants loses about half of every round
    consts = FiniteTable(np.array([[0.0, 0.0], [1.0, 1.0]]))
    out = lower_bound_check(consts, uniform_categorical(2), "ftl", 2, 4000, seed=3, n_rademacher=4000)
    m = out["mean_regret"]
    assert abs(m["mean"] - 0.5) <= 3 * m["std_error"]


@pytest.mark.parametrize("adversary,params,cls,loss,proto,learner", [
    ("constrained", {"constraint": "variance", "sigma": 0.1}, LinearBall(4), "linear", "plain", "omd"),
    ("hybrid", {}, ThresholdGrid(20), "absolute", "supervised", "ew"),
    ("halving", {}, ThresholdGrid(50, 0.05), "absolute", "smoothed", "ew"),
])
def test_determinism_across_thread_counts(adversary, params, cls, loss, proto, learner):
    game = GameSpec(60, cls, loss, proto)
    spec = ExperimentSpec(game, learner, adversary, adversary_params=params, replicates=6, master_seed=11,
                          noise_gamma=0.1 if proto == "smoothed" else None)
    a, b, c = run_game(spec, threads=1), run_game(spec, threads=4), run_game(spec, threads=1)
    assert _bytes(a) == _bytes(b) == _bytes(c)
    assert [r.seed for r in a] == [r.seed for r in b]
