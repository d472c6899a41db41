"""Halving adversary on thresholds, with and without uniform noise on z.

Without noise every round costs the learner about 1/2 while a consistent
threshold always exists.  With noise the same adversary is harmless to
exponential weights over a fine grid.  Writes smoothing_contrast.svg.

    python3 demos/smoothing_contrast.py [T] [gamma]
"""
import sys

import numpy as np

from adversim.core import GameSpec, ThresholdGrid
from adversim.engine import ExperimentSpec, bound_for, run_game
from adversim.learners import max_feasible_exponent
from adversim.output import regret_svg

T = int(sys.argv[1]) if len(sys.argv) > 1 else 500
gamma = float(sys.argv[2]) if len(sys.argv) > 2 else 0.01
a = min(3 + np.log(1 / gamma) / np.log(T), max_feasible_exponent(T))

noiseless = ExperimentSpec(GameSpec(T, ThresholdGrid(None), "absolute", "supervised"), "ew", "halving",
                           {"resolution": T**2}, replicates=5, master_seed=1, analytic=True, id="no noise")
smoothed = ExperimentSpec(GameSpec(T, ThresholdGrid(None, gamma / 2), "absolute", "smoothed"), "discretized_ew",
                          "halving", {"gamma": gamma, "a": a}, replicates=5, master_seed=1, noise_gamma=gamma,
                          id=f"noise gamma={gamma}")

curves = []
for spec in (noiseless, smoothed):
    recs = run_game(spec)
    final = np.array([r.final_regret for r in recs])
    print(f"{spec.id:>18}: mean regret {final.mean():8.2f}  regret/T {final.mean() / T:.3f}")
    curves.append((spec.id, recs))

bound = bound_for("smoothed_threshold", smoothed.game, gamma=gamma).value
print(f"{'smoothed bound':>18}: {bound:8.2f}  (grid exponent a = {a:.3f})")
with open("smoothing_contrast.svg", "wb") as fh:
    fh.write(regret_svg(curves, bound, f"halving adversary, T={T}"))
