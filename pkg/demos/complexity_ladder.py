"""Complexity of one finite class under several point processes.

Every distribution-dependent value (i.i.d. equals classical) sits below the
worst case over all trees.  A sticky chain repeats points, so it can land
below the i.i.d. value.  The Dudley bound for a strategy dominates that
strategy's value, loosely.
"""
import numpy as np

from adversim.complexity import (classical_rademacher, distdep_rademacher, dudley_bound,
                                 worstcase_sequential_rademacher)
from adversim.core import FiniteTable
from adversim.distributions import uniform_categorical
from adversim.trees import IIDStrategy, MarkovStrategy

T = 6
rng = np.random.default_rng(0)
cls = FiniteTable(rng.uniform(-1, 1, (5, 4)))
P = np.full((4, 4), 0.05) + 0.8 * np.eye(4)  # sticky chain, rows sum to 1
sticky = MarkovStrategy.finite_chain([0.25] * 4, P)

rows = [
    ("classical, uniform x", classical_rademacher(cls, uniform_categorical(4), T, 20000, seed=1)),
    ("distdep, iid uniform", distdep_rademacher(cls, IIDStrategy(uniform_categorical(4)), T, 20000, seed=2)),
    ("distdep, sticky Markov", distdep_rademacher(cls, sticky, T, 20000, seed=3)),
]
for name, est in rows:
    print(f"{name:>24}: {est.mean:.4f} +- {est.std_error:.4f}")
print(f"{'worst case (exact)':>24}: {worstcase_sequential_rademacher(cls, T):.4f}")
du = dudley_bound(cls, IIDStrategy(uniform_categorical(4)), T, 100, seed=4)
print(f"{'Dudley, iid uniform':>24}: {du.mean:.4f} +- {du.std_error:.4f}")
