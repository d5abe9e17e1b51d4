"""
Speed limit of state preparation
================================

Best infidelity against duration for growing switch counts, then the
bisection estimate of the shortest duration with 1 - F <= 1e-10.  The full
nine-switch search takes several minutes on one core; pass a smaller
switch count on the command line for a quicker look.
"""

import sys

import numpy as np

from bangoff.experiments import estimate_qsl, sweep
from bangoff.optimize import Objective, OptimizationConfig

ns = int(sys.argv[1]) if len(sys.argv) > 1 else 9

quick = OptimizationConfig(n_starts=20)
for row in sweep(Objective.STATE_PREP, np.arange(2.0, 3.01, 0.25), min(ns, 4), quick):
    if row.ns == min(ns, 4):
        print(f"T={row.T:.2f}  ns={row.ns}  1-F={row.cost:.3e}  {row.best_type}")

bracket = (2.6, 2.9) if ns >= 9 else (2.6, 3.6)
est = estimate_qsl(ns=ns, bracket=bracket)
print(f"speed limit with {ns} switches: {est.value:.5f}  ({est.optimum.control})")
