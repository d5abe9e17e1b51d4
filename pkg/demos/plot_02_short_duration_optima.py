"""
Optimal controls below the speed limit
======================================

For short durations a single switch is optimal.  Past a critical duration
an off segment opens in the middle and the best control becomes
P_{t1} 0_{t2} N_{t1}.
"""

import numpy as np

from bangoff.controls import canonicalize
from bangoff.experiments import gap_curve
from bangoff.optimize import Objective, OptimizationConfig, optimize_type

config = OptimizationConfig(n_starts=50)

for T in (0.2, 0.3, 0.5, 0.8, 1.2):
    opt = optimize_type("P0N", T, Objective.STATE_PREP, config)
    print(f"T={T:4.2f}  {canonicalize(opt.control)}  F={1 - opt.best_cost:.10f}")

# gain of a second switch over the first, as a function of T
grid = np.arange(0.30, 0.46, 0.02)
for T, gap in gap_curve(Objective.STATE_PREP, grid, 1, config):
    print(f"T={T:.2f}  dF={gap:.3e}")
