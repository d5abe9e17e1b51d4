"""
Reaching unit concurrence
=========================

Optimise the three-switch control at the minimal duration, then follow
the state: the reduced Bloch vector of one qubit shrinks to the origin
while the weights on the three triplet Bell states stay nonzero.
"""

from bangoff.optimize import Objective, optimize_switch_count
from bangoff.quantum import PSI_00, sample_trajectory

T = 1.778635
best, _ = optimize_switch_count(3, T, Objective.INCONCURRENCE)
print(best.control, "1 - C =", best.best_cost)

for s in sample_trajectory(PSI_00, best.control, 0.2):
    w = [abs(c) ** 2 for c in s.bell[:3]]
    print(f"t={s.time:.3f}  r=({s.bloch.x:+.3f}, {s.bloch.y:+.3f}, {s.bloch.z:+.3f})  "
          f"C={s.concurrence:.6f}  |C_i|^2={[round(x, 4) for x in w]}")
