"""
Exact dynamics under a bang-off field
=====================================

Build the Hamiltonian at the three field levels, check the spectral
propagator against a direct matrix exponential and look at the two
symmetries the optimiser relies on.
"""

import numpy as np
import scipy.linalg

from bangoff import quantum as q
from bangoff.controls import BangOffControl, flip, negate

# the field-free Hamiltonian is diagonal
print(q.build_hamiltonian(0.0))

# initial and target states are ground states at hx = -2 and hx = +2
print("psi_i =", np.round(q.PSI_INITIAL.real, 8))
print("psi_t =", np.round(q.PSI_TARGET.real, 8))

# spectral propagator vs expm for one P segment
u = q.propagator(4.0, 0.1)
ref = scipy.linalg.expm(-1j * q.build_hamiltonian(4.0) * 0.1)
print("max |U - expm| =", np.abs(u - ref).max())

# the best one-switch control at T = 0.2
pn = BangOffControl("PN", (0.1, 0.1))
print("F(P_0.1 N_0.1) =", q.fidelity(q.evolve(q.PSI_INITIAL, pn), q.PSI_TARGET))

# flipping the field in time and sign leaves the preparation fidelity unchanged
c = BangOffControl("P0NP", (0.3, 0.2, 0.45, 0.1))
f1 = q.fidelity(q.evolve(q.PSI_INITIAL, c), q.PSI_TARGET)
f2 = q.fidelity(q.evolve(q.PSI_INITIAL, flip(c)), q.PSI_TARGET)
print("flip:", f1, f2)

# negating the field leaves the concurrence reached from |00> unchanged
c1 = q.concurrence(q.evolve(q.PSI_00, c))
c2 = q.concurrence(q.evolve(q.PSI_00, negate(c)))
print("negate:", c1, c2)
