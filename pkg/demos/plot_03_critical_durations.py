"""
Locating the critical durations
===============================

Bisection on yes/no detectors: the gap onsets for state preparation and
entanglement, the point where the first P segment disappears, and the
shortest duration reaching unit concurrence.
"""

from bangoff.experiments import locate

for which in ("tc", "tauc", "tsb", "taumin"):
    est = locate(which)
    lo, hi = est.bracket
    line = f"{est.name:8s} {est.value:.6f}   bracket [{lo:.6f}, {hi:.6f}]"
    if est.optimum is not None:
        line += f"   {est.optimum.control}"
    print(line)
