"""Bang-off control of two coupled qubits: exact dynamics, optimisation over
switch sequences and durations, and critical-duration locators."""

from .controls import BangOffControl, canonicalize, enumerate_types, flip, validate
from .optimize import Objective, OptimizationConfig, optimize_switch_count, optimize_type
from .quantum import (
    PSI_00,
    PSI_INITIAL,
    PSI_TARGET,
    build_hamiltonian,
    concurrence,
    evolve,
    fidelity,
    ground_state,
    propagator,
)

__all__ = [
    "BangOffControl", "canonicalize", "enumerate_types", "flip", "validate",
    "Objective", "OptimizationConfig", "optimize_switch_count", "optimize_type",
    "PSI_00", "PSI_INITIAL", "PSI_TARGET", "build_hamiltonian", "concurrence",
    "evolve", "fidelity", "ground_state", "propagator",
]
