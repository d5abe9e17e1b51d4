"""Multi-start quasi-Newton optimisation of bang-off durations.

For a fixed control type and total duration T the free variables are the
segment durations, constrained to the simplex {t_k >= 0, sum t_k = T}.  The
constraint is removed by writing t_k = T u_k^2 / sum_j u_j^2 and running BFGS
on u, which also lets a segment shrink to exactly zero length.
"""

from __future__ import annotations

import enum
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .controls import (
    LETTERS,
    BangOffControl,
    enumerate_types,
    flip_type,
    negate_type,
    type_sort_key,
    validate,
)
from .quantum import (
    PSI_00,
    PSI_INITIAL,
    PSI_TARGET,
    build_hamiltonian,
    evolve_with_segment_gradients,
    spectral_decomposition,
)

_LEVEL_INDEX = {c: i for i, c in enumerate(LETTERS)}
_W = np.ascontiguousarray([spectral_decomposition(h).eigenvalues for h in (4.0, 0.0, -4.0)])
_V = np.ascontiguousarray([spectral_decomposition(h).eigenvectors for h in (4.0, 0.0, -4.0)])
_HS = np.ascontiguousarray([build_hamiltonian(h) for h in (4.0, 0.0, -4.0)])


class Objective(enum.Enum):
    """What is minimised: infidelity of state preparation or inconcurrence from |00>."""

    STATE_PREP = "fidelity"
    INCONCURRENCE = "concurrence"

    @property
    def initial_state(self) -> np.ndarray:
        return PSI_INITIAL if self is Objective.STATE_PREP else PSI_00

    @property
    def partner_type(self):
        # exact symmetry of each cost: flip for state prep, negation for concurrence from |00>
        return flip_type if self is Objective.STATE_PREP else negate_type

    @property
    def _kind(self) -> int:
        return _kernels.INFIDELITY if self is Objective.STATE_PREP else _kernels.INCONCURRENCE


@dataclass(frozen=True)
class OptimizationConfig:
    n_starts: int = 100
    seed: int = 0
    gradient_tolerance: float = 1e-12
    cost_tolerance: float = 1e-15
    max_iterations: int = 2000
    simplex_floor: float = 1e-6
    # costs closer than this count as tied when ranking control types
    tie_tolerance: float = 1e-12
    workers: int = 1

    def __post_init__(self):
        if self.n_starts < 1:
            raise ValueError("n_starts must be at least 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        for name in ("gradient_tolerance", "cost_tolerance", "simplex_floor"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.tie_tolerance < 0:
            raise ValueError("tie_tolerance must be non-negative")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")


@dataclass(frozen=True)
class TypeOptimum:
    control_type: str
    total_duration: float
    best_durations: tuple[float, ...]
    best_cost: float
    converged: bool
    starts_used: int
    objective: Objective = Objective.STATE_PREP
    symmetric: bool = field(default=False, compare=False)

    @property
    def control(self) -> BangOffControl:
        return BangOffControl(self.control_type, self.best_durations)

    def partner(self) -> "TypeOptimum":
        """The symmetry image of this optimum, which has the same cost."""
        if self.objective is Objective.STATE_PREP:
            ctype, durs = flip_type(self.control_type), self.best_durations[::-1]
        else:
            ctype, durs = negate_type(self.control_type), self.best_durations
        return TypeOptimum(ctype, self.total_duration, durs, self.best_cost, self.converged,
                           self.starts_used, self.objective, self.symmetric)

    def to_dict(self) -> dict:
        return {
            "type": self.control_type,
            "durations": list(self.best_durations),
            "total_duration": self.total_duration,
            "cost": self.best_cost,
            "objective": self.objective.value,
            "converged": self.converged,
            "starts_used": self.starts_used,
        }


def objective_and_gradient(kind: Objective, control: BangOffControl):
    """Cost (1 - F or 1 - C) and its gradient with respect to the durations.

    This is the reference path built on ``evolve_with_segment_gradients``;
    the optimiser itself runs the compiled kernel, which must agree with it.
    """
    psi, grads = evolve_with_segment_gradients(kind.initial_state, control)
    if kind is Objective.STATE_PREP:
        ov = np.vdot(PSI_TARGET, psi)
        cost = 1.0 - abs(ov) ** 2
        grad = -2.0 * np.real(np.conj(ov) * (grads @ PSI_TARGET.conj()))
    else:
        a, b, c, d = psi
        f = a * d - b * c
        cost = 1.0 - 2.0 * abs(f)
        if abs(f) == 0:
            grad = np.zeros(len(grads))
        else:
            df = grads[:, 0] * d + a * grads[:, 3] - grads[:, 1] * c - b * grads[:, 2]
            grad = -2.0 * np.real(np.conj(f) * df) / abs(f)
    return float(cost), grad


def kernel_cost(kind: Objective, control: BangOffControl) -> float:
    """Cost of a control through the compiled path."""
    idx = _level_indices(control.control_type)
    grad = np.empty(len(idx))
    return float(_kernels.cost_grad_t(idx, np.asarray(control.durations, dtype=float),
                                      kind.initial_state, PSI_TARGET, kind._kind,
                                      _W, _V, _HS, grad))


def _level_indices(control_type: str) -> np.ndarray:
    return np.array([_LEVEL_INDEX[c] for c in control_type], dtype=np.int64)


def _type_key(control_type: str, symmetric: bool) -> int:
    # base-3 digits behind a leading 1, so types of different lengths differ
    key = 1
    for c in control_type:
        key = 3 * key + _LEVEL_INDEX[c]
    return 2 * key + int(symmetric)


def _tie_map(n: int, symmetric: bool) -> np.ndarray:
    if not symmetric:
        return np.arange(n, dtype=np.int64)
    return np.array([min(k, n - 1 - k) for k in range(n)], dtype=np.int64)


def _guess_to_u(durations, tie: np.ndarray, T: float, floor: float) -> np.ndarray:
    t = np.maximum(np.asarray(durations, dtype=float) / T, floor / T)
    u = np.zeros(int(tie.max()) + 1)
    counts = np.zeros_like(u)
    for k, j in enumerate(tie):
        u[j] += t[k]
        counts[j] += 1
    return np.sqrt(u / counts)


def optimize_type(control_type: str, total_duration: float, kind: Objective,
                  config: OptimizationConfig = OptimizationConfig(), *,
                  initial_guesses=(), symmetric: bool = False) -> TypeOptimum:
    """Best durations for one control type at total duration T.

    Runs ``config.n_starts`` descents from uniform random points on the
    simplex plus one from each duration vector in ``initial_guesses``.
    With ``symmetric=True`` durations are tied palindromically
    (t_k = t_{n-1-k}), which is how symmetric ansatz families are searched.
    """
    T = float(total_duration)
    if not T > 0:
        raise ValueError(f"total duration must be positive, got {total_duration!r}")
    validate(BangOffControl(control_type, (0.0,) * len(control_type)))
    n = len(control_type)
    idx = _level_indices(control_type)
    tie = _tie_map(n, symmetric)
    n_params = int(tie.max()) + 1
    psi0 = kind.initial_state

    rng = np.random.default_rng([config.seed, _type_key(control_type, symmetric)])
    starts = np.sqrt(rng.exponential(size=(config.n_starts, n_params)))
    guesses = [_guess_to_u(g, tie, T, config.simplex_floor) for g in initial_guesses
               if len(g) == n]
    if guesses:
        starts = np.vstack([starts, np.array(guesses)])

    args = (tie, T, idx, psi0, PSI_TARGET, kind._kind, _W, _V, _HS,
            config.gradient_tolerance, config.cost_tolerance, config.max_iterations)
    xs, costs, conv = _kernels.multistart(starts, *args)
    best = int(np.argmin(costs))
    t = _kernels.simplex_map(xs[best], tie, T)

    small = t < config.simplex_floor
    if small.any() and not small.all():
        t[small] = 0.0
        active = np.flatnonzero(~small)
        sub_tie = tie[active]
        _, sub_tie = np.unique(sub_tie, return_inverse=True)
        sub_tie = sub_tie.astype(np.int64)
        u0 = _guess_to_u(t[active], sub_tie, T, config.simplex_floor)
        x, _, _, _ = _kernels.bfgs(u0, sub_tie, T, idx[active], psi0, PSI_TARGET, kind._kind,
                                   _W, _V, _HS, config.gradient_tolerance,
                                   config.cost_tolerance, config.max_iterations)
        t[active] = _kernels.simplex_map(x, sub_tie, T)
    t *= T / t.sum()

    grad = np.empty(n)
    cost = float(_kernels.cost_grad_t(idx, t, psi0, PSI_TARGET, kind._kind, _W, _V, _HS, grad))
    cost = min(max(cost, 0.0), 1.0)
    return TypeOptimum(control_type, T, tuple(float(x) for x in t), cost,
                       bool(conv.any()), len(starts), kind, symmetric)


def pick_best(optima, tie_tolerance: float) -> TypeOptimum:
    """Lowest cost; near-ties go to the type that enumerates first."""
    optima = list(optima)
    lowest = min(o.best_cost for o in optima)
    tied = [o for o in optima if o.best_cost <= lowest + tie_tolerance]
    return min(tied, key=lambda o: type_sort_key(o.control_type))


def optimize_types(types, total_duration: float, kind: Objective,
                   config: OptimizationConfig = OptimizationConfig(), *,
                   initial_guesses=None, symmetric: bool = False) -> list[TypeOptimum]:
    """``optimize_type`` over several types, solving one member of each symmetry pair.

    Results come back in the order of ``types``.  ``initial_guesses`` maps a
    type to a list of duration vectors used as extra starts.
    """
    types = list(types)
    initial_guesses = initial_guesses or {}
    partner_of = kind.partner_type
    present = set(types)

    def mirror(durations):
        return durations[::-1] if kind is Objective.STATE_PREP else durations

    jobs = {}
    for ct in types:
        p = partner_of(ct)
        rep = min(ct, p, key=type_sort_key) if p in present else ct
        if rep in jobs:
            continue
        guesses = list(initial_guesses.get(rep, ()))
        if p != rep and p in present:
            guesses += [tuple(mirror(tuple(g))) for g in initial_guesses.get(p, ())]
        jobs[rep] = guesses

    def run(rep):
        return optimize_type(rep, total_duration, kind, config,
                             initial_guesses=jobs[rep], symmetric=symmetric)

    reps = list(jobs)
    if config.workers > 1 and len(reps) > 1:
        with ThreadPoolExecutor(config.workers) as pool:
            solved = dict(zip(reps, pool.map(run, reps)))
    else:
        solved = {rep: run(rep) for rep in reps}

    out = []
    for ct in types:
        if ct in solved:
            out.append(solved[ct])
        else:
            out.append(solved[partner_of(ct)].partner())
    return out


def optimize_switch_count(ns: int, total_duration: float, kind: Objective,
                          config: OptimizationConfig = OptimizationConfig(), *,
                          types=None, initial_guesses=None, symmetric: bool = False):
    """Optimise every type with ``ns`` switches; returns ``(best, per_type)``."""
    if ns < 0:
        raise ValueError("switch count must be non-negative")
    if types is None:
        types = enumerate_types(ns)
    per_type = optimize_types(types, total_duration, kind, config,
                              initial_guesses=initial_guesses, symmetric=symmetric)
    return pick_best(per_type, config.tie_tolerance), per_type


def pad_type(control_type: str) -> str:
    """Append the first level (in P, 0, N order) that differs from the last one."""
    last = control_type[-1]
    return control_type + next(c for c in LETTERS if c != last)


@dataclass(frozen=True)
class NsBest:
    ns: int
    cost: float
    optimum: TypeOptimum
    per_type: list = field(repr=False, compare=False, default_factory=list)
    wall_time: float = field(default=0.0, compare=False)


def best_over_ns_range(ns_max: int, total_duration: float, kind: Objective,
                       config: OptimizationConfig = OptimizationConfig(), *,
                       ns_min: int = 0) -> list[NsBest]:
    """Best cost for each switch count ns_min..ns_max.

    Each switch count also starts from the previous optimum padded with one
    zero-length segment, and falls back to that padded control if the search
    does worse, so the reported costs never increase with ns.
    """
    if ns_min < 0 or ns_max < ns_min:
        raise ValueError("need 0 <= ns_min <= ns_max")
    out = []
    prev = None
    for ns in range(ns_min, ns_max + 1):
        guesses = None
        padded = None
        if prev is not None:
            ptype = pad_type(prev.control_type)
            pdurs = prev.best_durations + (0.0,)
            guesses = {ptype: [pdurs]}
            padded = TypeOptimum(ptype, prev.total_duration, pdurs, prev.best_cost,
                                 prev.converged, 0, kind)
        started = time.perf_counter()
        best, per_type = optimize_switch_count(ns, total_duration, kind, config,
                                               initial_guesses=guesses)
        if padded is not None and best.best_cost > padded.best_cost:
            best = padded
        out.append(NsBest(ns, best.best_cost, best, per_type, time.perf_counter() - started))
        prev = best
    return out


__all__ = [
    "Objective",
    "OptimizationConfig",
    "TypeOptimum",
    "NsBest",
    "objective_and_gradient",
    "kernel_cost",
    "optimize_type",
    "optimize_types",
    "optimize_switch_count",
    "best_over_ns_range",
    "pick_best",
    "pad_type",
]

