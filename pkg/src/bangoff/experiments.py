"""Duration sweeps, gap curves and critical-time locators.

The five critical times are all found by bisection on a yes/no detector:

* ``Tc``, ``tau_c`` -- the best cost with i + 1 switches first beats the best
  with i switches by more than a threshold;
* ``Tsb``           -- the first duration of the best ``P0N`` control vanishes;
* ``Tqsl``, ``tau_min`` -- the best cost with ns switches drops to eps.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .controls import flip, type_sort_key
from .optimize import (
    Objective,
    OptimizationConfig,
    TypeOptimum,
    best_over_ns_range,
    optimize_switch_count,
    optimize_type,
    optimize_types,
    pick_best,
)

SWEEP_HEADER = ["T", "ns", "cost", "best_type", "durations_json", "wall_time_s"]

GAP_THRESHOLD = 1e-11
QSL_EPS = 1e-10
TAU_MIN_EPS = 1e-8
PRECISION = 1e-5


class BracketError(ValueError):
    pass


@dataclass(frozen=True)
class SweepRow:
    T: float
    ns: int
    cost: float
    best_type: str
    durations: tuple[float, ...]
    wall_time: float
    converged: bool = True
    delta_cost: float | None = None


@dataclass
class CriticalTimeEstimate:
    name: str
    value: float
    bracket: tuple[float, float]
    detector_threshold: float
    precision: float
    seed: int
    optimum: TypeOptimum | None = None
    history: list = field(default_factory=list, repr=False)
    converged: bool = True

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "value": self.value,
            "bracket": list(self.bracket),
            "threshold": self.detector_threshold,
            "precision": self.precision,
            "seed": self.seed,
            "converged": self.converged,
        }
        if self.optimum is not None:
            out["optimum"] = self.optimum.to_dict()
        out["history"] = [list(h) for h in self.history]
        return out


def _check_grid(T_grid) -> list[float]:
    grid = [float(T) for T in T_grid]
    if not grid:
        raise ValueError("duration grid is empty")
    if any(T <= 0 for T in grid):
        raise ValueError("durations must be positive")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("duration grid must be strictly increasing")
    return grid


def duration_grid(t_min: float, t_max: float, t_step: float) -> list[float]:
    """Inclusive grid t_min, t_min + step, ..., <= t_max."""
    if t_step <= 0:
        raise ValueError("grid step must be positive")
    if t_min > t_max:
        raise ValueError(f"empty grid: t_min {t_min} > t_max {t_max}")
    n = int(math.floor((t_max - t_min) / t_step + 1e-9))
    return [t_min + k * t_step for k in range(n + 1)]


def sweep(kind: Objective, T_grid, ns_max: int,
          config: OptimizationConfig = OptimizationConfig()) -> list[SweepRow]:
    """One row per (T, ns), ns = 0..ns_max; ``delta_cost`` holds cost(ns) - cost(ns+1)."""
    rows = []
    for T in _check_grid(T_grid):
        results = best_over_ns_range(ns_max, T, kind, config)
        for k, r in enumerate(results):
            gap = results[k].cost - results[k + 1].cost if k + 1 < len(results) else None
            rows.append(SweepRow(T, r.ns, r.cost, r.optimum.control_type,
                                 r.optimum.best_durations, r.wall_time,
                                 r.optimum.converged, gap))
    return rows


def gap_at(kind: Objective, T: float, i: int,
           config: OptimizationConfig = OptimizationConfig()):
    """best(ns=i) - best(ns=i+1) at one duration, with both optima."""
    lower, upper = best_over_ns_range(i + 1, T, kind, config, ns_min=i)
    return lower.cost - upper.cost, lower.optimum, upper.optimum


def gap_curve(kind: Objective, T_grid, i: int,
              config: OptimizationConfig = OptimizationConfig()) -> list[tuple[float, float]]:
    return [(T, gap_at(kind, T, i, config)[0]) for T in _check_grid(T_grid)]


def write_sweep_csv(rows, path, gaps: bool = False) -> None:
    """Write sweep rows as CSV to a path or an open text stream."""
    if hasattr(path, "write"):
        _write_sweep_rows(rows, path, gaps)
        return
    with open(path, "w", newline="") as fh:
        _write_sweep_rows(rows, fh, gaps)


def _write_sweep_rows(rows, fh, gaps: bool) -> None:
    w = csv.writer(fh)
    w.writerow(SWEEP_HEADER + (["delta_cost"] if gaps else []))
    for r in rows:
        line = [repr(r.T), r.ns, repr(r.cost), r.best_type,
                json.dumps(list(r.durations)), repr(r.wall_time)]
        if gaps:
            line.append("" if r.delta_cost is None else repr(r.delta_cost))
        w.writerow(line)


def read_sweep_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_critical(estimate: CriticalTimeEstimate, path) -> None:
    Path(path).write_text(json.dumps(estimate.to_dict(), indent=2) + "\n")


def _bisect(detect, lo: float, hi: float, precision: float):
    """Shrink [lo, hi] around the switch-on point of ``detect``.

    ``detect(T)`` returns ``(fired, value, payload)``; it must not fire at
    ``lo`` and must fire at ``hi`` (checked by the caller).
    """
    history = []
    payload_hi = None
    while hi - lo > precision:
        mid = 0.5 * (lo + hi)
        fired, value, payload = detect(mid)
        history.append((mid, value, fired))
        if fired:
            hi, payload_hi = mid, payload
        else:
            lo = mid
    return lo, hi, history, payload_hi


def find_gap_onset(kind: Objective, i: int, bracket=(0.3, 0.45), threshold: float = GAP_THRESHOLD,
                   precision: float = PRECISION,
                   config: OptimizationConfig = OptimizationConfig(),
                   name: str | None = None) -> CriticalTimeEstimate:
    """Smallest T at which one extra switch improves the best cost by more than ``threshold``."""
    lo, hi = map(float, bracket)
    if not 0 < lo < hi:
        raise BracketError(f"invalid bracket {bracket}")

    def detect(T):
        gap, _, upper = gap_at(kind, T, i, config)
        return gap > threshold, gap, upper

    fired_lo, gap_lo, _ = detect(lo)
    fired_hi, gap_hi, opt_hi = detect(hi)
    if fired_lo or not fired_hi:
        raise BracketError(
            f"bracket ({lo}, {hi}) does not straddle the gap onset: "
            f"gap({lo}) = {gap_lo:.3e}, gap({hi}) = {gap_hi:.3e}, threshold {threshold:.1e}"
        )
    a, b, history, payload = _bisect(detect, lo, hi, precision)
    history = [(lo, gap_lo, False), (hi, gap_hi, True)] + history
    if name is None:
        name = "Tc" if kind is Objective.STATE_PREP else "tau_c"
    return CriticalTimeEstimate(name, 0.5 * (a + b), (a, b), threshold, precision,
                                config.seed, payload or opt_hi, history)


def find_tsb(bracket=(1.4, 1.7), precision: float = PRECISION,
             config: OptimizationConfig = OptimizationConfig()) -> CriticalTimeEstimate:
    """Duration at which the first segment of the optimal ``P0N`` control reaches zero.

    The optimum is reported in the orientation with t1 <= t3, so both members
    of a flip pair are detected.
    """
    lo, hi = map(float, bracket)
    if not 0 < lo < hi:
        raise BracketError(f"invalid bracket {bracket}")

    def detect(T):
        opt = optimize_type("P0N", T, Objective.STATE_PREP, config)
        # past the onset the optimum is flip-degenerate: P0N with t1 = 0 or t3 = 0
        if opt.best_durations[0] > opt.best_durations[2]:
            opt = opt.partner()
        t1 = opt.best_durations[0]
        return t1 == 0.0, t1, opt

    f_lo, t_lo, _ = detect(lo)
    f_hi, t_hi, opt_hi = detect(hi)
    if f_lo or not f_hi:
        raise BracketError(
            f"first P0N duration does not vanish inside ({lo}, {hi}): "
            f"t1({lo}) = {t_lo:.3e}, t1({hi}) = {t_hi:.3e}"
        )
    a, b, history, payload = _bisect(detect, lo, hi, precision)
    history = [(lo, t_lo, False), (hi, t_hi, True)] + history
    return CriticalTimeEstimate("Tsb", 0.5 * (a + b), (a, b), config.simplex_floor,
                                precision, config.seed, payload or opt_hi, history)


def _top_types(per_type, k: int) -> list[str]:
    ranked = sorted(per_type, key=lambda o: (o.best_cost, type_sort_key(o.control_type)))
    return [o.control_type for o in ranked[:k]]


def estimate_reach_time(kind: Objective, ns: int, eps: float, bracket, precision: float = PRECISION,
                        config: OptimizationConfig = OptimizationConfig(), *,
                        types=None, symmetric: bool = False, n_candidates: int = 8,
                        name: str = "Tqsl") -> CriticalTimeEstimate:
    """Smallest T at which the best ns-switch cost falls to ``eps``.

    Both bracket ends get a search over every type.  Each bisection midpoint
    then re-optimises the ``n_candidates`` best types of each end, warm
    started from those ends' optima as well as from fresh random starts.
    """
    lo, hi = map(float, bracket)
    if not 0 < lo < hi:
        raise BracketError(f"invalid bracket {bracket}")

    def solve(T, candidate_types, guesses):
        per_type = optimize_types(candidate_types, T, kind, config,
                                  initial_guesses=guesses, symmetric=symmetric)
        return pick_best(per_type, config.tie_tolerance), per_type

    all_types = types
    if all_types is None:
        _, per_lo = optimize_switch_count(ns, lo, kind, config, symmetric=symmetric)
        _, per_hi = optimize_switch_count(ns, hi, kind, config, symmetric=symmetric)
    else:
        all_types = list(all_types)
        _, per_lo = solve(lo, all_types, None)
        _, per_hi = solve(hi, all_types, None)
    best_lo = pick_best(per_lo, config.tie_tolerance)
    best_hi = pick_best(per_hi, config.tie_tolerance)
    if best_lo.best_cost <= eps or best_hi.best_cost > eps:
        raise BracketError(
            f"bracket ({lo}, {hi}) does not straddle cost {eps:.1e}: "
            f"best({lo}) = {best_lo.best_cost:.3e}, best({hi}) = {best_hi.best_cost:.3e}"
        )
    ends = {"lo": per_lo, "hi": per_hi}
    history = [(lo, best_lo.best_cost, False), (hi, best_hi.best_cost, True)]
    flags = [best_lo.converged, best_hi.converged]
    best_at_hi = best_hi
    while hi - lo > precision:
        mid = 0.5 * (lo + hi)
        candidates = []
        for per in (ends["lo"], ends["hi"]):
            for ct in _top_types(per, n_candidates):
                if ct not in candidates:
                    candidates.append(ct)
        guesses = {}
        for per in (ends["lo"], ends["hi"]):
            for o in per:
                if o.control_type in candidates:
                    guesses.setdefault(o.control_type, []).append(o.best_durations)
        candidates.sort(key=type_sort_key)
        best, per_mid = solve(mid, candidates, guesses)
        fired = best.best_cost <= eps
        history.append((mid, best.best_cost, fired))
        flags.append(best.converged)
        if fired:
            hi, ends["hi"], best_at_hi = mid, per_mid, best
        else:
            lo, ends["lo"] = mid, per_mid
    return CriticalTimeEstimate(name, 0.5 * (lo + hi), (lo, hi), eps, precision, config.seed,
                                best_at_hi, history, all(flags))


def estimate_qsl(ns: int = 9, infidelity_eps: float = QSL_EPS, bracket=(2.6, 2.9),
                 precision: float = PRECISION, config: OptimizationConfig = OptimizationConfig(),
                 *, types=None, symmetric: bool = False, n_candidates: int = 8) -> CriticalTimeEstimate:
    """Quantum speed limit estimate for state preparation with ns-switch controls."""
    return estimate_reach_time(Objective.STATE_PREP, ns, infidelity_eps, bracket, precision, config,
                               types=types, symmetric=symmetric, n_candidates=n_candidates,
                               name="Tqsl")


def estimate_tau_min(ns: int = 3, inconcurrence_eps: float = TAU_MIN_EPS, bracket=(1.6, 1.9),
                     precision: float = PRECISION,
                     config: OptimizationConfig = OptimizationConfig(),
                     *, types=None, n_candidates: int = 8) -> CriticalTimeEstimate:
    """Minimal duration to reach unit concurrence from |00>."""
    return estimate_reach_time(Objective.INCONCURRENCE, ns, inconcurrence_eps, bracket, precision,
                               config, types=types, n_candidates=n_candidates, name="tau_min")


CRITICAL_DEFAULTS = {
    "tc": {"bracket": (0.3, 0.45), "threshold": GAP_THRESHOLD},
    "tsb": {"bracket": (1.4, 1.7)},
    "qsl": {"bracket": (2.6, 2.9), "ns": 9, "eps": QSL_EPS},
    "tauc": {"bracket": (0.3, 0.45), "threshold": GAP_THRESHOLD},
    "taumin": {"bracket": (1.6, 1.9), "ns": 3, "eps": TAU_MIN_EPS},
}


def locate(which: str, *, bracket=None, precision: float = PRECISION,
           config: OptimizationConfig = OptimizationConfig(), ns: int | None = None,
           eps: float | None = None, threshold: float | None = None,
           control_type: str | None = None, symmetric: bool = False) -> CriticalTimeEstimate:
    """Run the locator for one named critical time with its default settings."""
    if which not in CRITICAL_DEFAULTS:
        raise ValueError(f"unknown critical time {which!r}; choose from {sorted(CRITICAL_DEFAULTS)}")
    d = CRITICAL_DEFAULTS[which]
    bracket = tuple(bracket) if bracket is not None else d["bracket"]
    types = [control_type] if control_type else None
    if which == "tc":
        return find_gap_onset(Objective.STATE_PREP, 1, bracket,
                              d["threshold"] if threshold is None else threshold, precision, config)
    if which == "tauc":
        return find_gap_onset(Objective.INCONCURRENCE, 0, bracket,
                              d["threshold"] if threshold is None else threshold, precision, config)
    if which == "tsb":
        return find_tsb(bracket, precision, config)
    if which == "qsl":
        return estimate_qsl(d["ns"] if ns is None else ns, d["eps"] if eps is None else eps,
                            bracket, precision, config, types=types, symmetric=symmetric)
    return estimate_tau_min(d["ns"] if ns is None else ns, d["eps"] if eps is None else eps,
                            bracket, precision, config, types=types)


def flip_partner_distance(a: TypeOptimum, b: TypeOptimum) -> float:
    """Largest per-duration gap between ``a`` and the flip image of ``b`` (inf if types differ)."""
    fb = flip(b.control)
    if fb.control_type != a.control_type:
        return math.inf
    return float(np.max(np.abs(np.subtract(a.best_durations, fb.durations))))


def timed(fn, *args, **kwargs):
    started = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - started
