"""Bang-off control fields.

A control is a *type* -- a string over the letters ``P``, ``0`` and ``N`` --
together with one duration per letter.  ``P`` holds the field at ``+M``,
``N`` at ``-M`` and ``0`` switches it off.  Segments are applied left to
right, so ``BangOffControl("P0N", (t1, t2, t3))`` is

    h(t) = +M  on [0, t1)
           0   on [t1, t1 + t2)
           -M  on [t1 + t2, T]
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

M = 4.0
LETTERS = "P0N"
LEVELS = {"P": M, "0": 0.0, "N": -M}
_NEGATE = {"P": "N", "0": "0", "N": "P"}

SUM_TOLERANCE = 1e-9


class ControlError(ValueError):
    pass


class UnknownLevelError(ControlError):
    pass


class AdjacentLevelError(ControlError):
    pass


class NegativeDurationError(ControlError):
    pass


class DurationSumError(ControlError):
    pass


class ControlParseError(ControlError):
    pass


@dataclass(frozen=True)
class BangOffControl:
    """A control type plus its segment durations."""

    control_type: str
    durations: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "durations", tuple(float(t) for t in self.durations))
        bad = set(self.control_type) - set(LETTERS)
        if bad:
            raise UnknownLevelError(f"unknown control level(s) {sorted(bad)} in {self.control_type!r}")
        if len(self.durations) != len(self.control_type):
            raise ControlError(
                f"type {self.control_type!r} has {len(self.control_type)} segments "
                f"but {len(self.durations)} durations were given"
            )

    @property
    def total_duration(self) -> float:
        return float(sum(self.durations))

    @property
    def n_switches(self) -> int:
        return len(self.control_type) - 1

    @property
    def fields(self) -> np.ndarray:
        return np.array([LEVELS[c] for c in self.control_type])

    def __str__(self):
        return "".join(f"{c}_{{{t:.6g}}}" for c, t in zip(self.control_type, self.durations))


def enumerate_types(ns: int) -> list[str]:
    """All 3 * 2**ns control types with ``ns`` switches, in P < 0 < N order."""
    if ns < 0:
        raise ValueError("switch count must be non-negative")
    out = []
    for seq in itertools.product(LETTERS, repeat=ns + 1):
        if all(a != b for a, b in zip(seq, seq[1:])):
            out.append("".join(seq))
    return out


def type_sort_key(control_type: str) -> tuple:
    """Sort key matching the enumeration order (shorter types first)."""
    return (len(control_type), tuple(LETTERS.index(c) for c in control_type))


def validate(control: BangOffControl, total_duration: float | None = None,
             tol: float = SUM_TOLERANCE) -> None:
    """Raise a ControlError subclass if ``control`` is not a valid bang-off control."""
    ct = control.control_type
    if not ct:
        raise ControlError("control type must have at least one segment")
    for k, (a, b) in enumerate(zip(ct, ct[1:])):
        if a == b:
            raise AdjacentLevelError(f"segments {k} and {k + 1} of {ct!r} share level {a!r}")
    for k, t in enumerate(control.durations):
        if not np.isfinite(t):
            raise NegativeDurationError(f"duration {k} is not finite: {t!r}")
        if t < 0:
            raise NegativeDurationError(f"duration {k} is negative: {t!r}")
    if total_duration is not None:
        total = control.total_duration
        if abs(total - total_duration) > tol:
            raise DurationSumError(
                f"durations sum to {total!r}, expected {total_duration!r} (tolerance {tol})"
            )


def field_at(control: BangOffControl, t: float) -> str:
    """Level active at time ``t``; a switch instant belongs to the later segment."""
    T = control.total_duration
    if t < 0 or t > T:
        raise ValueError(f"time {t} outside [0, {T}]")
    edge = 0.0
    for level, dt in zip(control.control_type, control.durations):
        edge += dt
        if t < edge:
            return level
    for level, dt in zip(reversed(control.control_type), reversed(control.durations)):
        if dt > 0:
            return level
    return control.control_type[-1]


def canonicalize(control: BangOffControl) -> BangOffControl:
    """Drop zero-length segments and merge equal neighbours."""
    levels, durs = [], []
    for level, dt in zip(control.control_type, control.durations):
        if dt == 0:
            continue
        if levels and levels[-1] == level:
            durs[-1] += dt
        else:
            levels.append(level)
            durs.append(dt)
    if not levels:
        # all segments empty: keep a single empty segment of the first level
        return BangOffControl(control.control_type[0], (0.0,))
    return BangOffControl("".join(levels), tuple(durs))


def negate_type(control_type: str) -> str:
    return "".join(_NEGATE[c] for c in control_type)


def flip_type(control_type: str) -> str:
    return negate_type(control_type[::-1])


def flip(control: BangOffControl) -> BangOffControl:
    """The time-reversed, sign-inverted control h(t) -> -h(T - t)."""
    return BangOffControl(flip_type(control.control_type), control.durations[::-1])


def negate(control: BangOffControl) -> BangOffControl:
    """The sign-inverted control h(t) -> -h(t)."""
    return BangOffControl(negate_type(control.control_type), control.durations)


def to_dict(control: BangOffControl) -> dict:
    return {
        "type": control.control_type,
        "durations": list(control.durations),
        "total_duration": control.total_duration,
    }


def from_dict(data: dict) -> BangOffControl:
    try:
        ctype = data["type"]
        durations = data["durations"]
    except (KeyError, TypeError) as exc:
        raise ControlParseError(f"control record is missing field {exc}") from None
    if not isinstance(ctype, str):
        raise ControlParseError(f"field 'type' must be a string, got {ctype!r}")
    if not isinstance(durations, list) or not all(
        isinstance(t, (int, float)) and not isinstance(t, bool) for t in durations
    ):
        raise ControlParseError("field 'durations' must be an array of numbers")
    control = BangOffControl(ctype, tuple(durations))
    validate(control, data.get("total_duration"))
    return control


def dumps(control: BangOffControl, **extra) -> str:
    # json writes floats with repr(), which round-trips float64 exactly
    return json.dumps({**to_dict(control), **extra}, indent=2)


def loads(text: str) -> BangOffControl:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ControlParseError(
            f"malformed control at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None
    if not isinstance(data, dict):
        raise ControlParseError("line 1: control file must hold a JSON object")
    return from_dict(data)


def save(control: BangOffControl, path, **extra) -> None:
    Path(path).write_text(dumps(control, **extra) + "\n")


def load(path) -> BangOffControl:
    return loads(Path(path).read_text())
