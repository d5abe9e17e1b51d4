import numpy as np
from hypothesis import strategies as st

from bangoff.controls import LETTERS, BangOffControl


@st.composite
def control_types(draw, max_switches=9):
    n = draw(st.integers(0, max_switches))
    first = draw(st.sampled_from(LETTERS))
    letters = [first]
    for _ in range(n):
        letters.append(draw(st.sampled_from([c for c in LETTERS if c != letters[-1]])))
    return "".join(letters)


@st.composite
def controls(draw, max_switches=9, max_duration=1.5):
    ctype = draw(control_types(max_switches))
    durs = draw(st.lists(st.floats(0.0, max_duration, allow_nan=False),
                         min_size=len(ctype), max_size=len(ctype)))
    return BangOffControl(ctype, tuple(durs))


@st.composite
def states(draw):
    parts = draw(st.lists(st.floats(-1, 1, allow_nan=False), min_size=8, max_size=8))
    v = np.array(parts[:4]) + 1j * np.array(parts[4:])
    norm = np.linalg.norm(v)
    if norm < 1e-3:
        v = np.array([1, 0, 0, 0], dtype=complex)
        norm = 1.0
    return v / norm


ACCEPTANCE_LINES = []


def record(criterion, passed, detail):
    """Log one acceptance verdict; all verdicts are printed at the end of the run."""
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
