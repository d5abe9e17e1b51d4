import json
import math

import pytest
from hypothesis import given, settings

from bangoff import controls as cm
from bangoff.controls import BangOffControl, canonicalize, enumerate_types, field_at, flip

from conftest import controls


@pytest.mark.parametrize("ns", range(10))
def test_enumeration_count(ns):
    types = enumerate_types(ns)
    assert len(types) == 3 * 2 ** ns
    assert len(set(types)) == len(types)
    for t in types:
        assert len(t) == ns + 1
        assert all(a != b for a, b in zip(t, t[1:]))


def test_enumeration_order():
    assert enumerate_types(0) == ["P", "0", "N"]
    assert enumerate_types(1) == ["P0", "PN", "0P", "0N", "NP", "N0"]
    two = enumerate_types(2)
    assert "P0N" in two
    assert sorted(two, key=cm.type_sort_key) == two


def test_enumeration_rejects_negative():
    with pytest.raises(ValueError):
        enumerate_types(-1)


def test_field_at_boundaries():
    c = BangOffControl("PN", (0.1, 0.1))
    assert field_at(c, 0.05) == "P"
    assert field_at(c, 0.1) == "N"
    assert field_at(c, 0.2) == "N"
    c3 = BangOffControl("P0N", (0.2, 0.3, 0.4))
    assert field_at(c3, c3.total_duration) == "N"
    with pytest.raises(ValueError):
        field_at(c, 0.21)
    with pytest.raises(ValueError):
        field_at(c, -1e-9)


def test_field_at_with_empty_last_segment():
    c = BangOffControl("P0N", (0.15, 0.15, 0.0))
    assert field_at(c, 0.3) == "0"


@settings(max_examples=200, deadline=None)
@given(controls(max_switches=6))
def test_field_at_integrates_back(c):
    # midpoint of each nonempty segment reports that segment's level
    edge = 0.0
    p_time = 0.0
    for level, dt in zip(c.control_type, c.durations):
        if dt > 1e-9:  # below this the midpoint is not resolvable from the edge
            assert field_at(c, edge + dt / 2) == level
        if level == "P":
            p_time += dt
        edge += dt
    expected = sum(dt for lv, dt in zip(c.control_type, c.durations) if lv == "P")
    assert math.isclose(p_time, expected)


def test_canonicalize_examples():
    c = canonicalize(BangOffControl("P0N", (0.15, 0.0, 0.15)))
    assert c == BangOffControl("PN", (0.15, 0.15))
    c = canonicalize(BangOffControl("P0P", (0.1, 0.0, 0.2)))
    assert c.control_type == "P"
    assert c.durations[0] == pytest.approx(0.3, abs=1e-15)
    already = BangOffControl("P0N", (0.1, 0.2, 0.3))
    assert canonicalize(already) == already


@settings(max_examples=300, deadline=None)
@given(controls())
def test_canonicalize_is_idempotent(c):
    once = canonicalize(c)
    assert canonicalize(once) == once
    assert math.isclose(once.total_duration, c.total_duration, abs_tol=1e-12)


def test_flip_examples():
    c = BangOffControl("P0N", (0.1, 0.2, 0.3))
    assert flip(c) == BangOffControl("P0N", (0.3, 0.2, 0.1))
    z = BangOffControl("0", (1.0,))
    assert flip(z) == z
    assert flip(BangOffControl("P0", (1.0, 2.0))) == BangOffControl("0N", (2.0, 1.0))


@settings(max_examples=300, deadline=None)
@given(controls())
def test_flip_is_involution(c):
    assert flip(flip(c)) == c
    assert flip(c).n_switches == c.n_switches


def test_validate_ok_and_errors():
    cm.validate(BangOffControl("PN", (0.1, 0.1)), 0.2)
    with pytest.raises(cm.NegativeDurationError):
        cm.validate(BangOffControl("PN", (0.1, -0.01)))
    with pytest.raises(cm.AdjacentLevelError):
        cm.validate(BangOffControl("PP", (0.1, 0.1)))
    with pytest.raises(cm.DurationSumError):
        cm.validate(BangOffControl("PN", (0.1, 0.1)), 0.3)
    with pytest.raises(cm.NegativeDurationError):
        cm.validate(BangOffControl("P", (math.inf,)))
    with pytest.raises(cm.UnknownLevelError):
        BangOffControl("PX", (0.1, 0.1))
    with pytest.raises(cm.ControlError):
        BangOffControl("PN", (0.1,))


def test_validate_sum_tolerance():
    cm.validate(BangOffControl("PN", (0.1, 0.1 + 5e-10)), 0.2)


@settings(max_examples=300, deadline=None)
@given(controls())
def test_serialization_round_trip_is_bit_exact(c):
    back = cm.loads(cm.dumps(c))
    assert back.control_type == c.control_type
    assert back.durations == c.durations


def test_save_load(tmp_path):
    c = BangOffControl("P0N0", (0.40858, 0.52057, 8.1384e-3, 0.84135))
    path = tmp_path / "c.json"
    cm.save(c, path, cost=0.0)
    data = json.loads(path.read_text())
    assert data["type"] == "P0N0"
    assert data["total_duration"] == c.total_duration
    assert cm.load(path) == c


def test_parse_errors_report_line():
    with pytest.raises(cm.ControlParseError, match="line 3"):
        cm.loads('{\n "type": "PN",\n "durations": [0.1 0.1]\n}')
    with pytest.raises(cm.ControlParseError):
        cm.loads('{"durations": [0.1]}')
    with pytest.raises(cm.ControlParseError):
        cm.loads('[1, 2]')
    with pytest.raises(cm.ControlParseError):
        cm.loads('{"type": "PN", "durations": ["a", 0.1]}')
    with pytest.raises(cm.DurationSumError):
        cm.loads('{"type": "PN", "durations": [0.1, 0.1], "total_duration": 0.5}')
