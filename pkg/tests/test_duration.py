from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from asyncplan.duration import (
    ZERO,
    CanonicalDuration,
    Duration,
    TimeUnit,
    UnitConvention,
    add,
    compare,
    format_duration,
    longest_estimate,
    parse_duration,
    parse_total,
    to_seconds,
    unit_distance,
)
from asyncplan.errors import DurationParseError, DurationRangeError

from .conftest import durations

D = Duration


@pytest.mark.parametrize(
    "text, expected",
    [
        ("180 days", [D(180, TimeUnit.DAY)]),
        ("1 sec", [D(1, TimeUnit.SEC)]),
        ("3 weeks and 1 hour", [D(3, TimeUnit.WEEK), D(1, TimeUnit.H)]),
        ("1.5 hours", [D(Fraction(3, 2), TimeUnit.H)]),
        ("2 hrs, 5 mins", [D(2, TimeUnit.H), D(5, TimeUnit.MIN)]),
        ("1 year, 2 months, and 3 seconds", [D(1, TimeUnit.YEAR), D(2, TimeUnit.MONTH), D(3, TimeUnit.SEC)]),
        ("10min", [D(10, TimeUnit.MIN)]),
        ("  45 Minutes ", [D(45, TimeUnit.MIN)]),
        ("1 wk", None),
    ],
)
def test_parse_examples(text, expected):
    if expected is None:
        with pytest.raises(DurationParseError):
            parse_duration(text)
    else:
        assert parse_duration(text) == expected


def test_parse_error_reports_span():
    with pytest.raises(DurationParseError) as info:
        parse_duration("5 min and soon")
    assert info.value.span == (10, 14)
    assert "5 min and soon"[slice(*info.value.span)] == "soon"


@pytest.mark.parametrize("text", ["", "min", "five minutes", "5 min or 6 min", "5 min then 6 h"])
def test_parse_rejects(text):
    with pytest.raises(DurationParseError):
        parse_duration(text)


def test_negative_is_range_error():
    with pytest.raises(DurationRangeError):
        parse_duration("-3 min")
    with pytest.raises(DurationRangeError):
        Duration(-1, TimeUnit.SEC)


def test_unit_table():
    secs = [to_seconds(D(1, u)).seconds for u in TimeUnit]
    assert secs == [1, 60, 3600, 86400, 604800, 2_592_000, 31_536_000]


def test_convention_is_configurable():
    conv = UnitConvention(month_days=31, year_days=366)
    assert D(1, TimeUnit.MONTH).seconds(conv) == 31 * 86400
    assert parse_total("1 year", conv).seconds == 366 * 86400


def test_three_weeks_one_hour_is_505_hours():
    total = add(parse_duration("3 weeks and 1 hour"))
    assert total.seconds == 1_818_000
    assert total.seconds / 3600 == 505
    assert format_duration(total) == "505 h"


def test_calzones_sum_and_compare():
    total = add(*(parse_duration(f"{m} min") for m in (10, 15, 5, 25)))
    assert format_duration(total) == "55 min"
    assert compare("35 min", "55 min") == -1
    assert compare("1 h", "60 min") == 0
    assert compare(total, "35 min") == 1


@pytest.mark.parametrize(
    "seconds, style, text",
    [
        (3300, "largest-unit", "55 min"),
        (0, "largest-unit", "0 sec"),
        (1_818_000, "largest-unit", "505 h"),
        (1_818_000, "mixed", "3 weeks and 1 h"),
        (90, "largest-unit", "90 sec"),
        (90, "mixed", "1 min and 30 sec"),
        (Fraction(3, 2), "largest-unit", "1.5 sec"),
        (86400 * 360, "largest-unit", "12 months"),
    ],
)
def test_format(seconds, style, text):
    assert format_duration(CanonicalDuration(seconds), style) == text


def test_format_max_unit():
    assert format_duration(CanonicalDuration(86400 * 360), max_unit=TimeUnit.DAY) == "360 days"
    assert format_duration(CanonicalDuration(7200), max_unit=TimeUnit.MIN) == "120 min"


def test_format_rejects_unknown_style():
    with pytest.raises(ValueError):
        format_duration(ZERO, "fancy")


@pytest.mark.parametrize(
    "items, expected",
    [
        (["5 sec", "10 min"], 1),
        (["15 h", "50 h"], 0),
        (["1 sec", "1 year"], 6),
    ],
)
def test_unit_distance(items, expected):
    assert unit_distance([Duration.parse(x) for x in items]) == expected


def test_unit_distance_empty():
    with pytest.raises(ValueError):
        unit_distance([])


def test_longest_estimate_first_wins_ties():
    a, b = Duration.parse("60 min"), Duration.parse("1 h")
    assert longest_estimate([a, b]) is a
    assert longest_estimate([a, Duration.parse("2 h"), b]) == Duration.parse("2 h")


@given(st.integers(0, 10**9), st.sampled_from(["largest-unit", "mixed"]))
def test_format_parse_roundtrip(seconds, style):
    d = CanonicalDuration(seconds)
    assert parse_total(format_duration(d, style)) == d


@given(durations())
def test_single_component_roundtrip(d):
    assert parse_duration(str(d)) == [d]


@given(st.lists(durations(), min_size=1, max_size=6), st.randoms())
def test_add_commutes_and_associates(items, rnd):
    shuffled = list(items)
    rnd.shuffle(shuffled)
    assert add(*items) == add(*shuffled)
    mid = len(items) // 2
    assert add(add(*items[:mid]), add(*items[mid:])) == add(*items)
    assert add(*items, ZERO) == add(*items)


@given(durations(), durations())
def test_compare_consistent_with_seconds(a, b):
    c = compare(a, b)
    assert c == (a.seconds() > b.seconds()) - (a.seconds() < b.seconds())
    assert compare(b, a) == -c


@given(st.lists(durations(), min_size=1, max_size=8), st.randoms())
def test_unit_distance_permutation_invariant(items, rnd):
    shuffled = list(items)
    rnd.shuffle(shuffled)
    assert unit_distance(items) == unit_distance(shuffled)
