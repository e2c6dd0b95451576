"""Time durations over seven units with exact rational arithmetic.

Grammar accepted by :func:`parse_duration` (case-insensitive)::

    duration  := component (sep component)*
    sep       := "," | "and" | ", and"
    component := number unit
    number    := digits ["." digits] | "." digits
    unit      := sec | secs | second | seconds | s
               | min | mins | minute | minutes
               | h | hr | hrs | hour | hours
               | day | days | week | weeks | month | months | year | years

All arithmetic happens on :class:`fractions.Fraction` seconds, so sums of
integer-valued durations compare exactly.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from typing import Iterable, Union

from .errors import DurationParseError, DurationRangeError

__all__ = [
    "TimeUnit",
    "UnitConvention",
    "DEFAULT_CONVENTION",
    "Duration",
    "CanonicalDuration",
    "parse_duration",
    "parse_total",
    "to_seconds",
    "add",
    "compare",
    "format_duration",
    "unit_distance",
    "longest_estimate",
]


class TimeUnit(enum.IntEnum):
    SEC = 0
    MIN = 1
    H = 2
    DAY = 3
    WEEK = 4
    MONTH = 5
    YEAR = 6

    @property
    def label(self) -> str:
        return _LABELS[self][0]

    def display(self, value: Fraction) -> str:
        singular, plural = _LABELS[self]
        return singular if value == 1 else plural


_LABELS = {
    TimeUnit.SEC: ("sec", "sec"),
    TimeUnit.MIN: ("min", "min"),
    TimeUnit.H: ("h", "h"),
    TimeUnit.DAY: ("day", "days"),
    TimeUnit.WEEK: ("week", "weeks"),
    TimeUnit.MONTH: ("month", "months"),
    TimeUnit.YEAR: ("year", "years"),
}

_ALIASES = {
    TimeUnit.SEC: ("s", "sec", "secs", "second", "seconds"),
    TimeUnit.MIN: ("min", "mins", "minute", "minutes"),
    TimeUnit.H: ("h", "hr", "hrs", "hour", "hours"),
    TimeUnit.DAY: ("day", "days"),
    TimeUnit.WEEK: ("week", "weeks"),
    TimeUnit.MONTH: ("month", "months"),
    TimeUnit.YEAR: ("year", "years"),
}
_UNIT_BY_NAME = {alias: unit for unit, names in _ALIASES.items() for alias in names}


@dataclass(frozen=True)
class UnitConvention:
    """Calendar lengths for the two units that have no fixed size."""

    month_days: int = 30
    year_days: int = 365

    def seconds_per(self, unit: TimeUnit) -> int:
        day = 86400
        return {
            TimeUnit.SEC: 1,
            TimeUnit.MIN: 60,
            TimeUnit.H: 3600,
            TimeUnit.DAY: day,
            TimeUnit.WEEK: 7 * day,
            TimeUnit.MONTH: self.month_days * day,
            TimeUnit.YEAR: self.year_days * day,
        }[unit]


DEFAULT_CONVENTION = UnitConvention()


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        # go through repr so 0.1 means one tenth, not its binary neighbour
        return Fraction(Decimal(repr(value)))
    return Fraction(value)


def _fmt_number(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    den = value.denominator
    while den % 2 == 0:
        den //= 2
    while den % 5 == 0:
        den //= 5
    if den == 1:
        text = str(Decimal(value.numerator) / Decimal(value.denominator))
    else:
        text = f"{float(value):.6f}".rstrip("0").rstrip(".")
    return text


@dataclass(frozen=True)
class Duration:
    value: Fraction
    unit: TimeUnit

    def __post_init__(self):
        value = _as_fraction(self.value)
        if value < 0:
            raise DurationRangeError(f"negative duration {value}")
        object.__setattr__(self, "value", value)
        object.__setattr__(self, "unit", TimeUnit(self.unit))

    @classmethod
    def parse(cls, text: str) -> "Duration":
        """Parse exactly one component, e.g. ``"10 min"``."""
        parts = parse_duration(text)
        if len(parts) != 1:
            raise DurationParseError("expected a single duration", text)
        return parts[0]

    def seconds(self, convention: UnitConvention = DEFAULT_CONVENTION) -> Fraction:
        return self.value * convention.seconds_per(self.unit)

    def __str__(self) -> str:
        return f"{_fmt_number(self.value)} {self.unit.display(self.value)}"


@dataclass(frozen=True, order=True)
class CanonicalDuration:
    """A duration expressed in seconds, the common measure for comparisons."""

    seconds: Fraction

    def __post_init__(self):
        seconds = _as_fraction(self.seconds)
        if seconds < 0:
            raise DurationRangeError(f"negative duration {seconds}")
        object.__setattr__(self, "seconds", seconds)

    def __add__(self, other):
        if isinstance(other, CanonicalDuration):
            return CanonicalDuration(self.seconds + other.seconds)
        return NotImplemented

    def __str__(self) -> str:
        return format_duration(self)


ZERO = CanonicalDuration(Fraction(0))

_COMPONENT_RE = re.compile(
    r"(?P<sign>[+-]?)(?P<num>\d+(?:\.\d+)?|\.\d+)\s*(?P<unit>[a-z]+)\.?",
    re.IGNORECASE,
)
_SEP_RE = re.compile(r"\s*,\s*and\s+|\s*,\s*|\s+and\s+", re.IGNORECASE)


def parse_duration(text: str) -> list[Duration]:
    """Parse ``text`` into its ordered component durations.

    >>> [str(d) for d in parse_duration("3 weeks and 1 hour")]
    ['3 weeks', '1 h']
    """
    if not isinstance(text, str):
        raise DurationParseError(f"expected text, got {type(text).__name__}")
    stripped = text.strip()
    if not stripped:
        raise DurationParseError("empty duration", text, (0, len(text)))
    offset = len(text) - len(text.lstrip())
    pieces = []
    pos = 0
    for sep in _SEP_RE.finditer(stripped):
        pieces.append((pos, stripped[pos:sep.start()]))
        pos = sep.end()
    pieces.append((pos, stripped[pos:]))

    out = []
    for start, piece in pieces:
        span = (offset + start, offset + start + len(piece))
        m = _COMPONENT_RE.fullmatch(piece)
        if m is None:
            raise DurationParseError("unparseable duration component", text, span)
        unit = _UNIT_BY_NAME.get(m["unit"].lower())
        if unit is None:
            raise DurationParseError(f"unknown time unit {m['unit']!r}", text, span)
        value = Fraction(Decimal(m["num"]))
        if m["sign"] == "-" and value != 0:
            raise DurationRangeError("negative duration", text, span)
        out.append(Duration(value, unit))
    return out


def to_seconds(d: Duration, convention: UnitConvention = DEFAULT_CONVENTION) -> CanonicalDuration:
    return CanonicalDuration(d.seconds(convention))


DurationLike = Union[Duration, CanonicalDuration, Iterable[Duration]]


def _seconds_of(item, convention) -> Fraction:
    if isinstance(item, CanonicalDuration):
        return item.seconds
    if isinstance(item, Duration):
        return item.seconds(convention)
    if isinstance(item, str):
        return sum((d.seconds(convention) for d in parse_duration(item)), Fraction(0))
    return sum((_seconds_of(x, convention) for x in item), Fraction(0))


def add(*items: DurationLike, convention: UnitConvention = DEFAULT_CONVENTION) -> CanonicalDuration:
    """Sum durations (single, compound lists, or already-canonical) in seconds."""
    return CanonicalDuration(sum((_seconds_of(x, convention) for x in items), Fraction(0)))


def parse_total(text: str, convention: UnitConvention = DEFAULT_CONVENTION) -> CanonicalDuration:
    return add(parse_duration(text), convention=convention)


def compare(a: DurationLike, b: DurationLike, convention: UnitConvention = DEFAULT_CONVENTION) -> int:
    """Three-way comparison in canonical seconds: -1, 0 or 1."""
    sa, sb = _seconds_of(a, convention), _seconds_of(b, convention)
    return (sa > sb) - (sa < sb)


def format_duration(
    d: CanonicalDuration | Duration,
    style: str = "largest-unit",
    convention: UnitConvention = DEFAULT_CONVENTION,
    max_unit: TimeUnit | None = None,
) -> str:
    """Render canonical seconds as text that :func:`parse_duration` reads back.

    ``largest-unit`` uses the largest unit that divides the value exactly
    (``3300 s -> "55 min"``), never coarser than ``max_unit`` when given; values that are not a whole number of seconds fall
    back to the mixed form. ``mixed`` decomposes greedily from years down,
    joining components with ``" and "``.
    """
    seconds = _seconds_of(d, convention)
    if style not in ("largest-unit", "mixed"):
        raise ValueError(f"unknown format style {style!r}")
    if seconds == 0:
        return "0 sec"
    units = sorted(TimeUnit, reverse=True)
    if style == "largest-unit" and seconds.denominator == 1:
        for unit in units:
            if max_unit is not None and unit > max_unit:
                continue
            size = convention.seconds_per(unit)
            if seconds % size == 0:
                return str(Duration(seconds / size, unit))
    parts = []
    rest = seconds
    for unit in units[:-1]:
        size = convention.seconds_per(unit)
        count = rest // size
        if count:
            parts.append(str(Duration(count, unit)))
            rest -= count * size
    if rest:
        parts.append(str(Duration(rest, TimeUnit.SEC)))
    return " and ".join(parts)


def unit_distance(durations: Iterable[Duration]) -> int:
    """Spread between the largest and smallest unit index among ``durations``."""
    idx = [int(d.unit) for d in durations]
    if not idx:
        raise ValueError("unit_distance needs at least one duration")
    return max(idx) - min(idx)


def longest_estimate(
    estimates: Iterable[DurationLike], convention: UnitConvention = DEFAULT_CONVENTION
):
    """Pick the longest of several estimates; the first one wins on ties."""
    best = None
    best_seconds = None
    for est in estimates:
        s = _seconds_of(est, convention)
        if best is None or s > best_seconds:
            best, best_seconds = est, s
    if best is None:
        raise ValueError("no estimates given")
    return best
