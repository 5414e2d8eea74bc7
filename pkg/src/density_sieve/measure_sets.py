"""
Exact arithmetic on finite unions of half-open rational intervals.

Every set lives inside a bounded :class:`Window`; values are immutable and
every operation returns a fresh, normalized :class:`IntervalUnion`.
Coordinates are :class:`fractions.Fraction`, so measures and residual
comparisons are exact.

JSON form: intervals (and the window) are ``[lo_num, lo_den, hi_num, hi_den]``
integer quadruples.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

from .errors import SpecError

RationalLike = Union[Fraction, int, str]


# ------------------------------------------------------------------
# Rationals
# ------------------------------------------------------------------


def as_rational(value: RationalLike) -> Fraction:
    """Coerce *value* to a Fraction; strings must be ``"p"`` or ``"p/q"``."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise SpecError(f"Not a rational: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return parse_rational(value)
    raise SpecError(f"Not a rational: {value!r} (floats are not accepted)")


def parse_rational(text: str) -> Fraction:
    """Parse ``"p/q"`` exactly. Decimal and exponent notation are rejected."""
    cleaned = text.strip()
    if not cleaned or any(ch in cleaned for ch in ".eE"):
        raise SpecError(f"Rationals must be written as p/q, got {text!r}")
    try:
        return Fraction(cleaned)
    except (ValueError, ZeroDivisionError) as exc:
        raise SpecError(f"Invalid rational {text!r}: {exc}") from exc


def format_rational(value: Fraction) -> str:
    """Canonical ``"p/q"`` string (``"p"`` for integers)."""
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


# ------------------------------------------------------------------
# Data structures
# ------------------------------------------------------------------


@dataclass(frozen=True)
class Interval:
    """The half-open interval ``[lo, hi)``; never empty."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "lo", as_rational(self.lo))
        object.__setattr__(self, "hi", as_rational(self.hi))
        if not self.lo < self.hi:
            raise SpecError(f"Empty interval [{self.lo}, {self.hi})")

    @property
    def length(self) -> Fraction:
        return self.hi - self.lo

    def to_quad(self) -> List[int]:
        return [self.lo.numerator, self.lo.denominator, self.hi.numerator, self.hi.denominator]


@dataclass(frozen=True)
class Window(Interval):
    """Bounded ambient piece of the space; its length is the total mass."""

    @classmethod
    def unit(cls) -> "Window":
        return cls(Fraction(0), Fraction(1))


@dataclass(frozen=True)
class IntervalUnion:
    """Sorted, pairwise disjoint, non-adjacent intervals inside ``window``.

    Build instances with :func:`normalize`; the constructor trusts its input.
    """

    intervals: Tuple[Interval, ...]
    window: Window

    @classmethod
    def empty(cls, window: Window) -> "IntervalUnion":
        return cls((), window)

    @classmethod
    def full(cls, window: Window) -> "IntervalUnion":
        return cls((Interval(window.lo, window.hi),), window)

    def is_empty(self) -> bool:
        return not self.intervals

    def __iter__(self):
        return iter(self.intervals)

    def __len__(self) -> int:
        return len(self.intervals)

    def endpoints(self) -> List[Fraction]:
        points: List[Fraction] = []
        for iv in self.intervals:
            points.extend((iv.lo, iv.hi))
        return points


# ------------------------------------------------------------------
# Operations
# ------------------------------------------------------------------


def normalize(raw: Iterable[Tuple[RationalLike, RationalLike]], window: Window) -> IntervalUnion:
    """Canonical form of the point set ``(∪ raw) ∩ window``.

    *raw* may be unsorted, overlapping, or contain empty / reversed pairs
    (those are dropped). ``Interval`` objects are accepted as pairs too.
    """
    clipped: List[Tuple[Fraction, Fraction]] = []
    for item in raw:
        if isinstance(item, Interval):
            lo, hi = item.lo, item.hi
        else:
            lo, hi = as_rational(item[0]), as_rational(item[1])
        lo = max(lo, window.lo)
        hi = min(hi, window.hi)
        if lo < hi:
            clipped.append((lo, hi))

    clipped.sort()
    merged: List[List[Fraction]] = []
    for lo, hi in clipped:
        if merged and lo <= merged[-1][1]:
            if hi > merged[-1][1]:
                merged[-1][1] = hi
        else:
            merged.append([lo, hi])
    return IntervalUnion(tuple(Interval(lo, hi) for lo, hi in merged), window)


def _require_window(s: IntervalUnion, window: Window) -> None:
    if s.window != window:
        raise SpecError(
            f"Window mismatch: [{s.window.lo}, {s.window.hi}) vs [{window.lo}, {window.hi})"
        )


def _check_windows(u: IntervalUnion, v: IntervalUnion) -> None:
    _require_window(v, u.window)


def union(u: IntervalUnion, v: IntervalUnion) -> IntervalUnion:
    """Set union of two unions over the same window."""
    _check_windows(u, v)
    return normalize(list(u.intervals) + list(v.intervals), u.window)


def union_all(sets: Sequence[IntervalUnion], window: Window) -> IntervalUnion:
    """Union of any number of sets over *window* in a single normalization."""
    raw: List[Interval] = []
    for s in sets:
        _require_window(s, window)
        raw.extend(s.intervals)
    return normalize(raw, window)


def intersect(u: IntervalUnion, v: IntervalUnion) -> IntervalUnion:
    """Set intersection, by a two-pointer walk over both sorted lists."""
    _check_windows(u, v)
    out: List[Tuple[Fraction, Fraction]] = []
    a, b = u.intervals, v.intervals
    i = j = 0
    while i < len(a) and j < len(b):
        lo = max(a[i].lo, b[j].lo)
        hi = min(a[i].hi, b[j].hi)
        if lo < hi:
            out.append((lo, hi))
        if a[i].hi < b[j].hi:
            i += 1
        else:
            j += 1
    return normalize(out, u.window)


def complement_within(u: IntervalUnion) -> IntervalUnion:
    """``window \\ u``."""
    gaps: List[Tuple[Fraction, Fraction]] = []
    cursor = u.window.lo
    for iv in u.intervals:
        if cursor < iv.lo:
            gaps.append((cursor, iv.lo))
        cursor = iv.hi
    if cursor < u.window.hi:
        gaps.append((cursor, u.window.hi))
    return IntervalUnion(tuple(Interval(lo, hi) for lo, hi in gaps), u.window)


def difference(u: IntervalUnion, v: IntervalUnion) -> IntervalUnion:
    """``u \\ v``."""
    return intersect(u, complement_within(v))


def measure(u: IntervalUnion) -> Fraction:
    """Lebesgue measure: the sum of interval lengths."""
    return sum((iv.length for iv in u.intervals), Fraction(0))


def kfold_region(
    sets: Sequence[IntervalUnion], m: int, window: Optional[Window] = None
) -> IntervalUnion:
    """Points covered by at least *m* of *sets*.

    Sweep over all endpoints carrying a multiplicity counter. ``m == 0`` gives
    the whole window. *window* is only needed when *sets* is empty.
    """
    if m < 0:
        raise SpecError(f"Multiplicity must be non-negative, got {m}")
    if window is None:
        if not sets:
            raise SpecError("kfold_region needs a window when no sets are given")
        window = sets[0].window
    for s in sets:
        _require_window(s, window)
    if m == 0:
        return IntervalUnion.full(window)

    deltas: Dict[Fraction, int] = {}
    for s in sets:
        for iv in s.intervals:
            deltas[iv.lo] = deltas.get(iv.lo, 0) + 1
            deltas[iv.hi] = deltas.get(iv.hi, 0) - 1

    out: List[Tuple[Fraction, Fraction]] = []
    depth = 0
    start: Optional[Fraction] = None
    for x in sorted(deltas):
        depth += deltas[x]
        if depth >= m and start is None:
            start = x
        elif depth < m and start is not None:
            out.append((start, x))
            start = None
    return normalize(out, window)


def contains_point(u: IntervalUnion, x: RationalLike) -> bool:
    """True iff *x* lies in some ``[lo, hi)``."""
    x = as_rational(x)
    los = [iv.lo for iv in u.intervals]
    pos = bisect.bisect_right(los, x) - 1
    return pos >= 0 and x < u.intervals[pos].hi


# ------------------------------------------------------------------
# JSON
# ------------------------------------------------------------------


def window_from_quad(quad: Sequence[int]) -> Window:
    lo, hi = _quad_to_pair(quad)
    return Window(lo, hi)


def _quad_to_pair(quad: Sequence[Any]) -> Tuple[Fraction, Fraction]:
    if len(quad) != 4 or not all(isinstance(v, int) and not isinstance(v, bool) for v in quad):
        raise SpecError(f"Expected [lo_num, lo_den, hi_num, hi_den] integers, got {quad!r}")
    if quad[1] <= 0 or quad[3] <= 0:
        raise SpecError(f"Denominators must be positive in {quad!r}")
    return Fraction(quad[0], quad[1]), Fraction(quad[2], quad[3])


def union_to_json(u: IntervalUnion) -> Dict[str, Any]:
    return {"window": u.window.to_quad(), "intervals": [iv.to_quad() for iv in u.intervals]}


def union_from_json(data: Dict[str, Any], *, strict: bool = True) -> IntervalUnion:
    """Rebuild a union. With *strict*, intervals escaping the window are an error."""
    try:
        window = window_from_quad(data["window"])
        pairs = [_quad_to_pair(q) for q in data["intervals"]]
    except (KeyError, TypeError) as exc:
        raise SpecError(f"Malformed interval union document: {exc}") from exc
    if strict:
        for lo, hi in pairs:
            if lo < hi and (lo < window.lo or hi > window.hi):
                raise SpecError(f"Interval [{lo}, {hi}) escapes window [{window.lo}, {window.hi})")
    return normalize(pairs, window)
