"""Time windows, duration limits, overlap, and sequencing.

Interval semantics are start-inclusive, end-exclusive everywhere, so "6AM-6PM"
admits 06:00 and rejects 18:00. Instants are timezone-naive local civil time;
documents that span jurisdictions must use one frame.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, time, timedelta
from typing import Optional

from .errors import NegativeIntervalError

WEEKDAYS = ("mon", "tue", "wed", "thu", "fri", "sat", "sun")

ABSOLUTE = "absolute"
DAILY = "daily_recurring"


@dataclass(frozen=True)
class TimeWindow:
    kind: str
    start: object  # datetime for absolute, time for daily_recurring
    end: object
    recurrence: Optional[frozenset] = None  # weekday indexes, 0 = Monday

    def __post_init__(self):
        if self.kind == ABSOLUTE:
            if not (isinstance(self.start, datetime) and isinstance(self.end, datetime)):
                raise ValueError("absolute window needs datetime endpoints")
        elif self.kind == DAILY:
            if not (isinstance(self.start, time) and isinstance(self.end, time)):
                raise ValueError("daily window needs time-of-day endpoints")
        else:
            raise ValueError(f"unknown window kind: {self.kind!r}")
        if self.start >= self.end:
            raise ValueError(f"window start {self.start} not before end {self.end}")
        if self.recurrence is not None:
            object.__setattr__(self, "recurrence", frozenset(self.recurrence))
            if not all(0 <= d <= 6 for d in self.recurrence):
                raise ValueError("recurrence days must be 0..6")
            if self.kind == ABSOLUTE:
                raise ValueError("absolute windows do not recur")


@dataclass(frozen=True)
class DurationLimit:
    limit: timedelta

    def __post_init__(self):
        if self.limit <= timedelta(0):
            raise ValueError("duration limit must be positive")

    @classmethod
    def minutes(cls, n) -> "DurationLimit":
        return cls(timedelta(minutes=n))


def in_window(t: datetime, w: TimeWindow) -> bool:
    if w.kind == ABSOLUTE:
        return w.start <= t < w.end
    if w.recurrence is not None and t.weekday() not in w.recurrence:
        return False
    return w.start <= t.time() < w.end


def duration_exceeds(start: datetime, end: datetime, lim: DurationLimit) -> bool:
    """Strictly longer than the limit; staying exactly at it is fine."""
    if end < start:
        raise NegativeIntervalError(f"interval ends before it starts: {start} .. {end}")
    return (end - start) > lim.limit


def _days_of(w: TimeWindow) -> frozenset:
    return w.recurrence if w.recurrence is not None else frozenset(range(7))


def overlaps(w1: TimeWindow, w2: TimeWindow) -> bool:
    """Nonempty intersection under closed-open semantics."""
    if w1.kind == ABSOLUTE and w2.kind == ABSOLUTE:
        return w1.start < w2.end and w2.start < w1.end
    if w1.kind == DAILY and w2.kind == DAILY:
        if not (_days_of(w1) & _days_of(w2)):
            return False
        return w1.start < w2.end and w2.start < w1.end
    absolute, daily = (w1, w2) if w1.kind == ABSOLUTE else (w2, w1)
    # Check each calendar day the absolute window touches; seven days of
    # lookahead is enough to hit every recurrence slot.
    day = absolute.start.date()
    last = min(absolute.end.date(), day + timedelta(days=7))
    while day <= last:
        if day.weekday() in _days_of(daily):
            occ_start = datetime.combine(day, daily.start)
            occ_end = datetime.combine(day, daily.end)
            if occ_start < absolute.end and absolute.start < occ_end:
                return True
        day += timedelta(days=1)
    return False


def sequence_ok(t1: datetime, t2: datetime, max_gap: timedelta) -> bool:
    """t2 follows t1 within the allowed gap; order is required."""
    return t2 >= t1 and (t2 - t1) <= max_gap
