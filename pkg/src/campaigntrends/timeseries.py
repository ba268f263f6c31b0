"""Daily-grid time series and calendar-range utilities.

Every metric in this package lives on a regular daily grid: one float per
consecutive calendar day, no gaps. Ingestion converts raw observations
(donation records, poll rows) onto that grid through :func:`resample_daily`,
after which all downstream code can index by plain day offsets.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date, timedelta
from enum import Enum
from typing import Iterable, Iterator

import numpy as np

from .exceptions import (
    DuplicateDateError,
    EmptyInputError,
    InvalidValueError,
    MissingDayError,
    RangeTooNarrowError,
)

__all__ = [
    "DateRange",
    "FillPolicy",
    "TimeSeries",
    "resample_daily",
    "restrict",
]


@dataclass(frozen=True, order=True)
class DateRange:
    """An inclusive range of calendar days."""

    start: date
    end: date

    def __post_init__(self) -> None:
        if self.start > self.end:
            raise InvalidValueError(f"range start {self.start} is after end {self.end}")

    def __contains__(self, day: date) -> bool:
        return self.start <= day <= self.end

    def __len__(self) -> int:
        return (self.end - self.start).days + 1

    def days(self) -> Iterator[date]:
        for i in range(len(self)):
            yield self.start + timedelta(days=i)

    def intersect(self, other: "DateRange") -> "DateRange | None":
        start = max(self.start, other.start)
        end = min(self.end, other.end)
        if start > end:
            return None
        return DateRange(start, end)


class FillPolicy(Enum):
    """How to fill days with no observation when building a daily grid.

    ZERO inserts 0.0 (no recorded activity means none happened, the donation
    reading). INTERPOLATE draws a straight line between the nearest observed
    neighbours and extends the first/last observation flat at the edges (the
    poll reading). STRICT refuses to fill and raises instead.
    """

    ZERO = "zero"
    INTERPOLATE = "interpolate"
    STRICT = "strict"


@dataclass(frozen=True)
class TimeSeries:
    """One metric for one candidate on a gap-free daily grid.

    Attributes:
        start_date: Calendar date of ``values[0]``; ``values[i]`` belongs to
            ``start_date + i`` days.
        values: Float array, one entry per consecutive day, all finite,
            length >= 3. The array is made read-only on construction.
        label: Metric name ("poll", "donors", ...).
        candidate: Candidate identifier the metric belongs to.
    """

    start_date: date
    values: np.ndarray
    label: str = ""
    candidate: str = ""

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 1:
            raise InvalidValueError("time series values must be one-dimensional")
        if arr.shape[0] < 3:
            raise RangeTooNarrowError(
                f"a time series needs at least 3 daily values, got {arr.shape[0]}"
            )
        if not np.all(np.isfinite(arr)):
            raise InvalidValueError(f"non-finite value in series {self.label!r}")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return int(self.values.shape[0])

    @property
    def end_date(self) -> date:
        return self.start_date + timedelta(days=len(self) - 1)

    @property
    def range(self) -> DateRange:
        return DateRange(self.start_date, self.end_date)

    def date_at(self, index: int) -> date:
        if not 0 <= index < len(self):
            raise IndexError(f"day index {index} outside series of length {len(self)}")
        return self.start_date + timedelta(days=index)

    def index_of(self, day: date) -> int:
        offset = (day - self.start_date).days
        if not 0 <= offset < len(self):
            raise IndexError(f"{day} outside series span {self.start_date}..{self.end_date}")
        return offset

    def dates(self) -> Iterator[date]:
        return self.range.days()


def resample_daily(
    points: Iterable[tuple[date, float]],
    range_: DateRange,
    fill: FillPolicy,
    label: str = "",
    candidate: str = "",
) -> TimeSeries:
    """Place scattered (date, value) observations onto the daily grid of ``range_``.

    At most one observation per date is allowed, every observation must fall
    inside the range, and days without an observation are filled according to
    ``fill``. The output always covers the range exactly, one value per day.

    Raises:
        EmptyInputError: no points were given.
        DuplicateDateError: two points share a date.
        InvalidValueError: a point lies outside the range.
        MissingDayError: a day is missing under ``FillPolicy.STRICT``.
        RangeTooNarrowError: the range spans fewer than 3 days.
    """
    pts = sorted(points)
    if not pts:
        raise EmptyInputError("no observations to resample")
    n = len(range_)
    observed = np.full(n, np.nan)
    for day, value in pts:
        if day not in range_:
            raise InvalidValueError(
                f"observation on {day} outside range {range_.start}..{range_.end}"
            )
        idx = (day - range_.start).days
        if not np.isnan(observed[idx]):
            raise DuplicateDateError(f"duplicate observation for {day}")
        observed[idx] = value

    missing = np.isnan(observed)
    if fill is FillPolicy.STRICT:
        if missing.any():
            first = range_.start + timedelta(days=int(np.flatnonzero(missing)[0]))
            raise MissingDayError(f"no observation for {first} under STRICT fill")
        values = observed
    elif fill is FillPolicy.ZERO:
        values = np.where(missing, 0.0, observed)
    else:
        obs_idx = np.flatnonzero(~missing)
        values = np.interp(np.arange(n), obs_idx, observed[obs_idx])

    return TimeSeries(range_.start, values, label=label, candidate=candidate)


def restrict(ts: TimeSeries, range_: DateRange) -> TimeSeries:
    """Cut a series down to the intersection of its span with ``range_``.

    Raises RangeTooNarrowError when the intersection is empty or shorter
    than 3 days.
    """
    overlap = ts.range.intersect(range_)
    if overlap is None or len(overlap) < 3:
        raise RangeTooNarrowError(
            f"restricting {ts.start_date}..{ts.end_date} to "
            f"{range_.start}..{range_.end} leaves fewer than 3 days"
        )
    lo = (overlap.start - ts.start_date).days
    hi = lo + len(overlap)
    return TimeSeries(
        overlap.start, ts.values[lo:hi], label=ts.label, candidate=ts.candidate
    )
