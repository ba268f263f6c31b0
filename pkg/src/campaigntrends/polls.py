"""Ingestion of pre-aggregated daily national polling averages.

Input is a curated CSV (date,candidate,pct with ISO dates), so unlike the
bulk donation parser this loader raises on the first bad row instead of
skipping. Missing days are linearly interpolated because an aggregated
national average is expected to be near-daily; a run of more than
MAX_POLL_GAP_DAYS consecutive missing days is treated as broken input.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import date
from typing import IO, Iterable

import numpy as np

from .exceptions import (
    DuplicateDateError,
    InvalidValueError,
    MissingDayError,
    UnknownCandidateError,
)
from .timeseries import DateRange, FillPolicy, TimeSeries, resample_daily

__all__ = ["MAX_POLL_GAP_DAYS", "PollPoint", "load_poll_series"]

MAX_POLL_GAP_DAYS = 7

POLL_HEADER = ("date", "candidate", "pct")


@dataclass(frozen=True)
class PollPoint:
    """One candidate's aggregated national average on one day."""

    date: date
    candidate: str
    pct: float

    def __post_init__(self) -> None:
        if not self.candidate:
            raise InvalidValueError("poll point has an empty candidate")
        if not 0.0 <= self.pct <= 100.0:
            raise InvalidValueError(f"pct {self.pct} outside [0, 100]")


def _parse_rows(stream: Iterable[str] | IO[str]) -> Iterable[PollPoint]:
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise InvalidValueError("poll CSV is empty") from None
    if tuple(h.strip().lower() for h in header) != POLL_HEADER:
        raise InvalidValueError(
            f"poll CSV must have header 'date,candidate,pct', got {','.join(header)!r}"
        )
    for lineno, row in enumerate(reader, start=2):
        if not row or not any(cell.strip() for cell in row):
            continue
        if len(row) != 3:
            raise InvalidValueError(f"line {lineno}: expected 3 fields, got {len(row)}")
        try:
            when = date.fromisoformat(row[0].strip())
        except ValueError:
            raise InvalidValueError(f"line {lineno}: bad date {row[0]!r}") from None
        try:
            pct = float(row[2])
        except ValueError:
            raise InvalidValueError(f"line {lineno}: bad pct {row[2]!r}") from None
        if not 0.0 <= pct <= 100.0:
            raise InvalidValueError(f"line {lineno}: pct {pct} outside [0, 100]")
        yield PollPoint(when, row[1].strip(), pct)


def load_poll_series(
    stream: Iterable[str] | IO[str], candidate: str, range_: DateRange
) -> TimeSeries:
    """Load one candidate's daily poll average over a range, in percent.

    Observed values are kept exactly; missing days are linearly interpolated
    (flat at the edges). Raises UnknownCandidateError when the candidate has
    no rows at all, and MissingDayError when any run of missing days inside
    the range exceeds MAX_POLL_GAP_DAYS.
    """
    seen_candidate = False
    points: list[tuple[date, float]] = []
    for point in _parse_rows(stream):
        if point.candidate != candidate:
            continue
        seen_candidate = True
        if point.date in range_:
            points.append((point.date, point.pct))
    if not seen_candidate:
        raise UnknownCandidateError(f"no poll rows for candidate {candidate!r}")
    if not points:
        raise MissingDayError(
            f"candidate {candidate!r} has no poll rows inside "
            f"{range_.start}..{range_.end}"
        )

    observed = np.zeros(len(range_), dtype=bool)
    for day, _ in points:
        idx = (day - range_.start).days
        if observed[idx]:
            raise DuplicateDateError(f"duplicate poll row for {candidate!r} on {day}")
        observed[idx] = True
    gap = _longest_missing_run(observed)
    if gap > MAX_POLL_GAP_DAYS:
        raise MissingDayError(
            f"{gap} consecutive days without a poll observation for "
            f"{candidate!r} (limit {MAX_POLL_GAP_DAYS})"
        )

    return resample_daily(
        points, range_, FillPolicy.INTERPOLATE, label="poll", candidate=candidate
    )


def _longest_missing_run(observed: np.ndarray) -> int:
    longest = run = 0
    for flag in observed:
        run = 0 if flag else run + 1
        longest = max(longest, run)
    return longest
