"""On-disk formats: the ingest store, fit records, and the analysis report.

Everything is a single self-describing JSON document with a schema_version
field; daily data reduces to at most a few thousand points per series, so
no database is needed. Fit output additionally includes a long-form CSV
(date, candidate, metric, observed, fitted) ready for any plotting tool.
"""

from __future__ import annotations

import csv
import json
from datetime import date
from typing import IO, Any

from .exceptions import InvalidValueError
from .timeseries import TimeSeries

__all__ = [
    "SCHEMA_VERSION",
    "read_store",
    "series_from_json",
    "series_to_json",
    "validate_report",
    "write_store",
]

SCHEMA_VERSION = 1


def series_to_json(ts: TimeSeries) -> dict[str, Any]:
    return {
        "start_date": ts.start_date.isoformat(),
        "label": ts.label,
        "candidate": ts.candidate,
        "values": [float(v) for v in ts.values],
    }


def series_from_json(obj: dict[str, Any]) -> TimeSeries:
    return TimeSeries(
        start_date=date.fromisoformat(obj["start_date"]),
        values=obj["values"],
        label=obj["label"],
        candidate=obj["candidate"],
    )


def write_store(handle: IO[str], store: dict[str, Any]) -> None:
    json.dump(store, handle, indent=2, sort_keys=True)
    handle.write("\n")


def read_store(handle: IO[str]) -> dict[str, Any]:
    store = json.load(handle)
    version = store.get("schema_version")
    if version != SCHEMA_VERSION:
        raise InvalidValueError(
            f"store schema_version {version!r} is not supported (expected {SCHEMA_VERSION})"
        )
    return store


def write_fits_long_csv(handle: IO[str], rows: list[dict[str, Any]]) -> None:
    """Long-form observed/fitted table: date, candidate, metric, observed, fitted."""
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(["date", "candidate", "metric", "observed", "fitted"])
    for row in rows:
        writer.writerow(
            [row["date"], row["candidate"], row["metric"], row["observed"], row["fitted"]]
        )


def validate_report(report: dict[str, Any]) -> list[str]:
    """Structural validation of a report document; returns problem strings.

    The shipped JSON Schema (schemas/report.schema.json) is the normative
    description; this helper re-checks the essentials without requiring a
    schema library at run time.
    """
    problems: list[str] = []

    def expect(cond: bool, message: str) -> None:
        if not cond:
            problems.append(message)

    expect(report.get("schema_version") == SCHEMA_VERSION, "bad schema_version")
    expect(isinstance(report.get("series"), list), "series must be a list")
    for i, entry in enumerate(report.get("series", []) or []):
        where = f"series[{i}]"
        expect(isinstance(entry.get("candidate"), str), f"{where}.candidate must be a string")
        expect(isinstance(entry.get("metric"), str), f"{where}.metric must be a string")
        for j, cp in enumerate(entry.get("changepoints", []) or []):
            cp_where = f"{where}.changepoints[{j}]"
            expect(_is_iso_date(cp.get("date")), f"{cp_where}.date must be an ISO date")
            expect(cp.get("direction") in ("UP", "DOWN"), f"{cp_where}.direction must be UP or DOWN")
            for slope_key in ("slope_before", "slope_after"):
                expect(isinstance(cp.get(slope_key), (int, float)), f"{cp_where}.{slope_key} must be a number")
        for j, region in enumerate(entry.get("falling_regions", []) or []):
            r_where = f"{where}.falling_regions[{j}]"
            expect(_is_iso_date(region.get("start")), f"{r_where}.start must be an ISO date")
            expect(_is_iso_date(region.get("end")), f"{r_where}.end must be an ISO date")
    expect(isinstance(report.get("events"), list), "events must be a list")
    for i, event in enumerate(report.get("events", []) or []):
        where = f"events[{i}]"
        expect(_is_iso_date(event.get("date")), f"{where}.date must be an ISO date")
        expect(isinstance(event.get("label"), str), f"{where}.label must be a string")
        expect(isinstance(event.get("matches"), list), f"{where}.matches must be a list")
    expect(isinstance(report.get("lead_lag"), list), "lead_lag must be a list")
    for i, entry in enumerate(report.get("lead_lag", []) or []):
        where = f"lead_lag[{i}]"
        expect(isinstance(entry.get("candidate"), str), f"{where}.candidate must be a string")
        expect(isinstance(entry.get("series_a"), str), f"{where}.series_a must be a string")
        expect(isinstance(entry.get("series_b"), str), f"{where}.series_b must be a string")
        expect(isinstance(entry.get("pairs"), list), f"{where}.pairs must be a list")
        median = entry.get("median_offset")
        expect(
            median is None or isinstance(median, (int, float)),
            f"{where}.median_offset must be a number or null",
        )
    return problems


def _is_iso_date(value: Any) -> bool:
    if not isinstance(value, str):
        return False
    try:
        date.fromisoformat(value)
    except ValueError:
        return False
    return True
