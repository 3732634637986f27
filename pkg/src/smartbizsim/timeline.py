"""Simulated-time helpers.

The world clock counts whole seconds since the scenario epoch (midnight,
local time, single time zone). Calendars count whole minutes since the
same epoch.
"""

from __future__ import annotations

import calendar
import datetime as dt

from .errors import ParseError

SECONDS_PER_DAY = 86_400
MINUTES_PER_DAY = 1_440


def parse_iso_date(text: str) -> dt.date:
    try:
        return dt.date.fromisoformat(text)
    except ValueError as exc:
        raise ParseError(f"bad date {text!r}: {exc}") from exc


def parse_hhmm(text: str) -> dt.time:
    try:
        hh, mm = text.split(":")
        return dt.time(int(hh), int(mm))
    except (ValueError, AttributeError) as exc:
        raise ParseError(f"bad time of day {text!r} (expected HH:MM)") from exc


def seconds_at(epoch: dt.date, day: dt.date, time_of_day: dt.time) -> int:
    """Seconds since epoch midnight for a local date + time of day."""
    days = (day - epoch).days
    return (
        days * SECONDS_PER_DAY
        + time_of_day.hour * 3600
        + time_of_day.minute * 60
        + time_of_day.second
    )


def month_end(year: int, month: int) -> dt.date:
    return dt.date(year, month, calendar.monthrange(year, month)[1])


def end_of_month_instants(
    start: dt.date,
    end: dt.date,
    fire_time: dt.time,
    epoch: dt.date,
) -> list[int]:
    """One instant per calendar month-end date inside [start, end].

    Instants are seconds since the epoch at the month-end's fire time;
    month lengths and leap years are respected.
    """
    if start > end:
        raise ParseError(f"date range is reversed: {start} > {end}")
    instants = []
    year, month = start.year, start.month
    while (year, month) <= (end.year, end.month):
        eom = month_end(year, month)
        if start <= eom <= end:
            instants.append(seconds_at(epoch, eom, fire_time))
        year, month = (year + 1, 1) if month == 12 else (year, month + 1)
    return instants


def next_month_end_instant(
    after_seconds: int, fire_time: dt.time, epoch: dt.date
) -> int:
    """First month-end fire instant strictly after the given clock value."""
    day = epoch + dt.timedelta(days=after_seconds // SECONDS_PER_DAY)
    year, month = day.year, day.month
    while True:
        instant = seconds_at(epoch, month_end(year, month), fire_time)
        if instant > after_seconds:
            return instant
        year, month = (year + 1, 1) if month == 12 else (year, month + 1)
