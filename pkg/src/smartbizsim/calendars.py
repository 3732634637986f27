"""Attendee calendars and the earliest-common-free-slot search.

Times are whole minutes since the scenario epoch. Busy intervals are
half-open [start, end). A slot is only valid when it sits entirely
inside one working-hours window on a working day.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import InvalidScenario, NoSlotAvailable
from .timeline import MINUTES_PER_DAY

Interval = tuple[int, int]


def normalize_intervals(intervals: Iterable[Interval]) -> list[Interval]:
    """Sort and merge overlapping/adjacent half-open intervals."""
    cleaned = sorted((int(s), int(e)) for s, e in intervals if e > s)
    merged: list[Interval] = []
    for start, end in cleaned:
        if merged and start <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], end))
        else:
            merged.append((start, end))
    return merged


@dataclass(frozen=True)
class WorkingHours:
    """Daily working window plus the weekday the epoch falls on."""

    start_minute: int = 8 * 60
    end_minute: int = 18 * 60
    workdays: frozenset[int] = frozenset({0, 1, 2, 3, 4})  # Mon..Fri
    epoch_weekday: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.start_minute < self.end_minute <= MINUTES_PER_DAY:
            raise InvalidScenario(
                f"working window {self.start_minute}..{self.end_minute} is invalid"
            )

    def is_workday(self, day_index: int) -> bool:
        return (self.epoch_weekday + day_index) % 7 in self.workdays

    @property
    def window_minutes(self) -> int:
        return self.end_minute - self.start_minute


@dataclass
class Calendar:
    owner: str
    busy: list[Interval] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.busy = normalize_intervals(self.busy)

    def add_busy(self, start: int, end: int) -> None:
        self.busy = normalize_intervals(self.busy + [(start, end)])

    def overlaps(self, start: int, end: int) -> bool:
        return any(bs < end and be > start for bs, be in self.busy)


@dataclass(frozen=True)
class Slot:
    start: int
    duration: int

    @property
    def end(self) -> int:
        return self.start + self.duration


def find_common_slot(
    calendars: Sequence[Calendar],
    duration: int,
    search_from: int,
    horizon: int,
    hours: WorkingHours | None = None,
) -> Slot:
    """Earliest slot of `duration` minutes free in every calendar.

    The whole slot must fit inside a single working window and end no
    later than `horizon`. Raises NoSlotAvailable when nothing fits.
    """
    if not calendars:
        raise InvalidScenario("need at least one calendar to search")
    if duration < 1:
        raise InvalidScenario(f"duration must be >= 1 minute, got {duration}")
    if search_from >= horizon:
        raise InvalidScenario(
            f"search_from {search_from} must precede horizon {horizon}"
        )
    hours = hours or WorkingHours()
    busy = normalize_intervals(
        (s, e) for cal in calendars for s, e in cal.busy
    )

    first_day = max(search_from // MINUTES_PER_DAY, 0)
    last_day = (horizon - 1) // MINUTES_PER_DAY
    for day in range(first_day, last_day + 1):
        if not hours.is_workday(day):
            continue
        window_start = day * MINUTES_PER_DAY + hours.start_minute
        window_end = day * MINUTES_PER_DAY + hours.end_minute
        lo = max(window_start, search_from)
        hi = min(window_end, horizon)
        if lo + duration > hi:
            continue
        # Walk the merged busy list, pushing the candidate past each
        # interval that blocks it; intervals are disjoint and sorted, so
        # the first resting point is the earliest start in this window.
        candidate = lo
        for bs, be in busy:
            if be <= candidate:
                continue
            if candidate + duration <= bs:
                break
            candidate = max(candidate, be)
        if candidate + duration <= hi:
            return Slot(start=candidate, duration=duration)
    raise NoSlotAvailable(
        f"no {duration}-minute slot free for all calendars before minute {horizon}"
    )
