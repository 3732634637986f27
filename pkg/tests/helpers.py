"""Shared test fixtures: independent oracles and scenario builders.

The oracles deliberately use different mechanics than the code under
test (minute grids instead of interval walks, day-by-day enumeration
instead of month arithmetic, flat product lists instead of structured
breakdowns) so agreement actually means something.
"""

from __future__ import annotations

import datetime as dt
import random

import numpy as np

from smartbizsim.calendars import WorkingHours
from smartbizsim.controls import CostKind
from smartbizsim.costs import CostRates
from smartbizsim.metering import SectionUsage
from smartbizsim.scenario import (
    CommandSpec,
    FailureSpec,
    LinkSpec,
    NodeSpec,
    ReminderSpec,
    ScenarioConfig,
)
from smartbizsim.timeline import MINUTES_PER_DAY


# -- earliest-slot oracle -----------------------------------------------------


def minute_scan_slot(
    busy_lists: list[list[tuple[int, int]]],
    duration: int,
    search_from: int,
    horizon: int,
    hours: WorkingHours,
) -> int | None:
    """Exhaustive scan over every candidate start minute.

    Returns the earliest valid start, or None when nothing fits. A start
    is valid when every minute of the slot is a working minute and busy
    in no calendar.
    """
    ok = np.zeros(horizon, dtype=np.int8)
    for day in range(horizon // MINUTES_PER_DAY + 1):
        if not hours.is_workday(day):
            continue
        lo = day * MINUTES_PER_DAY + hours.start_minute
        hi = day * MINUTES_PER_DAY + hours.end_minute
        ok[max(lo, 0):min(hi, horizon)] = 1
    for busy in busy_lists:
        for start, end in busy:
            ok[max(start, 0):min(end, horizon)] = 0
    cumulative = np.concatenate(([0], np.cumsum(ok)))
    for start in range(max(search_from, 0), horizon - duration + 1):
        if cumulative[start + duration] - cumulative[start] == duration:
            return start
    return None


def random_slot_instance(rng: random.Random) -> dict:
    """One randomized scheduling problem: 3 calendars, <=20 busy blocks
    each, 30-day horizon."""
    horizon = 30 * MINUTES_PER_DAY
    busy_lists = []
    for _ in range(3):
        blocks = []
        for _ in range(rng.randint(0, 20)):
            start = rng.randrange(0, horizon)
            length = rng.randint(15, 480)
            blocks.append((start, min(start + length, horizon)))
        busy_lists.append(blocks)
    return {
        "busy_lists": busy_lists,
        "duration": rng.choice((15, 30, 45, 60, 90, 120, 240, 480)),
        "search_from": rng.randrange(0, horizon - 600),
        "horizon": horizon,
        "hours": WorkingHours(epoch_weekday=rng.randrange(7)),
    }


# -- month-end oracle ---------------------------------------------------------


def month_end_dates_by_enumeration(start: dt.date, end: dt.date) -> list[dt.date]:
    """Walk every single day; a month-end is a day whose successor starts
    a new month."""
    out = []
    day = start
    while day <= end:
        if (day + dt.timedelta(days=1)).month != day.month:
            out.append(day)
        day += dt.timedelta(days=1)
    return out


# -- cost oracle ---------------------------------------------------------------


def naive_total_cost(plan, rates: CostRates, usage: dict[str, SectionUsage]) -> int:
    """Spreadsheet-style recomputation: one flat list of quantity*rate
    products, summed."""
    products = []
    for action in plan.actions:
        if action.control not in plan.enabled_controls:
            continue
        for component in action.cost_components:
            if component.kind is CostKind.CAPITAL:
                products.append(component.magnitude * rates.capital_item)
    for section in plan.enabled_controls:
        used = usage.get(section, SectionUsage())
        products.append(used.operational_events * rates.operational_event)
        products.append(used.extra_latency_ms * rates.latency_ms)
        products.append(used.extra_bytes * rates.wire_byte)
        products.append(used.sessions * rates.session)
    return sum(products)


# -- scenario builders ----------------------------------------------------------


def two_device_scenario(
    horizon_s: int = 90_000,
    message_times: tuple[int, ...] = (),
    failures: tuple[tuple[str, int, int], ...] = (),
    reminders: tuple[ReminderSpec, ...] = (),
    controls=None,
    epoch: str = "2024-01-01",
) -> ScenarioConfig:
    """Minimal world: device-a and device-b behind one cloud, 50 ms links.

    `message_times` sends device-a -> device-b at each instant;
    `failures` is (node, at, duration_s) triples.
    """
    from smartbizsim.middleware import ControlLayerConfig
    from smartbizsim.timeline import parse_iso_date

    commands = tuple(
        CommandSpec(
            at=t,
            device="device-a",
            user="operator",
            credential="op-pass",
            intent="voice_message",
            to="device-b",
            payload=f"ping {t}",
        )
        for t in message_times
    )
    return ScenarioConfig(
        epoch=parse_iso_date(epoch),
        horizon_s=horizon_s,
        seed=7,
        nodes=(
            NodeSpec(id="device-a", kind="SmartDevice", site="CityA"),
            NodeSpec(id="device-b", kind="SmartDevice", site="CityB"),
            NodeSpec(id="cloud", kind="CloudService"),
        ),
        links=(
            LinkSpec(a="device-a", b="cloud", latency_ms=50),
            LinkSpec(a="device-b", b="cloud", latency_ms=50),
        ),
        reminders=reminders,
        failures=tuple(FailureSpec(node=n, at=a, duration_s=d) for n, a, d in failures),
        commands=commands,
        controls=controls if controls is not None else ControlLayerConfig(),
    )
