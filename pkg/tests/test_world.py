import datetime as dt
from dataclasses import replace

import pytest

from helpers import two_device_scenario
from smartbizsim.errors import (
    CloudUnavailable,
    InvalidScenario,
    NoRoute,
    NoSlotAvailable,
    UnknownAttendee,
    UnknownNode,
)
from smartbizsim.middleware import ControlLayerConfig, S17Config
from smartbizsim.scenario import (
    AttendeeSpec,
    LinkSpec,
    NodeSpec,
    ReminderSpec,
    default_scenario,
)
from smartbizsim.timeline import SECONDS_PER_DAY, seconds_at
from smartbizsim.world import build_world

DAY = SECONDS_PER_DAY


def test_default_scenario_builds_three_devices_and_one_cloud():
    world = build_world(default_scenario())
    kinds = sorted((n.kind, n.site) for n in world.nodes.values())
    assert kinds == [
        ("CloudService", None),
        ("SmartDevice", "CityA"),
        ("SmartDevice", "CityB"),
        ("SmartDevice", "Truck"),
    ]
    assert world.clock == 0
    assert all(n.up for n in world.nodes.values())
    assert len(world.trace) == 0  # nothing observed until the world runs


def test_minimal_world_is_valid():
    scenario = replace(
        two_device_scenario(),
        nodes=(
            NodeSpec(id="device-a", kind="SmartDevice", site="CityA"),
            NodeSpec(id="cloud", kind="CloudService"),
        ),
        links=(LinkSpec(a="device-a", b="cloud", latency_ms=10),),
    )
    assert len(build_world(scenario).nodes) == 2


@pytest.mark.parametrize(
    "mutate",
    [
        lambda s: replace(s, links=s.links + (LinkSpec(a="device-a", b="ghost", latency_ms=5),)),
        lambda s: replace(s, links=(LinkSpec(a="device-a", b="cloud", latency_ms=-1),)),
        lambda s: replace(s, nodes=tuple(n for n in s.nodes if n.kind != "SmartDevice")),
        lambda s: replace(s, nodes=s.nodes + (NodeSpec(id="cloud2", kind="CloudService"),)),
        lambda s: replace(s, nodes=s.nodes + (NodeSpec(id="device-a", kind="SmartDevice", site="CityA"),)),
    ],
)
def test_invalid_scenarios_rejected(mutate):
    with pytest.raises(InvalidScenario):
        build_world(mutate(two_device_scenario()))


def test_run_until_with_empty_queue_only_moves_the_clock():
    world = build_world(two_device_scenario())
    before = len(world.trace)
    world.run_until(3600)
    assert world.clock == 3600
    assert len(world.trace) == before
    with pytest.raises(InvalidScenario):
        world.run_until(3599)


def test_equal_time_events_run_in_insertion_order():
    scenario = two_device_scenario(message_times=(500, 500, 500))
    world = build_world(scenario)
    world.run_until(600)
    sends = world.trace.by_kind("sent")
    assert [s["msg_id"] for s in sends] == [1, 2, 3]
    assert [s["time"] for s in sends] == [500, 500, 500]
    # deliveries at the same instant also keep their scheduling order
    assert [d["msg_id"] for d in world.trace.by_kind("delivered")] == [1, 2, 3]


def test_same_scenario_twice_gives_identical_traces():
    scenario = default_scenario()
    t1 = build_world(scenario).run_until(scenario.horizon_s).trace.to_ndjson()
    t2 = build_world(scenario).run_until(scenario.horizon_s).trace.to_ndjson()
    assert t1 == t2


def test_single_hop_latency_rounds_up_to_the_second_grid():
    world = build_world(two_device_scenario())
    msg_id = world.send_message("device-a", "cloud", b"hello")
    world.run_until(10)
    msg = world.messages[msg_id]
    assert msg.link_ms == 50
    assert msg.delivered_at == 1  # 0.05 s rounded up to the next grid slot
    assert msg.status == "Delivered"


def test_two_hop_path_sums_link_latencies():
    world = build_world(two_device_scenario())
    msg_id = world.send_message("device-a", "device-b", b"x")
    world.run_until(10)
    msg = world.messages[msg_id]
    assert msg.link_ms == 100
    assert msg.path == ("device-a--cloud", "device-b--cloud")


def test_unknown_destination_and_no_route():
    world = build_world(two_device_scenario())
    with pytest.raises(UnknownNode):
        world.send_message("device-a", "ghost", b"x")
    scenario = replace(
        two_device_scenario(),
        nodes=two_device_scenario().nodes + (NodeSpec(id="island", kind="SmartDevice", site="Truck"),),
    )
    isolated = build_world(scenario)
    with pytest.raises(NoRoute):
        isolated.send_message("device-a", "island", b"x")


def test_message_to_failed_node_without_backups_is_lost():
    scenario = two_device_scenario(
        message_times=(1000,),
        failures=(("device-b", 900, 3600),),
    )
    world = build_world(scenario)
    world.run_until(scenario.horizon_s)
    lost = world.trace.by_kind("lost")
    assert len(lost) == 1
    assert lost[0]["reason"] == "node-failed"


def test_conservation_every_send_has_one_terminal_record():
    scenario = default_scenario()
    world = build_world(scenario)
    world.run_until(scenario.horizon_s)
    sent = {r["msg_id"] for r in world.trace.by_kind("sent")}
    delivered = [r["msg_id"] for r in world.trace.by_kind("delivered")]
    lost = [r["msg_id"] for r in world.trace.by_kind("lost")]
    assert sorted(delivered + lost) == sorted(sent)
    assert len(delivered) + len(lost) == len(sent)


# -- failure injection -------------------------------------------------------


def test_overlapping_failure_windows_merge_into_one_outage():
    scenario = two_device_scenario(
        message_times=(120, 250, 299, 350),
        failures=(("device-b", 100, 100), ("device-b", 150, 150)),
    )
    world = build_world(scenario)
    world.run_until(scenario.horizon_s)
    failures = world.trace.by_kind("failure")
    assert [(f["phase"], f["time"]) for f in failures] == [("start", 100), ("end", 300)]
    # union window is [100, 300): eta 121 and 251 lost, 300 and 351 delivered
    outcomes = {
        world.messages[m].msg_id: world.messages[m].status for m in world.messages
    }
    assert list(outcomes.values()) == ["Lost", "Lost", "Delivered", "Delivered"]


def test_zero_duration_failure_has_no_observable_effect():
    scenario = two_device_scenario(message_times=(399,), failures=(("device-b", 400, 0),))
    world = build_world(scenario)
    world.run_until(scenario.horizon_s)
    assert len(world.trace.by_kind("delivered")) == 1
    assert not world.trace.by_kind("lost")


def test_inject_failure_validates_inputs():
    world = build_world(two_device_scenario())
    with pytest.raises(UnknownNode):
        world.inject_failure("ghost", 10, 10)
    world.run_until(100)
    with pytest.raises(InvalidScenario):
        world.inject_failure("device-b", 50, 10)


# -- reminders ---------------------------------------------------------------


def _reminder_scenario(created_at: int, horizon_days: int = 367):
    return two_device_scenario(
        horizon_s=horizon_days * DAY,
        reminders=(
            ReminderSpec(id="eom", author="device-a", target="device-b",
                         payload="release the recordings", at=created_at),
        ),
    )


def test_reminder_created_mid_january_fires_twelve_times_in_the_year():
    created = 14 * DAY  # Jan 15, 2024
    scenario = _reminder_scenario(created, horizon_days=366)
    world = build_world(scenario)
    world.run_until(scenario.horizon_s)
    fired = [r for r in world.trace.by_kind("reminder") if r["event"] == "fired"]
    assert len(fired) == 12
    epoch = scenario.epoch
    expected_first = seconds_at(epoch, dt.date(2024, 1, 31), dt.time(9, 0))
    assert fired[0]["time"] == expected_first
    # every firing reaches the target device as a message
    deliveries = world.trace.by_kind("delivered")
    fired_msgs = [d for d in deliveries if d["to"] == "device-b"]
    assert len(fired_msgs) == 12


def test_reminder_created_after_fire_time_on_month_end_waits_a_month():
    created = 30 * DAY + 10 * 3600  # Jan 31, 10:00 (fire time is 09:00)
    scenario = _reminder_scenario(created, horizon_days=70)
    world = build_world(scenario)
    world.run_until(scenario.horizon_s)
    fired = [r for r in world.trace.by_kind("reminder") if r["event"] == "fired"]
    assert fired[0]["time"] == seconds_at(scenario.epoch, dt.date(2024, 2, 29), dt.time(9, 0))


def test_create_reminder_validates_nodes_and_cloud():
    world = build_world(two_device_scenario())
    with pytest.raises(UnknownNode):
        world.create_reminder("device-a", "ghost", b"x")
    with pytest.raises(UnknownNode):
        world.create_reminder("device-a", "cloud", b"x")  # target must be a device
    world.nodes["cloud"].fail_depth = 1
    with pytest.raises(CloudUnavailable):
        world.create_reminder("device-a", "device-b", b"x")


# -- meetings ------------------------------------------------------------------


def _meeting_scenario():
    base = two_device_scenario()
    return replace(
        base,
        nodes=base.nodes + (NodeSpec(id="device-t", kind="SmartDevice", site="Truck"),),
        links=base.links + (LinkSpec(a="device-t", b="cloud", latency_ms=80),),
        attendees=(
            AttendeeSpec(id="chief", device="device-b"),
            AttendeeSpec(id="finance", device="device-a"),
            AttendeeSpec(id="driver", device="device-t"),
        ),
    )


def test_meeting_books_everyone_and_sends_three_invitations():
    world = build_world(_meeting_scenario())
    slot = world.schedule_meeting("device-b", ["chief", "finance", "driver"], 60)
    assert slot.duration == 60
    invitations = world.trace.by_kind("sent")
    assert len(invitations) == 3
    assert {i["src"] for i in invitations} == {"cloud"}
    for attendee in ("chief", "finance", "driver"):
        assert world.calendars[attendee].overlaps(slot.start, slot.end)


def test_rescheduling_with_same_inputs_lands_strictly_later():
    world = build_world(_meeting_scenario())
    first = world.schedule_meeting("device-b", ["chief", "finance"], 45)
    second = world.schedule_meeting("device-b", ["chief", "finance"], 45)
    assert second.start > first.start


def test_unknown_attendee_rejected():
    world = build_world(_meeting_scenario())
    with pytest.raises(UnknownAttendee):
        world.schedule_meeting("device-b", ["chief", "nobody"], 30)


def test_unplaceable_meeting_raises():
    world = build_world(_meeting_scenario())
    with pytest.raises(NoSlotAvailable):
        world.schedule_meeting("device-b", ["chief"], 10 * 60 + 1)


# -- continuity provisioning ---------------------------------------------------


def test_s17_provisions_one_spare_per_device():
    controls = ControlLayerConfig(s17=S17Config(enabled=True, backups_per_site=1))
    world = build_world(two_device_scenario(controls=controls))
    assert set(world.nodes) == {
        "device-a", "device-b", "cloud", "device-a-r1", "device-b-r1",
    }
    assert world.nodes["device-a"].backup_pool == ("device-a-r1",)
    spare_link = world.links["device-a-r1--cloud"]
    assert spare_link.latency_ms == 50  # mirrors the primary's cloud link
    world.run_until(0)  # provisioning records land at clock 0
    capital = world.trace.by_kind("capital")
    assert [(c["section"], c["count"]) for c in capital] == [("S17", 2)]
