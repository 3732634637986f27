"""Deterministic discrete-event simulation of the two-branch business.

The world advances on an integer-second event grid. Events at equal
times run in insertion order, all state changes land in the trace, and
nothing depends on wall-clock time or hash ordering, so a (scenario,
seed) pair always reproduces the same trace byte for byte.

Failure semantics: a Failed node cannot receive. Messages whose delivery
falls inside an outage are lost, unless the continuity layer (S17) is
enabled, in which case they wait for the failover switch and land on a
spare device. Sending from a failed node is not restricted; the model
cares about delivery exposure only.
"""

from __future__ import annotations

import base64
import heapq
import random
from dataclasses import dataclass, field
from typing import Callable

from . import middleware
from .calendars import Calendar, Slot, find_common_slot
from .errors import (
    AuthDenied,
    CloudUnavailable,
    InvalidScenario,
    MissingKey,
    NoRoute,
    UnknownAttendee,
    UnknownNode,
    UnknownUser,
)
from .middleware import ControlLayerConfig, Envelope
from .scenario import CommandSpec, ScenarioConfig, validate_scenario
from .timeline import SECONDS_PER_DAY, next_month_end_instant
from .trace import Trace


@dataclass
class Node:
    id: str
    kind: str
    site: str | None
    backup_pool: tuple[str, ...] = ()
    fail_depth: int = 0
    key_id: str | None = None

    @property
    def up(self) -> bool:
        return self.fail_depth == 0

    @property
    def status(self) -> str:
        return "Up" if self.up else "Failed"


@dataclass(frozen=True)
class Link:
    id: str
    a: str
    b: str
    latency_ms: int
    bandwidth_bps: int | None = None


@dataclass
class Message:
    msg_id: int
    src: str
    dst: str
    payload: bytes
    envelope: Envelope | None
    sent_at: int
    eta: int
    size_bytes: int
    wire_bytes: int
    path: tuple[str, ...]
    link_ms: int
    s10_ms: int
    s9_ms: int
    s17_ms: int = 0
    status: str = "InFlight"  # InFlight | Delivered | Lost
    delivered_at: int | None = None
    delivered_to: str | None = None
    on_delivered: Callable[[], None] | None = field(default=None, repr=False)

    @property
    def payload_visible(self) -> bool:
        """Whether the payload rides the wire in the clear."""
        return self.envelope is None


@dataclass
class Reminder:
    id: str
    author: str
    target: str
    payload: bytes
    created_at: int
    recurrence: str = "EndOfMonth"  # the only supported cadence


class World:
    def __init__(self, scenario: ScenarioConfig, controls: ControlLayerConfig):
        validate_scenario(scenario)
        self.scenario = scenario
        self.config = controls
        self.epoch = scenario.epoch
        self.horizon_s = scenario.horizon_s
        self.rng_seed = scenario.seed
        self.rng = random.Random(scenario.seed)
        self.clock = 0
        self.trace = Trace()

        self.nodes: dict[str, Node] = {}
        for spec in scenario.nodes:
            self.nodes[spec.id] = Node(
                id=spec.id, kind=spec.kind, site=spec.site, backup_pool=spec.backup_pool
            )
        self.cloud_id = next(n.id for n in self.nodes.values() if n.kind == "CloudService")

        self.links: dict[str, Link] = {}
        for spec in scenario.links:
            self.links[spec.id] = Link(
                id=spec.id,
                a=spec.a,
                b=spec.b,
                latency_ms=spec.latency_ms,
                bandwidth_bps=spec.bandwidth_bps,
            )

        self._provision_backups()
        self._assign_keys()

        self._adjacency: dict[str, list[tuple[str, str]]] = {n: [] for n in self.nodes}
        for link in self.links.values():
            self._adjacency[link.a].append((link.b, link.id))
            self._adjacency[link.b].append((link.a, link.id))
        for neighbors in self._adjacency.values():
            neighbors.sort()

        self.calendars: dict[str, Calendar] = {}
        self.attendee_device: dict[str, str] = {}
        for att in scenario.attendees:
            self.calendars[att.id] = Calendar(owner=att.id, busy=list(att.busy))
            self.attendee_device[att.id] = att.device

        self.messages: dict[int, Message] = {}
        self.reminders: dict[str, Reminder] = {}
        self._next_msg_id = 1
        self._queue: list[tuple[int, int, str, object]] = []
        self._event_seq = 0
        self._pending: dict[str, list[int]] = {}
        # per-node failover bookkeeping: episode counter + activation state
        self._failover: dict[str, dict] = {}

        self._record_provisioning()
        for failure in scenario.failures:
            self._schedule(failure.at, "fail_start", failure.node)
            self._schedule(failure.at + failure.duration_s, "fail_end", failure.node)
        for command in scenario.commands:
            self._schedule(command.at, "command", command)
        for reminder in scenario.reminders:
            self._schedule(reminder.at, "reminder_register", reminder)
        for theft in scenario.thefts:
            self._schedule(theft.at, "theft", theft.node)
        if self.config.s9.enabled and self.config.s9.review_period_days > 0:
            period = self.config.s9.review_period_days * SECONDS_PER_DAY
            t = period
            while t <= self.horizon_s:
                self._schedule(t, "ops", ("S9", "access-review", 1))
                t += period

    # -- construction helpers ------------------------------------------

    def _provision_backups(self) -> None:
        """S17 adds one spare per site for every device without a pool."""
        if not self.config.s17.enabled:
            return
        primaries = [
            n for n in list(self.nodes.values())
            if n.kind == "SmartDevice" and not n.backup_pool
        ]
        for primary in sorted(primaries, key=lambda n: n.id):
            mirror = self._direct_link(primary.id, self.cloud_id)
            spares = []
            for k in range(1, self.config.s17.backups_per_site + 1):
                spare_id = f"{primary.id}-r{k}"
                if spare_id in self.nodes:
                    raise InvalidScenario(
                        f"cannot provision spare {spare_id!r}: id already taken"
                    )
                self.nodes[spare_id] = Node(
                    id=spare_id, kind="SmartDevice", site=primary.site
                )
                if mirror is not None:
                    link_id = f"{spare_id}--{self.cloud_id}"
                    self.links[link_id] = Link(
                        id=link_id,
                        a=spare_id,
                        b=self.cloud_id,
                        latency_ms=mirror.latency_ms,
                        bandwidth_bps=mirror.bandwidth_bps,
                    )
                spares.append(spare_id)
            primary.backup_pool = tuple(spares)

    def _direct_link(self, a: str, b: str) -> Link | None:
        for link in self.links.values():
            if {link.a, link.b} == {a, b}:
                return link
        return None

    def _assign_keys(self) -> None:
        if not self.config.s10.enabled:
            return
        holders = [
            n for n in self.nodes.values()
            if n.kind in ("SmartDevice", "CloudService")
        ]
        given = dict(self.config.s10.key_ids)
        declared_ids = {n.id for n in self.scenario.nodes}
        for node in holders:
            if node.id in given:
                node.key_id = given[node.id]
            elif not given or node.id not in declared_ids:
                # empty map: derive everything; partial map: spares created
                # by this build still get derived keys
                node.key_id = f"k-{node.id}"
            else:
                raise InvalidScenario(
                    f"encryption enabled but node {node.id!r} has no key id"
                )

    def _record_provisioning(self) -> None:
        """Queue the capital and setup records for clock 0, by section.

        These are events rather than direct appends so a freshly built
        world always starts with an empty trace.
        """
        if self.config.s9.enabled:
            locks = sum(1 for n in self.nodes.values() if n.kind == "SmartDevice")
            self._schedule(0, "capital", ("S9", "device-lock", locks))
        if self.config.s10.enabled:
            self._schedule(0, "ops", ("S10", "key-provisioning", 1))
        if self.config.s17.enabled:
            backups = len({m for n in self.nodes.values() for m in n.backup_pool})
            if backups:
                self._schedule(0, "capital", ("S17", "backup-device", backups))

    # -- event machinery -----------------------------------------------

    def _schedule(self, time: int, kind: str, data: object) -> None:
        heapq.heappush(self._queue, (time, self._event_seq, kind, data))
        self._event_seq += 1

    def run_until(self, t_end: int) -> "World":
        if t_end < self.clock:
            raise InvalidScenario(
                f"cannot run backwards: t_end {t_end} < clock {self.clock}"
            )
        while self._queue and self._queue[0][0] <= t_end:
            time, _, kind, data = heapq.heappop(self._queue)
            self.clock = time
            self._dispatch(kind, data)
        self.clock = t_end
        return self

    def _dispatch(self, kind: str, data: object) -> None:
        if kind == "deliver":
            self._handle_delivery(self.messages[data])
        elif kind == "command":
            self._handle_command(data)
        elif kind == "fail_start":
            self._fail_start(data)
        elif kind == "fail_end":
            self._fail_end(data)
        elif kind == "failover":
            node_id, episode = data
            self._failover_activate(node_id, episode)
        elif kind == "reminder_register":
            self.create_reminder(
                data.author, data.target, data.payload.encode("utf-8"),
                reminder_id=data.id,
            )
        elif kind == "reminder_fire":
            self._fire_reminder(data)
        elif kind == "ops":
            section, action, events = data
            self.trace.append(
                "ops", self.clock, section=section, action=action, events=events
            )
        elif kind == "capital":
            section, item, count = data
            self.trace.append(
                "capital", self.clock, section=section, item=item, count=count
            )
        elif kind == "theft":
            self.trace.append(
                "theft", self.clock, node=data, guarded=self.config.s9.enabled
            )
        else:  # pragma: no cover
            raise AssertionError(f"unknown event kind {kind!r}")

    # -- messaging -------------------------------------------------------

    def _route(self, src: str, dst: str) -> tuple[str, ...] | None:
        """Fewest-hop link path; neighbor order is sorted, so ties are stable."""
        if src == dst:
            return None
        frontier = [src]
        came_from: dict[str, tuple[str, str]] = {}
        seen = {src}
        while frontier:
            nxt = []
            for here in frontier:
                for neighbor, link_id in self._adjacency[here]:
                    if neighbor in seen:
                        continue
                    seen.add(neighbor)
                    came_from[neighbor] = (here, link_id)
                    if neighbor == dst:
                        path = []
                        walk = dst
                        while walk != src:
                            prev, lid = came_from[walk]
                            path.append(lid)
                            walk = prev
                        return tuple(reversed(path))
                    nxt.append(neighbor)
            frontier = nxt
        return None

    def send_message(
        self,
        src: str,
        dst: str,
        payload: bytes,
        s9_ms: int = 0,
        on_delivered: Callable[[], None] | None = None,
    ) -> int:
        if src not in self.nodes:
            raise UnknownNode(f"unknown sender {src!r}")
        if dst not in self.nodes:
            raise UnknownNode(f"unknown destination {dst!r}")
        path = self._route(src, dst)
        if path is None:
            raise NoRoute(f"no link path from {src!r} to {dst!r}")

        msg_id = self._next_msg_id
        self._next_msg_id += 1

        envelope = None
        if self.config.s10.enabled:
            key = self.nodes[src].key_id
            if not key:
                raise MissingKey(f"node {src!r} holds no key id")
            envelope = middleware.wrap(payload, key, self.config, msg_id=msg_id)

        size = len(payload)
        wire = size + (self.config.s10.overhead_bytes if envelope else 0)
        link_ms = 0
        for link_id in path:
            link = self.links[link_id]
            link_ms += link.latency_ms
            if link.bandwidth_bps:
                link_ms += -(-wire * 1000 // link.bandwidth_bps)
        s10_ms = self.config.s10.per_message_latency_ms if envelope else 0
        total_ms = link_ms + s10_ms + s9_ms
        eta = self.clock + -(-total_ms // 1000)  # round up to the second grid

        msg = Message(
            msg_id=msg_id,
            src=src,
            dst=dst,
            payload=bytes(payload),
            envelope=envelope,
            sent_at=self.clock,
            eta=eta,
            size_bytes=size,
            wire_bytes=wire,
            path=path,
            link_ms=link_ms,
            s10_ms=s10_ms,
            s9_ms=s9_ms,
            on_delivered=on_delivered,
        )
        self.messages[msg_id] = msg

        fields = dict(
            msg_id=msg_id,
            src=src,
            dst=dst,
            size_bytes=size,
            wire_bytes=wire,
            wrapped=envelope is not None,
            path=list(path),
            link_ms=link_ms,
            s10_ms=s10_ms,
            s9_ms=s9_ms,
        )
        if envelope is not None:
            fields.update(envelope.wire_fields())
        else:
            fields["payload_b64"] = base64.b64encode(payload).decode("ascii")
        self.trace.append("sent", self.clock, **fields)
        self._schedule(eta, "deliver", msg_id)
        return msg_id

    def _handle_delivery(self, msg: Message) -> None:
        node = self.nodes[msg.dst]
        if node.up:
            self._deliver(msg, msg.dst)
            return
        if self.config.s17.enabled:
            state = self._failover.get(msg.dst)
            if state is not None and not state["active"]:
                self._pending.setdefault(msg.dst, []).append(msg.msg_id)
                return
            substitute = self._first_up_backup(msg.dst)
            if substitute is not None:
                self._deliver(msg, substitute)
            else:
                self._lose(msg, "pool-exhausted")
            return
        self._lose(msg, "node-failed")

    def _deliver(self, msg: Message, to: str) -> None:
        msg.s17_ms = (self.clock - msg.eta) * 1000
        msg.status = "Delivered"
        msg.delivered_at = self.clock
        msg.delivered_to = to
        self.trace.append(
            "delivered",
            self.clock,
            msg_id=msg.msg_id,
            to=to,
            latency_ms=msg.link_ms + msg.s10_ms + msg.s9_ms + msg.s17_ms,
            s17_ms=msg.s17_ms,
        )
        if msg.on_delivered is not None:
            msg.on_delivered()

    def _lose(self, msg: Message, reason: str) -> None:
        msg.status = "Lost"
        self.trace.append("lost", self.clock, msg_id=msg.msg_id, reason=reason)

    # -- failures and failover -------------------------------------------

    def inject_failure(self, node_id: str, at: int, duration_s: int) -> None:
        if node_id not in self.nodes:
            raise UnknownNode(f"unknown node {node_id!r}")
        if at < self.clock:
            raise InvalidScenario(f"cannot inject a failure in the past (at={at})")
        self._schedule(at, "fail_start", node_id)
        self._schedule(at + duration_s, "fail_end", node_id)

    def _fail_start(self, node_id: str) -> None:
        node = self.nodes[node_id]
        node.fail_depth += 1
        if node.fail_depth > 1:
            return  # overlapping windows merge into one episode
        self.trace.append("failure", self.clock, node=node_id, phase="start")
        if self.config.s17.enabled:
            episode = self._failover.get(node_id, {}).get("episode", 0) + 1
            self._failover[node_id] = {"episode": episode, "active": False}
            self._schedule(
                self.clock + self.config.s17.detection_window_s,
                "failover",
                (node_id, episode),
            )

    def _fail_end(self, node_id: str) -> None:
        node = self.nodes[node_id]
        node.fail_depth -= 1
        if node.fail_depth > 0:
            return
        self.trace.append("failure", self.clock, node=node_id, phase="end")
        # recovery beats a pending detection window: queued messages go
        # straight back to the recovered node
        for msg_id in self._pending.pop(node_id, []):
            self._deliver(self.messages[msg_id], node_id)
        self._failover.pop(node_id, None)

    def _failover_activate(self, node_id: str, episode: int) -> str | None:
        state = self._failover.get(node_id)
        if state is None or state["episode"] != episode or state["active"]:
            return None  # stale timer: the node recovered or was handled
        if self.nodes[node_id].up:
            return None
        state["active"] = True
        substitute = self._first_up_backup(node_id)
        self.trace.append(
            "failover", self.clock, failed=node_id, substitute=substitute
        )
        self.trace.append(
            "ops", self.clock, section="S17", action="replacement-order", events=1
        )
        for msg_id in self._pending.pop(node_id, []):
            msg = self.messages[msg_id]
            if substitute is not None:
                self._deliver(msg, substitute)
            else:
                self._lose(msg, "pool-exhausted")
        return substitute

    def activate_failover(self, node_id: str) -> str | None:
        """Immediately run the failover switch for a failed node."""
        if node_id not in self.nodes:
            raise UnknownNode(f"unknown node {node_id!r}")
        state = self._failover.get(node_id)
        if state is None:
            episode = 1
            self._failover[node_id] = {"episode": episode, "active": False}
        elif state["active"]:
            return self._first_up_backup(node_id)
        else:
            episode = state["episode"]
        return self._failover_activate(node_id, episode)

    def _first_up_backup(self, node_id: str) -> str | None:
        for backup in self.nodes[node_id].backup_pool:
            if self.nodes[backup].up:
                return backup
        return None

    # -- commands ----------------------------------------------------------

    def _handle_command(self, command: CommandSpec) -> None:
        s9_ms = 0
        if self.config.s9.enabled:
            try:
                middleware.authenticate(
                    command.user, command.credential, command.device,
                    self.config, at=self.clock,
                )
            except UnknownUser:
                self.trace.append(
                    "audit", self.clock, user=command.user, device=command.device,
                    authenticated=False, reason="unknown-user",
                )
                return
            except AuthDenied:
                self.trace.append(
                    "audit", self.clock, user=command.user, device=command.device,
                    authenticated=False, reason="bad-credential",
                )
                return
            self.trace.append(
                "audit", self.clock, user=command.user, device=command.device,
                authenticated=True,
            )
            s9_ms = self.config.s9.per_session_latency_ms

        if command.intent == "voice_message":
            self.send_message(
                command.device, command.to, command.payload.encode("utf-8"), s9_ms
            )
        elif command.intent == "create_reminder":
            author, target = command.device, command.target
            payload = command.payload.encode("utf-8")
            self.send_message(
                command.device, self.cloud_id, payload, s9_ms,
                on_delivered=lambda: self.create_reminder(author, target, payload),
            )
        elif command.intent == "schedule_meeting":
            organizer = command.device
            attendees = command.attendees
            duration = command.duration_min
            self.send_message(
                command.device, self.cloud_id, b"meeting-request", s9_ms,
                on_delivered=lambda: self.schedule_meeting(
                    organizer, list(attendees), duration
                ),
            )

    # -- reminders ---------------------------------------------------------

    def create_reminder(
        self, author: str, target: str, payload: bytes, reminder_id: str | None = None
    ) -> str:
        for node_id in (author, target):
            if node_id not in self.nodes:
                raise UnknownNode(f"unknown node {node_id!r}")
            if self.nodes[node_id].kind != "SmartDevice":
                raise UnknownNode(f"{node_id!r} is not a smart device")
        if not self.nodes[self.cloud_id].up:
            raise CloudUnavailable("cloud service is down; cannot register reminder")
        rid = reminder_id or f"rem-{len(self.reminders) + 1}"
        if rid in self.reminders:
            raise InvalidScenario(f"duplicate reminder id {rid!r}")
        self.reminders[rid] = Reminder(
            id=rid, author=author, target=target,
            payload=bytes(payload), created_at=self.clock,
        )
        self.trace.append(
            "reminder", self.clock, event="created", reminder=rid,
            author=author, target=target,
        )
        self._schedule(
            next_month_end_instant(
                self.clock, self.scenario.reminder_fire_time, self.epoch
            ),
            "reminder_fire",
            rid,
        )
        return rid

    def _fire_reminder(self, rid: str) -> None:
        reminder = self.reminders[rid]
        self.trace.append(
            "reminder", self.clock, event="fired", reminder=rid,
            target=reminder.target,
        )
        self.send_message(self.cloud_id, reminder.target, reminder.payload)
        self._schedule(
            next_month_end_instant(
                self.clock, self.scenario.reminder_fire_time, self.epoch
            ),
            "reminder_fire",
            rid,
        )

    # -- meetings ------------------------------------------------------------

    def schedule_meeting(
        self, organizer: str, attendees: list[str], duration_min: int
    ) -> Slot:
        if organizer not in self.nodes:
            raise UnknownNode(f"unknown organizer {organizer!r}")
        for attendee in attendees:
            if attendee not in self.calendars:
                raise UnknownAttendee(f"attendee {attendee!r} has no calendar")
        search_from = -(-self.clock // 60)
        horizon = search_from + self.scenario.meeting_horizon_days * 1440
        slot = find_common_slot(
            [self.calendars[a] for a in attendees],
            duration_min,
            search_from,
            horizon,
            self.scenario.working_hours(),
        )
        for attendee in attendees:
            self.calendars[attendee].add_busy(slot.start, slot.end)
        self.trace.append(
            "meeting", self.clock, organizer=organizer, attendees=list(attendees),
            start_min=slot.start, duration_min=duration_min,
        )
        invitation = f"invitation:{slot.start}:{duration_min}".encode("ascii")
        for attendee in attendees:
            self.send_message(self.cloud_id, self.attendee_device[attendee], invitation)
        return slot


def build_world(
    scenario: ScenarioConfig, controls: ControlLayerConfig | None = None
) -> World:
    """Construct a world at clock 0 with every node Up and an empty queue run.

    When `controls` is omitted the scenario's own control block applies.
    """
    return World(scenario, controls if controls is not None else scenario.controls)
