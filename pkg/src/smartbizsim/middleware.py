"""Pluggable security control layers for the simulation.

Three layers, each switched by its own config block:

* S9  -- access control: a credential check gates every device command;
  sessions add latency to the command's outgoing message and land in the
  audit trail.
* S10 -- cryptography: payloads travel inside a key-gated envelope.
  Encryption is modeled, not computed: holders of the matching key id
  recover the payload, everyone else sees an opaque marker plus sizes.
* S17 -- continuity: failed devices are detected and stood in for by
  spare devices after a detection window.

Layer application order is fixed: S9 at command ingress, S10 at send,
S17 at delivery.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Mapping

from .errors import AuthDenied, InvalidScenario, MissingKey, UnknownLink, UnknownUser

if TYPE_CHECKING:  # pragma: no cover
    from .world import World


@dataclass(frozen=True)
class S9Config:
    enabled: bool = False
    per_session_latency_ms: int = 20
    credential_store: Mapping[str, str] = field(default_factory=dict)
    review_period_days: int = 30


@dataclass(frozen=True)
class S10Config:
    enabled: bool = False
    per_message_latency_ms: int = 5
    overhead_bytes: int = 64
    # node id -> key id; empty means "derive one key per node at build".
    key_ids: Mapping[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class S17Config:
    enabled: bool = False
    backups_per_site: int = 1
    detection_window_s: int = 60


@dataclass(frozen=True)
class ControlLayerConfig:
    s9: S9Config = S9Config()
    s10: S10Config = S10Config()
    s17: S17Config = S17Config()

    def __post_init__(self) -> None:
        checks = (
            ("s9.per_session_latency_ms", self.s9.per_session_latency_ms),
            ("s9.review_period_days", self.s9.review_period_days),
            ("s10.per_message_latency_ms", self.s10.per_message_latency_ms),
            ("s10.overhead_bytes", self.s10.overhead_bytes),
            ("s17.backups_per_site", self.s17.backups_per_site),
            ("s17.detection_window_s", self.s17.detection_window_s),
        )
        for name, value in checks:
            if value < 0:
                raise InvalidScenario(f"{name} must be non-negative, got {value}")

    def with_enabled(self, sections: frozenset[str] | set[str]) -> "ControlLayerConfig":
        """Copy of this config with exactly the given layers switched on."""
        return ControlLayerConfig(
            s9=replace(self.s9, enabled="S9" in sections),
            s10=replace(self.s10, enabled="S10" in sections),
            s17=replace(self.s17, enabled="S17" in sections),
        )

    def all_disabled(self) -> "ControlLayerConfig":
        return self.with_enabled(frozenset())

    @property
    def enabled_sections(self) -> frozenset[str]:
        out = set()
        if self.s9.enabled:
            out.add("S9")
        if self.s10.enabled:
            out.add("S10")
        if self.s17.enabled:
            out.add("S17")
        return frozenset(out)

    def to_dict(self) -> dict:
        return {
            "s9": {
                "enabled": self.s9.enabled,
                "per_session_latency_ms": self.s9.per_session_latency_ms,
                "credential_store": dict(self.s9.credential_store),
                "review_period_days": self.s9.review_period_days,
            },
            "s10": {
                "enabled": self.s10.enabled,
                "per_message_latency_ms": self.s10.per_message_latency_ms,
                "overhead_bytes": self.s10.overhead_bytes,
                "key_ids": dict(self.s10.key_ids),
            },
            "s17": {
                "enabled": self.s17.enabled,
                "backups_per_site": self.s17.backups_per_site,
                "detection_window_s": self.s17.detection_window_s,
            },
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "ControlLayerConfig":
        s9 = data.get("s9", {})
        s10 = data.get("s10", {})
        s17 = data.get("s17", {})
        return cls(
            s9=S9Config(
                enabled=bool(s9.get("enabled", False)),
                per_session_latency_ms=int(s9.get("per_session_latency_ms", 20)),
                credential_store=dict(s9.get("credential_store", {})),
                review_period_days=int(s9.get("review_period_days", 30)),
            ),
            s10=S10Config(
                enabled=bool(s10.get("enabled", False)),
                per_message_latency_ms=int(s10.get("per_message_latency_ms", 5)),
                overhead_bytes=int(s10.get("overhead_bytes", 64)),
                key_ids=dict(s10.get("key_ids", {})),
            ),
            s17=S17Config(
                enabled=bool(s17.get("enabled", False)),
                backups_per_site=int(s17.get("backups_per_site", 1)),
                detection_window_s=int(s17.get("detection_window_s", 60)),
            ),
        )


@dataclass(frozen=True)
class Envelope:
    """Key-gated payload opacity.

    The sealed payload rides along inside the simulation but is only
    readable through unwrap() with the matching key id; serialized forms
    carry the marker and sizes, never the payload.
    """

    key_id: str
    ciphertext_marker: str
    inner_size: int
    sealed: bytes = field(repr=False)

    def wire_fields(self) -> dict:
        return {
            "key_id": self.key_id,
            "marker": self.ciphertext_marker,
            "inner_size": self.inner_size,
        }


@dataclass(frozen=True)
class Session:
    user: str
    device: str
    established_at: int
    authenticated: bool


@dataclass(frozen=True)
class TapObservation:
    msg_id: int
    time: int
    visibility: str  # "Plaintext" or "Opaque"
    observed_bytes: int


def authenticate(
    user: str, credential: str, device: str, config: ControlLayerConfig, at: int = 0
) -> Session:
    """Check a credential against the store; only called with S9 enabled."""
    if not config.s9.enabled:
        raise InvalidScenario("authenticate() requires the S9 layer to be enabled")
    store = config.s9.credential_store
    if user not in store:
        raise UnknownUser(f"no credentials on file for user {user!r}")
    if store[user] != credential:
        raise AuthDenied(f"credential mismatch for user {user!r} at {device!r}")
    return Session(user=user, device=device, established_at=at, authenticated=True)


def wrap(
    payload: bytes, key_id: str | None, config: ControlLayerConfig, msg_id: int = 0
) -> Envelope:
    """Seal a payload under the sender's key id."""
    if not config.s10.enabled:
        raise InvalidScenario("wrap() requires the S10 layer to be enabled")
    if not key_id:
        raise MissingKey("sender holds no key id")
    return Envelope(
        key_id=key_id,
        ciphertext_marker=f"ct:{key_id}:{msg_id}",
        inner_size=len(payload),
        sealed=bytes(payload),
    )


def unwrap(envelope: Envelope, key_id: str) -> bytes:
    if key_id != envelope.key_id:
        raise MissingKey(
            f"key {key_id!r} does not open an envelope sealed under {envelope.key_id!r}"
        )
    return envelope.sealed


def tap(link_id: str, world: "World") -> list[TapObservation]:
    """What a wiretap on one link sees: every message whose path crosses it.

    Unwrapped traffic is Plaintext (payload readable); enveloped traffic is
    Opaque (marker and sizes only).
    """
    if link_id not in world.links:
        raise UnknownLink(f"unknown link {link_id!r}")
    observations = []
    for record in world.trace.records:
        if record["kind"] != "sent" or link_id not in record["path"]:
            continue
        observations.append(
            TapObservation(
                msg_id=record["msg_id"],
                time=record["time"],
                visibility="Opaque" if record["wrapped"] else "Plaintext",
                observed_bytes=record["wire_bytes"],
            )
        )
    return observations


def failover(world: "World", failed: str, config: ControlLayerConfig) -> str | None:
    """Switch delivery for a failed node to the first healthy spare.

    Returns the substitute's node id, or None when the pool is exhausted
    (pending messages are then recorded as Lost). Inside a run the engine
    invokes this automatically one detection window after a failure starts.
    """
    if not config.s17.enabled:
        raise InvalidScenario("failover() requires the S17 layer to be enabled")
    return world.activate_failover(failed)
