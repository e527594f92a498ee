"""Southbound delivery: typed messages, simulated device agents, 2-phase install.

One structured message schema stands in for the real per-technology protocols:
OpticalConnectionRequest abstracts the optical controller's provisioning call,
MacsecChannelConfig a switch configuration session, GreIpsecTunnelConfig a host
tunnel setup, FlowRule a flow-mod. Agents are sequential actors over an
injectable transport; the serializing transport pushes every message through
the wire schema and records it to a replayable log.

Install is strictly two-phase: PREPARE everywhere, then COMMIT only if every
device acknowledged, otherwise ABORT whatever was staged. Partial
configurations are therefore impossible, which the end-to-end encryption
coverage property depends on.
"""

from __future__ import annotations

import json
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .compiler import (
    OP_FLOW_RULE,
    OP_GRE_IPSEC_TUNNEL,
    OP_MACSEC_CHANNEL,
    OP_OPTICAL_CONNECTION,
    NetworkOperation,
    ServiceRecord,
)
from .errors import UnknownSite
from .topology import (
    LayerId,
    LinkKind,
    LinkState,
    Mechanism,
    MultiLayerTopology,
    Node,
    NodeKind,
)

logger = logging.getLogger(__name__)

VERBS = ("PREPARE", "COMMIT", "ABORT", "REMOVE", "QUERY")

DEFAULT_TIMEOUT_S = 2.0


@dataclass(frozen=True)
class SouthboundMessage:
    message_id: str
    device_id: str
    verb: str
    payload: Optional[dict] = None  # {"kind": ..., "params": {...}}

    def to_document(self) -> dict:
        doc: dict = {
            "messageId": self.message_id,
            "deviceId": self.device_id,
            "verb": self.verb,
        }
        if self.payload is not None:
            doc["payload"] = self.payload
        return doc

    @classmethod
    def from_document(cls, doc: dict) -> "SouthboundMessage":
        return cls(
            message_id=doc["messageId"],
            device_id=doc["deviceId"],
            verb=doc["verb"],
            payload=doc.get("payload"),
        )


@dataclass(frozen=True)
class Ack:
    message_id: str
    device_id: str
    ok: bool
    reason: str = ""
    snapshot: Optional[dict] = None  # QUERY responses only

    def to_document(self) -> dict:
        doc: dict = {
            "messageId": self.message_id,
            "deviceId": self.device_id,
            "ok": self.ok,
            "reason": self.reason,
        }
        if self.snapshot is not None:
            doc["snapshot"] = self.snapshot
        return doc

    @classmethod
    def from_document(cls, doc: dict) -> "Ack":
        return cls(
            message_id=doc["messageId"],
            device_id=doc["deviceId"],
            ok=doc["ok"],
            reason=doc.get("reason", ""),
            snapshot=doc.get("snapshot"),
        )


@dataclass
class DeviceState:
    device_id: str
    applied_configs: dict[str, dict] = field(default_factory=dict)
    pending_configs: dict[str, dict] = field(default_factory=dict)
    up: bool = True

    def forwarding_table(self) -> list[dict]:
        return derive_forwarding(self)

    def to_document(self) -> dict:
        return {
            "deviceId": self.device_id,
            "up": self.up,
            "appliedConfigs": {k: self.applied_configs[k] for k in sorted(self.applied_configs)},
            "pendingConfigs": {k: self.pending_configs[k] for k in sorted(self.pending_configs)},
            "forwardingTable": self.forwarding_table(),
        }

    def clone(self) -> "DeviceState":
        return DeviceState(
            device_id=self.device_id,
            applied_configs={k: dict(v) for k, v in self.applied_configs.items()},
            pending_configs={k: dict(v) for k, v in self.pending_configs.items()},
            up=self.up,
        )


def derive_forwarding(state: DeviceState) -> list[dict]:
    """Deterministic forwarding view of a device's applied configuration."""
    entries: list[dict] = []
    for message_id in sorted(state.applied_configs):
        payload = state.applied_configs[message_id]
        kind = payload.get("kind")
        params = payload.get("params", {})
        if kind == OP_FLOW_RULE:
            entries.append(
                {
                    "match": params.get("matchFields", {}),
                    "action": {"outputPort": params.get("outputPort")},
                    "priority": params.get("priority", 0),
                    "source": message_id,
                }
            )
        elif kind == OP_OPTICAL_CONNECTION:
            entries.append(
                {
                    "match": {"port": "client"},
                    "action": {
                        "lightpathTo": params.get("peerTransponderId"),
                        "roadmPath": params.get("roadmPath", []),
                        "wavelengthIndex": params.get("wavelengthIndex"),
                    },
                    "priority": 0,
                    "source": message_id,
                }
            )
    entries.sort(key=lambda e: (-e["priority"], e["source"]))
    return entries


def agent_handle(
    state: DeviceState, message: SouthboundMessage, node: Node
) -> tuple[DeviceState, Ack]:
    """Pure message handler: maps (state, message) to (new state, ack).

    PREPARE validates against the device's static capabilities and stages the
    payload; COMMIT applies; ABORT discards; REMOVE deletes applied entries;
    QUERY snapshots. Rejections never mutate state.
    """

    def reject(reason: str) -> tuple[DeviceState, Ack]:
        return state, Ack(message.message_id, state.device_id, False, reason)

    def ok(snapshot: Optional[dict] = None) -> Ack:
        return Ack(message.message_id, state.device_id, True, "", snapshot)

    if message.verb == "QUERY":
        return state, ok(snapshot=state.to_document())

    if message.verb == "PREPARE":
        if message.payload is None:
            return reject("PREPARE without payload")
        if (
            message.message_id in state.pending_configs
            or message.message_id in state.applied_configs
        ):
            return reject(f"duplicate messageId {message.message_id}")
        problem = _validate_payload(node, state, message.payload)
        if problem is not None:
            return reject(problem)
        new_state = state.clone()
        new_state.pending_configs[message.message_id] = message.payload
        return new_state, ok()

    if message.verb == "COMMIT":
        if message.message_id not in state.pending_configs:
            return reject(f"unknown messageId {message.message_id}")
        new_state = state.clone()
        new_state.applied_configs[message.message_id] = new_state.pending_configs.pop(
            message.message_id
        )
        return new_state, ok()

    if message.verb == "ABORT":
        new_state = state.clone()
        new_state.pending_configs.pop(message.message_id, None)
        return new_state, ok()

    if message.verb == "REMOVE":
        new_state = state.clone()
        new_state.applied_configs.pop(message.message_id, None)
        new_state.pending_configs.pop(message.message_id, None)
        return new_state, ok()

    return reject(f"unknown verb {message.verb}")


def _validate_payload(node: Node, state: DeviceState, payload: dict) -> Optional[str]:
    kind = payload.get("kind")
    params = payload.get("params", {})
    if kind == OP_OPTICAL_CONNECTION:
        if node.kind is not NodeKind.TRANSPONDER:
            return f"{node.kind.value} cannot terminate an optical connection"
        if params.get("encryptionFlag"):
            bits = [
                c.key_length_bits
                for c in node.capabilities
                if c.mechanism is Mechanism.OTN_AES
            ]
            if not bits:
                return "no OTN_AES capability"
            if params.get("keyLengthBits", 0) > max(bits):
                return f"key length {params.get('keyLengthBits')} beyond capability"
        return _check_wavelength_clash(state, params)
    if kind == OP_MACSEC_CHANNEL:
        if node.kind is not NodeKind.ETH_SWITCH:
            return f"{node.kind.value} cannot terminate a MACsec channel"
        bits = [c.key_length_bits for c in node.capabilities if c.mechanism is Mechanism.MACSEC]
        if not bits:
            return "no MACSEC capability"
        if params.get("keyLengthBits", 0) > max(bits):
            return f"key length {params.get('keyLengthBits')} beyond capability"
        return None
    if kind == OP_GRE_IPSEC_TUNNEL:
        if node.kind is not NodeKind.IP_HOST:
            return f"{node.kind.value} cannot terminate a GRE/IPsec tunnel"
        bits = [
            c.key_length_bits for c in node.capabilities if c.mechanism is Mechanism.IPSEC_GRE
        ]
        if not bits:
            return "no IPSEC_GRE capability"
        if params.get("keyLengthBits", 0) > max(bits):
            return f"key length {params.get('keyLengthBits')} beyond capability"
        return None
    if kind == OP_FLOW_RULE:
        return None
    return f"unknown operation kind {kind}"


def _check_wavelength_clash(state: DeviceState, params: dict) -> Optional[str]:
    """Same wavelength on overlapping fibers at one line port is a clash.

    Identical connections are accepted: config assertion is idempotent so
    groomed services can re-assert the lightpath they share.
    """
    new_index = params.get("wavelengthIndex")
    new_fibers = set(params.get("roadmPath", []))
    for existing in list(state.applied_configs.values()) + list(state.pending_configs.values()):
        if existing.get("kind") != OP_OPTICAL_CONNECTION:
            continue
        other = existing.get("params", {})
        if other.get("wavelengthIndex") != new_index:
            continue
        same_connection = (
            other.get("peerTransponderId") == params.get("peerTransponderId")
            and other.get("roadmPath") == params.get("roadmPath")
            and other.get("encryptionFlag") == params.get("encryptionFlag")
        )
        if same_connection:
            return None
        if new_fibers & set(other.get("roadmPath", [])):
            return f"wavelength {new_index} clash on line port"
    return None


class DeviceAgent:
    """Sequential actor wrapping the pure handler with fault-injection hooks."""

    def __init__(self, node: Node):
        self.node = node
        self.state = DeviceState(device_id=node.id)
        self.reject_prepare = False
        self.drop_commit = False
        self._lock = threading.Lock()

    def handle(self, message: SouthboundMessage) -> Optional[Ack]:
        """Returns the ack, or None when the device is down / drops the message."""
        with self._lock:
            if not self.state.up:
                return None
            if message.verb == "PREPARE" and self.reject_prepare:
                return Ack(message.message_id, self.node.id, False, "injected PREPARE rejection")
            if message.verb == "COMMIT" and self.drop_commit:
                return None
            self.state, ack = agent_handle(self.state, message, self.node)
            return ack


class AgentRegistry:
    """One agent per topology node (ROADMs included; they just see QUERYs)."""

    def __init__(self, topology: MultiLayerTopology):
        self.topology = topology
        self.agents = {node_id: DeviceAgent(node) for node_id, node in topology.nodes.items()}

    def agent(self, device_id: str) -> DeviceAgent:
        return self.agents[device_id]

    def apply_fault_config(self, config: dict[str, str]) -> None:
        """Environment-style fixtures: REJECT_PREPARE / DROP_COMMIT name devices."""
        for device_id in _split(config.get("REJECT_PREPARE", "")):
            self.agents[device_id].reject_prepare = True
        for device_id in _split(config.get("DROP_COMMIT", "")):
            self.agents[device_id].drop_commit = True

    def clear_faults(self) -> None:
        for agent in self.agents.values():
            agent.reject_prepare = False
            agent.drop_commit = False


def _split(raw: str) -> list[str]:
    return [part.strip() for part in raw.split(",") if part.strip()]


class MessageLog:
    """Append-only line log of every message and ack crossing the transport."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def append(self, direction: str, document: dict) -> None:
        line = json.dumps({"dir": direction, "body": document}, sort_keys=True)
        with self._lock, self.path.open("a") as handle:
            handle.write(line + "\n")

    def read_messages(self) -> list[SouthboundMessage]:
        if not self.path.exists():
            return []
        messages = []
        for line in self.path.read_text().splitlines():
            entry = json.loads(line)
            if entry["dir"] == "send":
                messages.append(SouthboundMessage.from_document(entry["body"]))
        return messages


class DirectTransport:
    """In-process delivery of message objects; the test-suite default."""

    def __init__(self, registry: AgentRegistry):
        self.registry = registry

    def send(self, message: SouthboundMessage) -> Optional[Ack]:
        return self.registry.agent(message.device_id).handle(message)


class SerializedTransport:
    """Round-trips every message and ack through the wire schema, logging both.

    This is the running service's transport: agents only ever see what
    survives serialization, so schema drift fails loudly, and the log can be
    replayed against fresh agents.
    """

    def __init__(self, registry: AgentRegistry, log: Optional[MessageLog] = None):
        self.registry = registry
        self.log = log

    def send(self, message: SouthboundMessage) -> Optional[Ack]:
        wire = json.loads(json.dumps(message.to_document()))
        if self.log is not None:
            self.log.append("send", wire)
        ack = self.registry.agent(wire["deviceId"]).handle(
            SouthboundMessage.from_document(wire)
        )
        if ack is None:
            return None
        ack_wire = json.loads(json.dumps(ack.to_document()))
        if self.log is not None:
            self.log.append("ack", ack_wire)
        return Ack.from_document(ack_wire)


@dataclass
class DeviceOutcome:
    device_id: str
    message_id: str
    verb: str
    ok: bool
    reason: str = ""

    def to_document(self) -> dict:
        return {
            "deviceId": self.device_id,
            "messageId": self.message_id,
            "verb": self.verb,
            "ok": self.ok,
            "reason": self.reason,
        }


@dataclass
class InstallReport:
    service_id: str
    committed: bool
    outcomes: list[DeviceOutcome]
    message_ids: list[str]  # aligned with the operation list when committed
    failed_device: Optional[str] = None
    failure_reason: str = ""

    def to_document(self) -> dict:
        return {
            "serviceId": self.service_id,
            "committed": self.committed,
            "outcomes": [o.to_document() for o in self.outcomes],
            "messageIds": list(self.message_ids),
            "failedDevice": self.failed_device,
            "failureReason": self.failure_reason,
        }


class Installer:
    """Two-phase installer fanning out to device agents over a transport."""

    def __init__(self, transport, timeout_s: float = DEFAULT_TIMEOUT_S, max_workers: int = 16):
        self.transport = transport
        self.timeout_s = timeout_s
        self._pool = ThreadPoolExecutor(max_workers=max_workers, thread_name_prefix="southbound")
        self._attempts: dict[str, int] = {}

    def close(self) -> None:
        self._pool.shutdown(wait=False, cancel_futures=True)

    # -- message helpers -----------------------------------------------------

    def _send_many(
        self, messages: list[SouthboundMessage]
    ) -> dict[str, Optional[Ack]]:
        """Send concurrently per device, in order within a device; join all."""
        per_device: dict[str, list[SouthboundMessage]] = {}
        for message in messages:
            per_device.setdefault(message.device_id, []).append(message)

        def run(batch: list[SouthboundMessage]) -> list[tuple[str, Optional[Ack]]]:
            results = []
            for message in batch:
                results.append((message.message_id, self.transport.send(message)))
            return results

        acks: dict[str, Optional[Ack]] = {}
        futures = {self._pool.submit(run, batch): device for device, batch in per_device.items()}
        for future, device in futures.items():
            try:
                for message_id, ack in future.result(timeout=self.timeout_s):
                    acks[message_id] = ack
            except Exception:  # timeout or transport fault: treat as no ack
                for message in per_device[device]:
                    acks.setdefault(message.message_id, None)
        return acks

    def install(self, operations: list[NetworkOperation], service_id: str) -> InstallReport:
        """PREPARE everywhere; COMMIT only if all acked; otherwise ABORT staged.

        The report names the first refusing/unresponsive device. An empty
        operation list succeeds without touching the transport.
        """
        if not operations:
            return InstallReport(service_id, True, [], [])

        attempt = self._attempts.get(service_id, 0) + 1
        self._attempts[service_id] = attempt
        messages = [
            SouthboundMessage(
                message_id=f"{service_id}.{attempt}.{index}",
                device_id=op.device_id,
                verb="PREPARE",
                payload={"kind": op.kind, "params": op.params},
            )
            for index, op in enumerate(operations)
        ]

        outcomes: list[DeviceOutcome] = []
        prepare_acks = self._send_many(messages)
        staged: list[SouthboundMessage] = []
        failed: Optional[tuple[str, str]] = None
        for message in messages:
            ack = prepare_acks.get(message.message_id)
            if ack is None:
                outcomes.append(
                    DeviceOutcome(message.device_id, message.message_id, "PREPARE", False,
                                  "no acknowledgment within timeout")
                )
                failed = failed or (message.device_id, "prepare timeout")
            elif not ack.ok:
                outcomes.append(
                    DeviceOutcome(message.device_id, message.message_id, "PREPARE", False, ack.reason)
                )
                failed = failed or (message.device_id, ack.reason)
            else:
                outcomes.append(
                    DeviceOutcome(message.device_id, message.message_id, "PREPARE", True)
                )
                staged.append(message)

        if failed is not None:
            aborts = [
                SouthboundMessage(m.message_id, m.device_id, "ABORT") for m in staged
            ]
            self._send_many(aborts)
            outcomes.extend(
                DeviceOutcome(m.device_id, m.message_id, "ABORT", True) for m in staged
            )
            return InstallReport(
                service_id, False, outcomes, [], failed_device=failed[0], failure_reason=failed[1]
            )

        commits = [SouthboundMessage(m.message_id, m.device_id, "COMMIT") for m in messages]
        commit_acks = self._send_many(commits)
        committed: list[SouthboundMessage] = []
        for message in messages:
            ack = commit_acks.get(message.message_id)
            if ack is not None and ack.ok:
                outcomes.append(
                    DeviceOutcome(message.device_id, message.message_id, "COMMIT", True)
                )
                committed.append(message)
            else:
                reason = "no acknowledgment within timeout" if ack is None else ack.reason
                outcomes.append(
                    DeviceOutcome(message.device_id, message.message_id, "COMMIT", False, reason)
                )
                failed = failed or (message.device_id, f"commit failed: {reason}")

        if failed is not None:
            # Roll back whatever went through so no partial config survives.
            cleanup = [
                SouthboundMessage(m.message_id, m.device_id, "REMOVE") for m in committed
            ] + [
                SouthboundMessage(m.message_id, m.device_id, "ABORT")
                for m in messages
                if m not in committed
            ]
            self._send_many(cleanup)
            return InstallReport(
                service_id, False, outcomes, [], failed_device=failed[0], failure_reason=failed[1]
            )

        return InstallReport(
            service_id, True, outcomes, [m.message_id for m in messages]
        )

    def remove(self, record: ServiceRecord) -> InstallReport:
        """REMOVE every message the record committed; idempotent and retriable."""
        outcomes: list[DeviceOutcome] = []
        pairs = list(zip(record.message_ids, record.solution.operations))
        messages = [
            SouthboundMessage(message_id, op.device_id, "REMOVE")
            for message_id, op in pairs
        ]
        acks = self._send_many(messages)
        all_ok = True
        for message in messages:
            ack = acks.get(message.message_id)
            if ack is None:
                outcomes.append(
                    DeviceOutcome(message.device_id, message.message_id, "REMOVE", False,
                                  "no acknowledgment within timeout")
                )
                all_ok = False
            else:
                outcomes.append(
                    DeviceOutcome(message.device_id, message.message_id, "REMOVE", ack.ok, ack.reason)
                )
                all_ok = all_ok and ack.ok
        return InstallReport(record.intent_id, all_ok, outcomes, [])

    def reinstall_committed(self, record: ServiceRecord) -> None:
        """Recovery path: push a recorded, already-committed config back onto
        fresh agents without a new two-phase round."""
        for message_id, op in zip(record.message_ids, record.solution.operations):
            payload = {"kind": op.kind, "params": op.params}
            self.transport.send(
                SouthboundMessage(message_id, op.device_id, "PREPARE", payload)
            )
            self.transport.send(SouthboundMessage(message_id, op.device_id, "COMMIT"))


# -- trace ----------------------------------------------------------------------


@dataclass
class TraceHop:
    device_id: str
    link_id: str
    encrypted_by: Optional[tuple[str, str]] = None  # (layer name, mechanism)

    def to_document(self) -> dict:
        return {
            "deviceId": self.device_id,
            "linkId": self.link_id,
            "encryptedBy": (
                {"layer": self.encrypted_by[0], "mechanism": self.encrypted_by[1]}
                if self.encrypted_by
                else None
            ),
        }


@dataclass
class TraceResult:
    hops: list[TraceHop]
    reached_destination: bool
    uncovered_links: list[str]

    def to_document(self) -> dict:
        return {
            "hops": [h.to_document() for h in self.hops],
            "reachedDestination": self.reached_destination,
            "uncoveredLinks": list(self.uncovered_links),
        }


def trace(
    src_site: str,
    dst_site: str,
    topology: MultiLayerTopology,
    registry: AgentRegistry,
) -> TraceResult:
    """Follow one unit of traffic from src to dst along installed forwarding.

    Each traversed link is annotated with the encryption coverage active on it
    (derived from applied configs whose endpoint pair spans that part of the
    walk). An unreachable destination is a result, not an error.
    """
    for site in (src_site, dst_site):
        if site not in topology.sites:
            raise UnknownSite(site)

    start = _site_terminal(topology, src_site)
    walk: list[tuple[str, str]] = []  # (device we leave, link we take)
    current = start
    arrived_via_line = False
    reached = False
    budget = 4 * len(topology.links) + 4

    while budget > 0:
        budget -= 1
        node = topology.node(current)
        if current in topology.sites.get(dst_site, set()):
            reached = True
            break
        state = registry.agent(current).state

        if node.kind is NodeKind.TRANSPONDER and not arrived_via_line:
            connection = _select_optical(state, topology, dst_site)
            if connection is None:
                break
            segment = _lightpath_links(topology, current, connection)
            if segment is None:
                break
            ok = True
            for device_id, link_id in segment:
                link = topology.link(link_id)
                if link.state is not LinkState.UP:
                    ok = False
                    break
                walk.append((device_id, link_id))
            if not ok:
                break
            current = connection["peerTransponderId"]
            arrived_via_line = True
            continue

        if node.kind is NodeKind.TRANSPONDER and arrived_via_line:
            client = _first_up_link(topology, current, LinkKind.TRANSITIONAL)
            if client is None:
                break
            walk.append((current, client.id))
            current = client.other(current)
            arrived_via_line = False
            continue

        out_port = _flow_lookup(state, dst_site)
        if out_port is None or out_port not in topology.links:
            break
        link = topology.link(out_port)
        if link.state is not LinkState.UP or current not in link.endpoints:
            break
        walk.append((current, out_port))
        current = link.other(current)
        arrived_via_line = False

    device_sequence = [device for device, _ in walk] + [current]
    coverage = _coverage(topology, registry, walk, device_sequence)
    hops = [
        TraceHop(device, link_id, coverage.get(index))
        for index, (device, link_id) in enumerate(walk)
    ]
    uncovered = [h.link_id for h in hops if h.encrypted_by is None]
    return TraceResult(hops=hops, reached_destination=reached, uncovered_links=uncovered)


def _site_terminal(topology: MultiLayerTopology, site_id: str) -> str:
    members = sorted(topology.sites[site_id], key=lambda n: (-topology.node(n).layer, n))
    return members[0]


def _select_optical(
    state: DeviceState, topology: MultiLayerTopology, dst_site: str
) -> Optional[dict]:
    """Pick the applied optical channel leading toward the destination.

    A transponder may terminate several lightpaths; the client-port mapping
    that steers traffic into the right one is modeled by preferring the
    connection whose peer transponder serves the destination site.
    """
    candidates = [
        state.applied_configs[message_id].get("params", {})
        for message_id in sorted(state.applied_configs)
        if state.applied_configs[message_id].get("kind") == OP_OPTICAL_CONNECTION
    ]
    if not candidates:
        return None
    for params in candidates:
        peer = params.get("peerTransponderId")
        if peer in topology.nodes and _serves_site(topology, peer, dst_site):
            return params
    return candidates[0]


def _serves_site(topology: MultiLayerTopology, transponder: str, site_id: str) -> bool:
    """True when the site hangs off this transponder's client side."""
    members = topology.sites.get(site_id, set())
    frontier = [transponder]
    seen = {transponder}
    while frontier:
        node_id = frontier.pop()
        if node_id in members:
            return True
        for link in topology.links_of(node_id):
            if link.kind is not LinkKind.TRANSITIONAL or link.state is not LinkState.UP:
                continue
            neighbor = link.other(node_id)
            if neighbor not in seen:
                seen.add(neighbor)
                frontier.append(neighbor)
    return False


def _lightpath_links(
    topology: MultiLayerTopology, transponder: str, params: dict
) -> Optional[list[tuple[str, str]]]:
    """Expand an optical connection into (device, link) steps to its peer."""
    attach = _first_up_link(topology, transponder, LinkKind.CLIENT_ATTACH)
    peer = params.get("peerTransponderId")
    if attach is None or peer is None or peer not in topology.nodes:
        return None
    peer_attach = _first_up_link(topology, peer, LinkKind.CLIENT_ATTACH)
    if peer_attach is None:
        return None
    steps = [(transponder, attach.id)]
    roadm = attach.other(transponder)
    for fiber_id in params.get("roadmPath", []):
        if fiber_id not in topology.links:
            return None
        fiber = topology.link(fiber_id)
        if roadm not in fiber.endpoints:
            return None
        steps.append((roadm, fiber_id))
        roadm = fiber.other(roadm)
    if peer_attach.other(peer) != roadm:
        return None
    steps.append((roadm, peer_attach.id))
    return steps


def _first_up_link(topology, node_id: str, kind: LinkKind):
    for link in topology.links_of(node_id):
        if link.kind is kind and link.state is LinkState.UP:
            return link
    return None


def _flow_lookup(state: DeviceState, dst_site: str) -> Optional[str]:
    candidates = []
    for entry in derive_forwarding(state):
        match = entry.get("match", {})
        if match.get("dstSite") == dst_site and "outputPort" in entry.get("action", {}):
            candidates.append((-(entry.get("priority", 0)), entry["source"], entry))
    if not candidates:
        return None
    return min(candidates)[2]["action"]["outputPort"]


def _coverage(
    topology: MultiLayerTopology,
    registry: AgentRegistry,
    walk: list[tuple[str, str]],
    device_sequence: list[str],
) -> dict[int, tuple[str, str]]:
    """Map hop index -> (layer, mechanism) for encryption spanning that hop."""
    coverage: dict[int, tuple[str, str]] = {}
    position = {device: index for index, device in enumerate(device_sequence)}

    def cover(a: str, b: str, layer: LayerId, mechanism: Mechanism) -> None:
        if a not in position or b not in position:
            return
        low, high = sorted((position[a], position[b]))
        for index in range(low, high):
            current = coverage.get(index)
            if current is None or LayerId[current[0]] > layer:
                coverage[index] = (layer.name, mechanism.value)

    seen_pairs: set[tuple[str, str, str]] = set()
    for device in device_sequence:
        if device not in registry.agents:
            continue
        state = registry.agent(device).state
        for message_id in sorted(state.applied_configs):
            payload = state.applied_configs[message_id]
            kind = payload.get("kind")
            params = payload.get("params", {})
            if kind == OP_OPTICAL_CONNECTION and params.get("encryptionFlag"):
                peer, key = params.get("peerTransponderId"), params.get("keyId", "")
            elif kind == OP_MACSEC_CHANNEL:
                peer, key = params.get("peerSwitchId"), params.get("keyId", "")
            elif kind == OP_GRE_IPSEC_TUNNEL:
                peer, key = _peer_host(topology, params), params.get("keyId", "")
            else:
                continue
            if peer is None:
                continue
            pair_key = (min(device, peer), max(device, peer), key)
            if pair_key in seen_pairs:
                continue
            if _reciprocal_applied(registry, peer, device, kind, key):
                seen_pairs.add(pair_key)
                layer = {
                    OP_OPTICAL_CONNECTION: LayerId.L0_OPTICAL,
                    OP_MACSEC_CHANNEL: LayerId.L2_ETHERNET,
                    OP_GRE_IPSEC_TUNNEL: LayerId.L3_IP,
                }[kind]
                mechanism = {
                    OP_OPTICAL_CONNECTION: Mechanism.OTN_AES,
                    OP_MACSEC_CHANNEL: Mechanism.MACSEC,
                    OP_GRE_IPSEC_TUNNEL: Mechanism.IPSEC_GRE,
                }[kind]
                cover(device, peer, layer, mechanism)
    return coverage


def _peer_host(topology: MultiLayerTopology, params: dict) -> Optional[str]:
    # Tunnel addresses are assigned by sorted host order; invert that mapping.
    remote = params.get("remoteAddr")
    hosts = sorted(n.id for n in topology.nodes.values() if n.kind is NodeKind.IP_HOST)
    for index, host in enumerate(hosts):
        if f"10.0.0.{index + 1}" == remote:
            return host
    return None


def _reciprocal_applied(
    registry: AgentRegistry, peer: str, device: str, kind: str, key: str
) -> bool:
    if peer not in registry.agents:
        return False
    for payload in registry.agent(peer).state.applied_configs.values():
        if payload.get("kind") != kind:
            continue
        if payload.get("params", {}).get("keyId", "") == key:
            return True
    return False
