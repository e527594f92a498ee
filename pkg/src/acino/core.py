"""Orchestrator core: one serialized authority over intents, ledger and devices.

Every externally visible state change happens inside ``execute`` under the
core mutex, giving observers a total order (the event-log sequence). The log
is write-ahead with respect to southbound effects: the decision to install is
durable before any device sees a message, so a restart replays the log and
re-drives whatever was caught mid-flight.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import compiler as compiler_mod
from .compiler import ResourceLedger, ServiceRecord, compile_aci
from .errors import (
    InstallFailed,
    OrchestratorError,
    SchemaError,
    StartupError,
    UnknownIntent,
    UnresolvableSite,
)
from .intents import (
    ComplianceProfileTable,
    Intent,
    IntentState,
    to_aci,
    transition,
    validate_intent,
)
from .southbound import (
    AgentRegistry,
    Installer,
    MessageLog,
    SerializedTransport,
    trace,
)
from .topology import (
    MultiLayerTopology,
    TopologyEvent,
    apply_event,
    load_topology_path,
    serialize_topology,
)

logger = logging.getLogger(__name__)

LOG_KIND_SUBMITTED = "INTENT_SUBMITTED"
LOG_KIND_STATE = "STATE_CHANGED"
LOG_KIND_RESERVED = "RESERVED"
LOG_KIND_RELEASED = "RELEASED"
LOG_KIND_INSTALL = "INSTALL_REPORT"
LOG_KIND_TOPOLOGY = "TOPOLOGY_EVENT"

_LOG_KINDS = (
    LOG_KIND_SUBMITTED,
    LOG_KIND_STATE,
    LOG_KIND_RESERVED,
    LOG_KIND_RELEASED,
    LOG_KIND_INSTALL,
    LOG_KIND_TOPOLOGY,
)


@dataclass(frozen=True)
class CoreCommand:
    kind: str  # SUBMIT_INTENT | WITHDRAW_INTENT | INJECT_EVENT | QUERY | EXPLAIN
    payload: dict
    sequence: int = 0


@dataclass(frozen=True)
class EventLogEntry:
    sequence: int
    timestamp: float
    kind: str
    payload: dict

    def to_line(self) -> str:
        return json.dumps(
            {
                "sequence": self.sequence,
                "timestamp": self.timestamp,
                "kind": self.kind,
                "payload": self.payload,
            },
            sort_keys=True,
        )


class EventLog:
    """Append-only, per-entry-flushed JSON-lines log."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._handle = self.path.open("a")
        self._sequence = 0

    def seed_sequence(self, sequence: int) -> None:
        self._sequence = sequence

    def append(self, kind: str, payload: dict) -> EventLogEntry:
        self._sequence += 1
        entry = EventLogEntry(self._sequence, time.time(), kind, payload)
        self._handle.write(entry.to_line() + "\n")
        self._handle.flush()
        return entry

    def close(self) -> None:
        self._handle.close()

    @staticmethod
    def read(path: str | Path) -> list[EventLogEntry]:
        entries: list[EventLogEntry] = []
        log_path = Path(path)
        if not log_path.exists():
            return entries
        last_sequence = 0
        for line_number, line in enumerate(log_path.read_text().splitlines(), start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
                entry = EventLogEntry(
                    sequence=raw["sequence"],
                    timestamp=raw["timestamp"],
                    kind=raw["kind"],
                    payload=raw["payload"],
                )
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise StartupError(f"{log_path}:{line_number}: corrupt log line ({exc})") from exc
            if entry.kind not in _LOG_KINDS:
                raise StartupError(f"{log_path}:{line_number}: unknown entry kind {entry.kind}")
            if entry.sequence <= last_sequence:
                raise StartupError(
                    f"{log_path}:{line_number}: sequence {entry.sequence} not increasing"
                )
            last_sequence = entry.sequence
            entries.append(entry)
        return entries


@dataclass
class OrchestratorConfig:
    topology_path: str
    log_path: str
    compliance_path: Optional[str] = None
    southbound_log_path: Optional[str] = None
    install_timeout_s: float = 2.0
    port: int = 8088
    fault_config: dict[str, str] = field(default_factory=dict)

    @classmethod
    def from_file(cls, path: str | Path) -> "OrchestratorConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise StartupError(f"config file {path}: {exc}") from exc
        return cls(
            topology_path=raw.get("topology", "topologies/acino-ring.json"),
            log_path=raw.get("log", "logs/events.log"),
            compliance_path=raw.get("compliance"),
            southbound_log_path=raw.get("southboundLog"),
            install_timeout_s=raw.get("installTimeoutS", 2.0),
            port=raw.get("port", 8088),
        )


class Orchestrator:
    """The running service behind the API: loads state, replays, serves commands."""

    def __init__(self, config: OrchestratorConfig):
        self.config = config
        try:
            self.topology: MultiLayerTopology = load_topology_path(config.topology_path)
        except (OSError, OrchestratorError) as exc:
            raise StartupError(f"topology file {config.topology_path}: {exc}") from exc
        if config.compliance_path:
            try:
                self.profiles = ComplianceProfileTable.from_path(config.compliance_path)
            except (OSError, OrchestratorError) as exc:
                raise StartupError(
                    f"compliance file {config.compliance_path}: {exc}"
                ) from exc
        else:
            self.profiles = ComplianceProfileTable.default()

        self.ledger = ResourceLedger(self.topology)
        self.registry = AgentRegistry(self.topology)
        fault_config = dict(config.fault_config)
        for key in ("REJECT_PREPARE", "DROP_COMMIT"):
            if key in os.environ and key not in fault_config:
                fault_config[key] = os.environ[key]
        self.registry.apply_fault_config(fault_config)

        southbound_log = None
        if config.southbound_log_path:
            southbound_log = MessageLog(config.southbound_log_path)
        self.transport = SerializedTransport(self.registry, southbound_log)
        self.installer = Installer(self.transport, timeout_s=config.install_timeout_s)

        self.intents: dict[str, Intent] = {}
        self._intent_seq = 0
        self._command_seq = 0
        self._lock = threading.RLock()

        replayed = EventLog.read(config.log_path)
        self.log = EventLog(config.log_path)
        if replayed:
            self._replay(replayed)
            self.log.seed_sequence(replayed[-1].sequence)
            self._recover_in_flight()

    def close(self) -> None:
        self.installer.close()
        self.log.close()

    # -- command entry points --------------------------------------------------

    def execute(self, command: CoreCommand) -> dict:
        with self._lock:
            self._command_seq += 1
            command = CoreCommand(command.kind, command.payload, self._command_seq)
            if command.kind == "SUBMIT_INTENT":
                return self._handle_submit(command.payload)
            if command.kind == "WITHDRAW_INTENT":
                return self._handle_withdraw(command.payload["id"])
            if command.kind == "INJECT_EVENT":
                return self._handle_event(command.payload)
            if command.kind == "EXPLAIN":
                return self._handle_explain(command.payload)
            if command.kind == "QUERY":
                return self._handle_query(command.payload)
            raise SchemaError(f"unknown command kind {command.kind}")

    def submit(self, request: dict) -> dict:
        return self.execute(CoreCommand("SUBMIT_INTENT", request))

    def withdraw(self, intent_id: str) -> dict:
        return self.execute(CoreCommand("WITHDRAW_INTENT", {"id": intent_id}))

    def inject_event(self, kind: str, link_id: str) -> dict:
        return self.execute(CoreCommand("INJECT_EVENT", {"kind": kind, "linkId": link_id}))

    def explain(self, request: dict) -> dict:
        return self.execute(CoreCommand("EXPLAIN", request))

    def query(self, kind: str, **params) -> dict:
        return self.execute(CoreCommand("QUERY", {"kind": kind, "params": params}))

    # -- handlers ----------------------------------------------------------------

    def _handle_submit(self, request: dict) -> dict:
        intent = validate_intent(request, self.topology, self._next_intent_id())
        self.intents[intent.id] = intent
        self.log.append(
            LOG_KIND_SUBMITTED, {"intentId": intent.id, "request": intent.request_document()}
        )
        self._transition(intent, IntentState.COMPILING, "compilation started")
        self._drive_install(intent)
        return self._intent_view(intent)

    def _drive_install(self, intent: Intent) -> None:
        """COMPILING/RECOMPILING -> INSTALLING -> INSTALLED, or FAILED with reason."""
        try:
            aci = to_aci(intent, self.topology)[0]
            solution = compile_aci(aci, self.topology, self.profiles, self.ledger)
            record = self.ledger.reserve(solution, intent.id, aci)
            self.log.append(
                LOG_KIND_RESERVED, {"intentId": intent.id, "record": record.to_document()}
            )
            if intent.state is not IntentState.INSTALLING:
                self._transition(intent, IntentState.INSTALLING, "reservation held")
            report = self.installer.install(solution.operations, intent.id)
            self.log.append(
                LOG_KIND_INSTALL, {"intentId": intent.id, "report": report.to_document()}
            )
            if not report.committed:
                raise InstallFailed(report.failed_device or "?", report.failure_reason)
            record.message_ids = list(report.message_ids)
            self._transition(intent, IntentState.INSTALLED, "service active")
        except OrchestratorError as exc:
            self._fail(intent, str(exc))

    def _fail(self, intent: Intent, reason: str) -> None:
        record = self.ledger.records.get(intent.id)
        if record is not None:
            self.ledger.release(record)
            self.log.append(LOG_KIND_RELEASED, {"intentId": intent.id})
        self._transition(intent, IntentState.FAILED, reason)

    def _handle_withdraw(self, intent_id: str) -> dict:
        intent = self.intents.get(intent_id)
        if intent is None:
            raise UnknownIntent(intent_id)
        self._transition(intent, IntentState.WITHDRAWING, "withdraw requested")
        record = self.ledger.records.get(intent_id)
        if record is not None:
            self.installer.remove(record)
            self.ledger.release(record)
            self.log.append(LOG_KIND_RELEASED, {"intentId": intent_id})
        self._transition(intent, IntentState.WITHDRAWN, "resources released")
        return self._intent_view(intent)

    def _handle_event(self, payload: dict) -> dict:
        event = TopologyEvent(kind=payload.get("kind", ""), link_id=payload.get("linkId", ""))
        _, affected = apply_event(self.topology, event, self.ledger)
        self.log.append(
            LOG_KIND_TOPOLOGY,
            {"kind": event.kind, "linkId": event.link_id, "revision": self.topology.revision},
        )
        results = []
        if event.kind == "LINK_DOWN":
            for intent_id in affected:  # already sorted by intent id
                intent = self.intents.get(intent_id)
                if intent is None or intent.state is not IntentState.INSTALLED:
                    continue
                self._transition(
                    intent, IntentState.RECOMPILING, f"link {event.link_id} went down"
                )
                self._recompile_installed(intent, event.link_id)
                results.append({"intentId": intent_id, "state": intent.state.value})
        return {
            "revision": self.topology.revision,
            "results": results,
        }

    def _recompile_installed(self, intent: Intent, link_id: str) -> None:
        old_record = self.ledger.records.get(intent.id)
        aci = old_record.aci if old_record else None
        if old_record is not None:
            self.installer.remove(old_record)
            self.ledger.release(old_record)
            self.log.append(LOG_KIND_RELEASED, {"intentId": intent.id})
        try:
            if aci is None:
                aci = to_aci(intent, self.topology)[0]
            solution = compile_aci(aci, self.topology, self.profiles, self.ledger)
            record = self.ledger.reserve(solution, intent.id, aci)
            self.log.append(
                LOG_KIND_RESERVED, {"intentId": intent.id, "record": record.to_document()}
            )
            self._transition(intent, IntentState.INSTALLING, "recompiled onto a new path")
            report = self.installer.install(solution.operations, intent.id)
            self.log.append(
                LOG_KIND_INSTALL, {"intentId": intent.id, "report": report.to_document()}
            )
            if not report.committed:
                raise InstallFailed(report.failed_device or "?", report.failure_reason)
            record.message_ids = list(report.message_ids)
            self._transition(intent, IntentState.INSTALLED, "failover complete")
        except OrchestratorError as exc:
            self._fail(intent, str(exc))

    def _handle_explain(self, request: dict) -> dict:
        probe = validate_intent(request, self.topology, intent_id="explain-probe")
        try:
            aci = to_aci(probe, self.topology)[0]
        except UnresolvableSite as exc:
            return {"intentId": None, "candidates": [], "notice": f"UnresolvableSite: {exc.site_id}"}
        report = compiler_mod.explain(aci, self.topology, self.profiles, self.ledger)
        report["intentId"] = None  # probe id is not a stored intent
        return report

    def _handle_query(self, payload: dict) -> dict:
        kind = payload.get("kind")
        params = payload.get("params", {})
        if kind == "intents":
            return {
                "intents": [
                    self._intent_view(self.intents[i]) for i in sorted(self.intents)
                ]
            }
        if kind == "intent":
            intent = self.intents.get(params["id"])
            if intent is None:
                raise UnknownIntent(params["id"])
            return self._intent_view(intent)
        if kind == "service":
            record = self.ledger.records.get(params["id"])
            if record is None:
                raise UnknownIntent(params["id"])
            return record.to_document()
        if kind == "topology":
            snapshot = serialize_topology(self.topology)
            snapshot["revision"] = self.topology.revision
            return snapshot
        if kind == "device":
            agent = self.registry.agents.get(params["id"])
            if agent is None:
                raise UnknownIntent(params["id"])
            return agent.state.to_document()
        if kind == "trace":
            result = trace(params["src"], params["dst"], self.topology, self.registry)
            return result.to_document()
        raise SchemaError(f"unknown query kind {kind}")

    # -- plumbing ------------------------------------------------------------------

    def _intent_view(self, intent: Intent) -> dict:
        return intent.to_document()

    def _next_intent_id(self) -> str:
        self._intent_seq += 1
        return f"i-{self._intent_seq:04d}"

    def _transition(self, intent: Intent, state: IntentState, reason: str) -> None:
        previous = intent.state
        transition(intent, state, reason)
        self.log.append(
            LOG_KIND_STATE,
            {
                "intentId": intent.id,
                "from": previous.value,
                "to": state.value,
                "reason": reason,
            },
        )

    # -- recovery --------------------------------------------------------------------

    def _replay(self, entries: list[EventLogEntry]) -> None:
        for entry in entries:
            try:
                self._replay_entry(entry)
            except OrchestratorError as exc:
                raise StartupError(
                    f"replay failed at sequence {entry.sequence}: {exc}"
                ) from exc

    def _replay_entry(self, entry: EventLogEntry) -> None:
        payload = entry.payload
        if entry.kind == LOG_KIND_SUBMITTED:
            intent = validate_intent(
                payload["request"], self.topology, payload["intentId"]
            )
            self.intents[intent.id] = intent
            numeric = intent.id.rsplit("-", 1)[-1]
            if numeric.isdigit():
                self._intent_seq = max(self._intent_seq, int(numeric))
        elif entry.kind == LOG_KIND_STATE:
            intent = self._replayed_intent(payload["intentId"], entry.sequence)
            transition(intent, IntentState(payload["to"]), payload["reason"])
        elif entry.kind == LOG_KIND_RESERVED:
            intent = self._replayed_intent(payload["intentId"], entry.sequence)
            record = ServiceRecord.from_document(payload["record"])
            record.aci = to_aci(intent, self.topology)[0]
            self.ledger.apply_record(record)
        elif entry.kind == LOG_KIND_RELEASED:
            record = self.ledger.records.get(payload["intentId"])
            if record is not None:
                self.ledger.release(record)
        elif entry.kind == LOG_KIND_INSTALL:
            record = self.ledger.records.get(payload["intentId"])
            report = payload["report"]
            if record is not None and report.get("committed"):
                record.message_ids = list(report.get("messageIds", []))
        elif entry.kind == LOG_KIND_TOPOLOGY:
            apply_event(
                self.topology,
                TopologyEvent(kind=payload["kind"], link_id=payload["linkId"]),
            )

    def _replayed_intent(self, intent_id: str, sequence: int) -> Intent:
        intent = self.intents.get(intent_id)
        if intent is None:
            raise StartupError(f"replay failed at sequence {sequence}: unknown intent {intent_id}")
        return intent

    def _recover_in_flight(self) -> None:
        """Finish whatever the previous process was doing when it stopped.

        INSTALLED intents get their recorded configuration pushed back onto
        the fresh device agents; anything caught between SUBMITTED and
        INSTALLED is re-driven through a fresh compile.
        """
        for intent_id in sorted(self.intents):
            intent = self.intents[intent_id]
            if intent.state is IntentState.INSTALLED:
                record = self.ledger.records.get(intent_id)
                if record is not None and record.message_ids:
                    self.installer.reinstall_committed(record)
            elif intent.state in (
                IntentState.SUBMITTED,
                IntentState.COMPILING,
                IntentState.INSTALLING,
                IntentState.RECOMPILING,
            ):
                # The log may stop after a reservation but before the state
                # change that follows it; drop any held resources and redo
                # the whole compile so the attempt is self-consistent.
                record = self.ledger.records.get(intent_id)
                if record is not None:
                    self.ledger.release(record)
                    self.log.append(LOG_KIND_RELEASED, {"intentId": intent_id})
                if intent.state is IntentState.SUBMITTED:
                    self._transition(intent, IntentState.COMPILING, "recovered after restart")
                self._drive_install(intent)
            elif intent.state is IntentState.WITHDRAWING:
                record = self.ledger.records.get(intent_id)
                if record is not None:
                    self.ledger.release(record)
                    self.log.append(LOG_KIND_RELEASED, {"intentId": intent_id})
                self._transition(intent, IntentState.WITHDRAWN, "withdrawal completed after restart")
