"""Technology-agnostic connectivity intents and their lifecycle.

An intent names two sites plus bandwidth/latency/encryption constraints and
says nothing about layers or devices. Translation resolves it into an
application-centric intent (ACI) whose attachment points are concrete nodes,
which is what the compiler routes. State changes go through ``transition`` so
every record's history stays inside the legal transition relation.
"""

from __future__ import annotations

import enum
import json
import uuid
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Optional

from .errors import IllegalTransition, SchemaError, UnresolvableSite, ValidationError
from .topology import (
    MECHANISM_LAYER,
    EncryptionCapability,
    LayerId,
    Mechanism,
    MultiLayerTopology,
    reachable_attachments,
)

LAYER_MECHANISM = {layer: mech for mech, layer in MECHANISM_LAYER.items()}


class Compliance(str, enum.Enum):
    NONE = "NONE"
    GENERIC = "GENERIC"
    BSI = "BSI"
    HIPAA = "HIPAA"


@dataclass(frozen=True)
class EncryptionConstraint:
    required: bool
    compliance: Compliance = Compliance.NONE
    layer_preference: Optional[tuple[LayerId, ...]] = None

    def to_document(self) -> dict:
        doc: dict = {"required": self.required, "compliance": self.compliance.value}
        if self.layer_preference is not None:
            doc["layerPreference"] = [l.name for l in self.layer_preference]
        return doc


class IntentState(str, enum.Enum):
    SUBMITTED = "SUBMITTED"
    COMPILING = "COMPILING"
    INSTALLING = "INSTALLING"
    INSTALLED = "INSTALLED"
    RECOMPILING = "RECOMPILING"
    FAILED = "FAILED"
    WITHDRAWING = "WITHDRAWING"
    WITHDRAWN = "WITHDRAWN"


LEGAL_TRANSITIONS: frozenset[tuple[IntentState, IntentState]] = frozenset(
    {
        (IntentState.SUBMITTED, IntentState.COMPILING),
        (IntentState.COMPILING, IntentState.INSTALLING),
        (IntentState.COMPILING, IntentState.FAILED),
        (IntentState.INSTALLING, IntentState.INSTALLED),
        (IntentState.INSTALLING, IntentState.FAILED),
        (IntentState.INSTALLED, IntentState.RECOMPILING),
        (IntentState.INSTALLED, IntentState.WITHDRAWING),
        (IntentState.RECOMPILING, IntentState.INSTALLING),
        (IntentState.RECOMPILING, IntentState.FAILED),
        (IntentState.FAILED, IntentState.COMPILING),  # operator retry
        (IntentState.FAILED, IntentState.WITHDRAWING),
        (IntentState.WITHDRAWING, IntentState.WITHDRAWN),
    }
)


@dataclass(frozen=True)
class StateChange:
    state: IntentState
    sequence: int
    reason: str


@dataclass
class Intent:
    id: str
    src: str
    dst: str
    bandwidth_mbps: int
    encryption: EncryptionConstraint
    max_latency_ms: Optional[float] = None
    action: str = "CONNECT"
    state: IntentState = IntentState.SUBMITTED
    state_history: list[StateChange] = field(default_factory=list)

    def to_document(self) -> dict:
        doc: dict = {
            "id": self.id,
            "action": self.action,
            "src": self.src,
            "dst": self.dst,
            "bandwidthMbps": self.bandwidth_mbps,
            "encryption": self.encryption.to_document(),
            "state": self.state.value,
            "stateHistory": [
                {"state": c.state.value, "sequence": c.sequence, "reason": c.reason}
                for c in self.state_history
            ],
        }
        if self.max_latency_ms is not None:
            doc["maxLatencyMs"] = self.max_latency_ms
        return doc

    def request_document(self) -> dict:
        """The original request form, used to re-validate on log replay."""
        doc: dict = {
            "src": self.src,
            "dst": self.dst,
            "bandwidthMbps": self.bandwidth_mbps,
            "encryption": self.encryption.to_document(),
        }
        if self.max_latency_ms is not None:
            doc["maxLatencyMs"] = self.max_latency_ms
        return doc


@dataclass(frozen=True)
class ComplianceProfile:
    allowed_mechanisms: frozenset[Mechanism]
    min_key_length_bits: int


_ALL_MECHANISMS = frozenset(Mechanism)


@dataclass(frozen=True)
class ComplianceProfileTable:
    profiles: Mapping[Compliance, ComplianceProfile]

    def profile(self, compliance: Compliance) -> ComplianceProfile:
        return self.profiles[compliance]

    @classmethod
    def default(cls) -> "ComplianceProfileTable":
        return cls(
            profiles={
                Compliance.NONE: ComplianceProfile(_ALL_MECHANISMS, 128),
                Compliance.GENERIC: ComplianceProfile(_ALL_MECHANISMS, 128),
                Compliance.BSI: ComplianceProfile(_ALL_MECHANISMS, 256),
                Compliance.HIPAA: ComplianceProfile(_ALL_MECHANISMS, 128),
            }
        )

    @classmethod
    def from_document(cls, document: dict) -> "ComplianceProfileTable":
        if not isinstance(document, dict):
            raise SchemaError("compliance table must be an object")
        profiles: dict[Compliance, ComplianceProfile] = {}
        for name, raw in document.items():
            try:
                compliance = Compliance[name]
            except KeyError:
                raise SchemaError(f"unknown compliance profile '{name}'") from None
            mechanisms = frozenset(
                Mechanism[m] if m in Mechanism.__members__ else _bad_mechanism(name, m)
                for m in raw.get("allowedMechanisms", [])
            )
            min_bits = raw.get("minKeyLengthBits")
            if not isinstance(min_bits, int) or min_bits <= 0:
                raise SchemaError(f"profile {name}: minKeyLengthBits must be positive")
            if not mechanisms:
                raise SchemaError(f"profile {name}: must allow at least one mechanism")
            profiles[compliance] = ComplianceProfile(mechanisms, min_bits)
        for open_profile in (Compliance.NONE, Compliance.GENERIC):
            profiles.setdefault(open_profile, ComplianceProfile(_ALL_MECHANISMS, 128))
            if (
                profiles[open_profile].allowed_mechanisms != _ALL_MECHANISMS
                or profiles[open_profile].min_key_length_bits != 128
            ):
                raise SchemaError(
                    f"profile {open_profile.value} must allow all mechanisms at 128 bits"
                )
        for compliance in Compliance:
            profiles.setdefault(compliance, ComplianceProfile(_ALL_MECHANISMS, 128))
        return cls(profiles=profiles)

    @classmethod
    def from_path(cls, path: str | Path) -> "ComplianceProfileTable":
        try:
            document = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
        return cls.from_document(document)


def _bad_mechanism(profile: str, name):
    raise SchemaError(f"profile {profile}: unknown mechanism '{name}'")


def validate_intent(
    request: object,
    topology: MultiLayerTopology,
    intent_id: Optional[str] = None,
) -> Intent:
    """Validate an intent-request document and mint a SUBMITTED intent.

    Never raises anything but ValidationError for bad input; every problem in
    the request is collected into the error's reason list.
    """
    reasons: list[str] = []
    if not isinstance(request, dict):
        raise ValidationError(["request must be an object"])

    src = request.get("src")
    dst = request.get("dst")
    for label, value in (("src", src), ("dst", dst)):
        if not isinstance(value, str) or not value:
            reasons.append(f"{label}: must be a non-empty site id")
        elif value not in topology.sites:
            reasons.append(f"{label}: unknown site '{value}'")
    if isinstance(src, str) and isinstance(dst, str) and src == dst:
        reasons.append("src equals dst")

    action = request.get("action", "CONNECT")
    if action != "CONNECT":
        reasons.append(f"action: unsupported action '{action}'")

    bandwidth = request.get("bandwidthMbps")
    if not isinstance(bandwidth, int) or isinstance(bandwidth, bool) or bandwidth <= 0:
        reasons.append("bandwidthMbps: must be a positive integer")

    max_latency = request.get("maxLatencyMs")
    if max_latency is not None and (
        not isinstance(max_latency, (int, float))
        or isinstance(max_latency, bool)
        or max_latency <= 0
    ):
        reasons.append("maxLatencyMs: must be a positive number")

    encryption = _validate_encryption(request.get("encryption", {"required": False}), reasons)

    if reasons:
        raise ValidationError(reasons)
    assert isinstance(src, str) and isinstance(dst, str)
    assert isinstance(bandwidth, int) and encryption is not None

    intent = Intent(
        id=intent_id or f"it-{uuid.uuid4().hex[:8]}",
        src=src,
        dst=dst,
        bandwidth_mbps=bandwidth,
        max_latency_ms=float(max_latency) if max_latency is not None else None,
        encryption=encryption,
    )
    intent.state_history.append(StateChange(IntentState.SUBMITTED, 0, "request accepted"))
    return intent


def _validate_encryption(raw: object, reasons: list[str]) -> Optional[EncryptionConstraint]:
    if not isinstance(raw, dict):
        reasons.append("encryption: must be an object")
        return None
    required = raw.get("required", False)
    if not isinstance(required, bool):
        reasons.append("encryption.required: must be a boolean")
        return None

    compliance = Compliance.NONE
    if "compliance" in raw and raw["compliance"] is not None:
        try:
            compliance = Compliance[raw["compliance"]]
        except (KeyError, TypeError):
            reasons.append(f"encryption.compliance: unknown profile '{raw['compliance']}'")
            return None

    preference: Optional[tuple[LayerId, ...]] = None
    if "layerPreference" in raw and raw["layerPreference"] is not None:
        raw_pref = raw["layerPreference"]
        if not isinstance(raw_pref, list) or not raw_pref:
            reasons.append("encryption.layerPreference: must be a non-empty list")
            return None
        layers = []
        for item in raw_pref:
            try:
                layers.append(LayerId[item])
            except (KeyError, TypeError):
                reasons.append(f"encryption.layerPreference: unknown layer '{item}'")
                return None
        if len(set(layers)) != len(layers):
            reasons.append("encryption.layerPreference: layers must be distinct")
            return None
        preference = tuple(layers)

    if not required:
        if compliance is not Compliance.NONE:
            reasons.append("encryption.compliance: compliance without required encryption")
        if preference is not None:
            reasons.append("encryption.layerPreference: preference without required encryption")
        if reasons:
            return None
    return EncryptionConstraint(required=required, compliance=compliance, layer_preference=preference)


def transition(intent: Intent, new_state: IntentState, reason: str) -> Intent:
    """Move an intent to ``new_state``, appending to its history.

    Raises IllegalTransition when (current, new) is outside the legal relation.
    """
    if (intent.state, new_state) not in LEGAL_TRANSITIONS:
        raise IllegalTransition(intent.state.value, new_state.value)
    intent.state = new_state
    intent.state_history.append(
        StateChange(new_state, len(intent.state_history), reason)
    )
    return intent


@dataclass(frozen=True)
class Attachment:
    node_id: str
    capability: Optional[EncryptionCapability]


# Role keys inside an ACI's per-layer attachment maps.
SRC = "src"
DST = "dst"


@dataclass
class AppCentricIntent:
    """Network-aware form of an intent: resolved attachments, same constraints."""

    intent_id: str
    attachments: dict[LayerId, dict[str, Attachment]]
    bandwidth_mbps: int
    encryption: EncryptionConstraint
    max_latency_ms: Optional[float] = None

    def attachment(self, layer: LayerId, role: str) -> Optional[Attachment]:
        return self.attachments.get(layer, {}).get(role)

    def capability_sets(self, role: str) -> dict[LayerId, set[EncryptionCapability]]:
        caps: dict[LayerId, set[EncryptionCapability]] = {}
        for layer, roles in self.attachments.items():
            att = roles.get(role)
            if att is not None and att.capability is not None:
                caps.setdefault(layer, set()).add(att.capability)
        return caps


def _pick_attachment(
    candidates: set[tuple[str, Optional[EncryptionCapability]]]
) -> Attachment:
    # Prefer capability-bearing attachments with the longest key, then stable ids.
    def rank(entry: tuple[str, Optional[EncryptionCapability]]):
        node_id, cap = entry
        return (0 if cap is not None else 1, -(cap.key_length_bits if cap else 0), node_id)

    node_id, cap = min(candidates, key=rank)
    return Attachment(node_id=node_id, capability=cap)


def to_aci(intent: Intent, topology: MultiLayerTopology) -> list[AppCentricIntent]:
    """Translate an intent into application-centric intents.

    CONNECT always yields exactly one ACI; the list return preserves the
    one-to-many contract for future actions. Constraints are copied through
    unchanged.
    """
    per_site: dict[str, dict[LayerId, set]] = {}
    for site in (intent.src, intent.dst):
        resolved = reachable_attachments(topology, site)
        if not any(resolved.values()):
            raise UnresolvableSite(site)
        per_site[site] = resolved

    attachments: dict[LayerId, dict[str, Attachment]] = {}
    for role, site in ((SRC, intent.src), (DST, intent.dst)):
        for layer, candidates in per_site[site].items():
            if candidates:
                attachments.setdefault(layer, {})[role] = _pick_attachment(candidates)

    aci = AppCentricIntent(
        intent_id=intent.id,
        attachments=attachments,
        bandwidth_mbps=intent.bandwidth_mbps,
        encryption=replace(intent.encryption),
        max_latency_ms=intent.max_latency_ms,
    )
    return [aci]


def allowed_encryption_layers(
    constraint: EncryptionConstraint,
    profiles: ComplianceProfileTable,
    src_caps: Mapping[LayerId, Iterable[EncryptionCapability]],
    dst_caps: Mapping[LayerId, Iterable[EncryptionCapability]],
) -> list[tuple[LayerId, Mechanism]]:
    """Layers at which both endpoints can terminate compliant encryption.

    A layer qualifies when both sides expose a capability there, the layer's
    mechanism is allowed by the compliance profile, and both capabilities meet
    the profile's minimum key length. The result is ordered by the intent's
    layer preference when given (preferred layers first, the rest in default
    lowest-layer-first order); an empty list means infeasible, not an error.
    """
    profile = profiles.profile(constraint.compliance)
    feasible: list[tuple[LayerId, Mechanism]] = []
    for layer in LayerId:
        mechanism = LAYER_MECHANISM[layer]
        if mechanism not in profile.allowed_mechanisms:
            continue
        src_ok = _best_key_bits(src_caps.get(layer, ()), mechanism)
        dst_ok = _best_key_bits(dst_caps.get(layer, ()), mechanism)
        if src_ok is None or dst_ok is None:
            continue
        if src_ok < profile.min_key_length_bits or dst_ok < profile.min_key_length_bits:
            continue
        feasible.append((layer, mechanism))

    if constraint.layer_preference:
        preference = {layer: i for i, layer in enumerate(constraint.layer_preference)}
        feasible.sort(key=lambda lm: (preference.get(lm[0], len(preference)), lm[0]))
    return feasible


def _best_key_bits(
    caps: Iterable[EncryptionCapability], mechanism: Mechanism
) -> Optional[int]:
    bits = [c.key_length_bits for c in caps if c.mechanism is mechanism]
    return max(bits) if bits else None
