"""Compiles application-centric intents into installable multi-layer services.

The search is deterministic and exhaustive at desk scale: encryption layers in
the order produced by the constraint filter, candidate optical paths in
ascending (latency, lexicographic link-id) order, wavelengths first-fit lowest
index with the continuity constraint enforced across the whole fiber path.
Larger topologies would need k-shortest-path pruning; ``max_candidate_paths``
(default 8) exists for that, and never binds on the reference ring.

Capacity model: a fresh lightpath carries the topology's line rate; services
between the same transponder pair with the same encryption setting are groomed
onto an existing lightpath while spare capacity lasts. Bandwidth is otherwise
reserved on the TRANSITIONAL client links a service traverses.
"""

from __future__ import annotations

import logging
import zlib
from collections import deque
from dataclasses import dataclass, field
from typing import Iterator, Optional

from .errors import Conflict, NoFeasibleEncryptionLayer, NoFeasiblePath
from .intents import (
    DST,
    SRC,
    AppCentricIntent,
    ComplianceProfileTable,
    allowed_encryption_layers,
)
from .topology import (
    LayerId,
    Link,
    LinkKind,
    LinkState,
    Mechanism,
    MultiLayerTopology,
    NodeKind,
)

logger = logging.getLogger(__name__)

OP_OPTICAL_CONNECTION = "OPTICAL_CONNECTION"
OP_MACSEC_CHANNEL = "MACSEC_CHANNEL"
OP_GRE_IPSEC_TUNNEL = "GRE_IPSEC_TUNNEL"
OP_FLOW_RULE = "FLOW_RULE"

FLOW_RULE_PRIORITY = 100


@dataclass
class NetworkOperation:
    device_id: str
    kind: str
    params: dict
    rollback_of: Optional[str] = None

    def to_document(self) -> dict:
        doc = {"deviceId": self.device_id, "kind": self.kind, "params": self.params}
        if self.rollback_of is not None:
            doc["rollbackOf"] = self.rollback_of
        return doc

    @classmethod
    def from_document(cls, doc: dict) -> "NetworkOperation":
        return cls(
            device_id=doc["deviceId"],
            kind=doc["kind"],
            params=doc["params"],
            rollback_of=doc.get("rollbackOf"),
        )


@dataclass
class CandidateSolution:
    layer: LayerId
    mechanism: Optional[Mechanism]
    optical_path: tuple[str, ...]
    wavelength_index: int
    overlay_path: tuple[str, ...]
    total_latency_ms: float
    operations: list[NetworkOperation]
    transponders: tuple[str, str]  # (src side, dst side)
    terminals: tuple[str, str]  # (src client device, dst client device)
    encrypt_lightpath: bool
    requested_bandwidth_mbps: int
    groomed_lightpath: Optional[str] = None

    def to_document(self) -> dict:
        return {
            "layer": self.layer.name,
            "mechanism": self.mechanism.value if self.mechanism else None,
            "opticalPath": list(self.optical_path),
            "wavelengthIndex": self.wavelength_index,
            "overlayPath": list(self.overlay_path),
            "totalLatencyMs": round(self.total_latency_ms, 6),
            "operations": [op.to_document() for op in self.operations],
            "transponders": list(self.transponders),
            "terminals": list(self.terminals),
            "encryptLightpath": self.encrypt_lightpath,
            "requestedBandwidthMbps": self.requested_bandwidth_mbps,
            "groomedLightpath": self.groomed_lightpath,
        }

    @classmethod
    def from_document(cls, doc: dict) -> "CandidateSolution":
        return cls(
            layer=LayerId[doc["layer"]],
            mechanism=Mechanism(doc["mechanism"]) if doc.get("mechanism") else None,
            optical_path=tuple(doc["opticalPath"]),
            wavelength_index=doc["wavelengthIndex"],
            overlay_path=tuple(doc["overlayPath"]),
            total_latency_ms=doc["totalLatencyMs"],
            operations=[NetworkOperation.from_document(o) for o in doc["operations"]],
            transponders=tuple(doc["transponders"]),
            terminals=tuple(doc["terminals"]),
            encrypt_lightpath=doc["encryptLightpath"],
            requested_bandwidth_mbps=doc["requestedBandwidthMbps"],
            groomed_lightpath=doc.get("groomedLightpath"),
        )


@dataclass
class ReservedEntry:
    link_id: str
    kind: str  # "wavelength" | "bandwidth"
    value: int

    def to_document(self) -> dict:
        return {"linkId": self.link_id, "kind": self.kind, "value": self.value}


@dataclass
class ServiceRecord:
    intent_id: str
    solution: CandidateSolution
    reserved: list[ReservedEntry]
    lightpath_id: str
    installed_at_revision: int
    aci: Optional[AppCentricIntent] = None
    message_ids: list[str] = field(default_factory=list)

    def to_document(self) -> dict:
        return {
            "intentId": self.intent_id,
            "solution": self.solution.to_document(),
            "reservedResources": [e.to_document() for e in self.reserved],
            "lightpathId": self.lightpath_id,
            "installedAtRevision": self.installed_at_revision,
            "messageIds": list(self.message_ids),
        }

    @classmethod
    def from_document(cls, doc: dict) -> "ServiceRecord":
        return cls(
            intent_id=doc["intentId"],
            solution=CandidateSolution.from_document(doc["solution"]),
            reserved=[
                ReservedEntry(e["linkId"], e["kind"], e["value"])
                for e in doc["reservedResources"]
            ],
            lightpath_id=doc["lightpathId"],
            installed_at_revision=doc["installedAtRevision"],
            message_ids=list(doc.get("messageIds", [])),
        )


@dataclass
class Lightpath:
    id: str
    transponders: tuple[str, str]  # sorted pair
    roadm_path: tuple[str, ...]
    wavelength_index: int
    encrypted: bool
    capacity_mbps: int
    used_mbps: int = 0
    services: set[str] = field(default_factory=set)


class ResourceLedger:
    """Authoritative record of what every live service holds.

    Owns the mapping between services, lightpaths, fiber wavelength occupancy
    (mirrored into the topology's links) and per-link bandwidth reservations.
    Mutations happen only inside the orchestrator core's serialized loop.
    """

    def __init__(self, topology: MultiLayerTopology):
        self.topology = topology
        self.lightpaths: dict[str, Lightpath] = {}
        self.bandwidth: dict[str, dict[str, int]] = {}  # link -> service -> mbps
        self.records: dict[str, ServiceRecord] = {}
        self._lightpath_seq = 0

    # -- read side -----------------------------------------------------------

    def residual_bandwidth(self, link_id: str) -> int:
        link = self.topology.link(link_id)
        used = sum(self.bandwidth.get(link_id, {}).values())
        return link.capacity_mbps - used

    def find_lightpath(
        self, transponders: tuple[str, str], encrypted: bool, min_spare_mbps: int
    ) -> Optional[Lightpath]:
        """Lowest-id groomable lightpath: same pair, same encryption setting,
        spare capacity, and every fiber still UP (a lightpath kept alive by
        another rider after a fiber failure is not reusable)."""
        pair = tuple(sorted(transponders))
        matches = [
            lp
            for lp in self.lightpaths.values()
            if lp.transponders == pair
            and lp.encrypted == encrypted
            and lp.capacity_mbps - lp.used_mbps >= min_spare_mbps
            and all(
                self.topology.link(l).state is LinkState.UP for l in lp.roadm_path
            )
        ]
        return min(matches, key=lambda lp: lp.id) if matches else None

    def wavelength_free(self, path: tuple[str, ...], index: int) -> bool:
        for link_id in path:
            link = self.topology.link(link_id)
            if index >= (link.wavelength_count or 0) or index in link.lambda_occupancy:
                return False
        return True

    def first_fit_wavelength(self, path: tuple[str, ...]) -> Optional[int]:
        """Lowest index free on every fiber of ``path`` (continuity constraint)."""
        if not path:
            return 0
        limit = min(self.topology.link(l).wavelength_count or 0 for l in path)
        for index in range(limit):
            if self.wavelength_free(path, index):
                return index
        return None

    def services_on_link(self, link_id: str) -> set[str]:
        affected: set[str] = set()
        for lightpath in self.lightpaths.values():
            if link_id in lightpath.roadm_path:
                affected |= lightpath.services
        for record in self.records.values():
            if (
                link_id in record.solution.overlay_path
                or link_id in record.solution.optical_path
            ):
                affected.add(record.intent_id)
        return affected

    def snapshot(self) -> dict:
        """Stable view for equality checks (recovery determinism tests)."""
        return {
            "lightpaths": {
                lp.id: {
                    "transponders": list(lp.transponders),
                    "roadmPath": list(lp.roadm_path),
                    "wavelengthIndex": lp.wavelength_index,
                    "encrypted": lp.encrypted,
                    "capacityMbps": lp.capacity_mbps,
                    "usedMbps": lp.used_mbps,
                    "services": sorted(lp.services),
                }
                for lp in sorted(self.lightpaths.values(), key=lambda l: l.id)
            },
            "bandwidth": {
                link: dict(sorted(by_service.items()))
                for link, by_service in sorted(self.bandwidth.items())
                if by_service
            },
            "records": sorted(self.records),
        }

    # -- write side ------------------------------------------------------------

    def reserve(
        self,
        solution: CandidateSolution,
        intent_id: str,
        aci: Optional[AppCentricIntent] = None,
    ) -> ServiceRecord:
        """Atomically reserve everything a solution needs.

        All-or-nothing: every check runs before the first mutation, and a
        Conflict means the ledger moved since the solution was computed.
        """
        if intent_id in self.records:
            raise Conflict(f"{intent_id} already holds a reservation")
        bandwidth = solution.requested_bandwidth_mbps
        overlay_links = [
            l
            for l in solution.overlay_path
            if self.topology.link(l).kind is LinkKind.TRANSITIONAL
        ]
        for link_id in overlay_links:
            if self.residual_bandwidth(link_id) < bandwidth:
                raise Conflict(f"no residual bandwidth on {link_id}")

        if solution.groomed_lightpath is not None:
            lightpath = self.lightpaths.get(solution.groomed_lightpath)
            if lightpath is None:
                raise Conflict(f"lightpath {solution.groomed_lightpath} no longer exists")
            if lightpath.capacity_mbps - lightpath.used_mbps < bandwidth:
                raise Conflict(f"lightpath {lightpath.id} has no spare capacity")
        else:
            if not self.wavelength_free(solution.optical_path, solution.wavelength_index):
                raise Conflict(
                    f"wavelength {solution.wavelength_index} no longer free on "
                    f"{'/'.join(solution.optical_path) or 'local cross-connect'}"
                )
            self._lightpath_seq += 1
            lightpath = Lightpath(
                id=f"lp-{self._lightpath_seq:04d}",
                transponders=tuple(sorted(solution.transponders)),
                roadm_path=solution.optical_path,
                wavelength_index=solution.wavelength_index,
                encrypted=solution.encrypt_lightpath,
                capacity_mbps=self.topology.line_rate_mbps,
            )
            self.lightpaths[lightpath.id] = lightpath
            for link_id in solution.optical_path:
                self.topology.link(link_id).lambda_occupancy[
                    solution.wavelength_index
                ] = lightpath.id

        lightpath.used_mbps += bandwidth
        lightpath.services.add(intent_id)
        entries = [
            ReservedEntry(link_id, "wavelength", solution.wavelength_index)
            for link_id in solution.optical_path
        ]
        for link_id in overlay_links:
            self.bandwidth.setdefault(link_id, {})[intent_id] = bandwidth
            entries.append(ReservedEntry(link_id, "bandwidth", bandwidth))

        record = ServiceRecord(
            intent_id=intent_id,
            solution=solution,
            reserved=entries,
            lightpath_id=lightpath.id,
            installed_at_revision=self.topology.revision,
            aci=aci,
        )
        self.records[intent_id] = record
        return record

    def release(self, record: ServiceRecord) -> None:
        """Return every resource the record holds; no-op on released records."""
        if record.intent_id not in self.records:
            logger.warning("release of unknown record %s is a no-op", record.intent_id)
            return
        intent_id = record.intent_id
        for by_service in self.bandwidth.values():
            by_service.pop(intent_id, None)
        lightpath = self.lightpaths.get(record.lightpath_id)
        if lightpath is not None and intent_id in lightpath.services:
            lightpath.services.discard(intent_id)
            lightpath.used_mbps -= record.solution.requested_bandwidth_mbps
            if not lightpath.services:
                for link_id in lightpath.roadm_path:
                    self.topology.link(link_id).lambda_occupancy.pop(
                        lightpath.wavelength_index, None
                    )
                del self.lightpaths[lightpath.id]
        del self.records[intent_id]

    def apply_record(self, record: ServiceRecord) -> None:
        """Replay a recorded reservation verbatim (event-log recovery path)."""
        solution = record.solution
        lightpath = self.lightpaths.get(record.lightpath_id)
        if lightpath is None:
            lightpath = Lightpath(
                id=record.lightpath_id,
                transponders=tuple(sorted(solution.transponders)),
                roadm_path=solution.optical_path,
                wavelength_index=solution.wavelength_index,
                encrypted=solution.encrypt_lightpath,
                capacity_mbps=self.topology.line_rate_mbps,
            )
            self.lightpaths[lightpath.id] = lightpath
            for link_id in solution.optical_path:
                self.topology.link(link_id).lambda_occupancy[
                    solution.wavelength_index
                ] = lightpath.id
            numeric = record.lightpath_id.rsplit("-", 1)[-1]
            if numeric.isdigit():
                self._lightpath_seq = max(self._lightpath_seq, int(numeric))
        lightpath.used_mbps += solution.requested_bandwidth_mbps
        lightpath.services.add(record.intent_id)
        for entry in record.reserved:
            if entry.kind == "bandwidth":
                self.bandwidth.setdefault(entry.link_id, {})[record.intent_id] = entry.value
        self.records[record.intent_id] = record


# -- compilation ---------------------------------------------------------------


@dataclass
class _LayerPlan:
    """Everything needed to realize one encryption-layer choice."""

    layer: LayerId
    mechanism: Optional[Mechanism]
    terminals: tuple[str, str]
    crypto_devices: tuple[str, str]
    transponders: tuple[str, str]
    client_links: tuple[tuple[str, ...], tuple[str, ...]]  # per side, terminal->transponder
    attach_links: tuple[str, str]  # CLIENT_ATTACH per side
    roadms: tuple[str, str]
    key_length_bits: Optional[int]


@dataclass
class _Candidate:
    layer: LayerId
    mechanism: Optional[Mechanism]
    path: tuple[str, ...]
    wavelength: Optional[int]
    groomed: bool
    feasible: bool
    reason: str
    solution: Optional[CandidateSolution] = None

    def report(self) -> dict:
        return {
            "layer": self.layer.name,
            "mechanism": self.mechanism.value if self.mechanism else None,
            "path": list(self.path),
            "lambda": self.wavelength,
            "groomed": self.groomed,
            "feasible": self.feasible,
            "reason": self.reason,
        }


def compile_aci(
    aci: AppCentricIntent,
    topology: MultiLayerTopology,
    profiles: ComplianceProfileTable,
    ledger: ResourceLedger,
    max_candidate_paths: int = 8,
) -> CandidateSolution:
    """Return the first feasible solution in the deterministic search order.

    Raises NoFeasibleEncryptionLayer when the constraint filter leaves no
    layer, NoFeasiblePath (carrying the per-candidate rejection report) when
    every layer/path/wavelength combination fails.
    """
    report: list[dict] = []
    for candidate in _candidates(aci, topology, profiles, ledger, max_candidate_paths):
        if candidate.solution is not None:
            return candidate.solution
        report.append(candidate.report())
    if not report:
        raise NoFeasibleEncryptionLayer(
            f"no common encryption layer for intent {aci.intent_id} passes the "
            f"{aci.encryption.compliance.value} profile"
        )
    raise NoFeasiblePath(
        f"all {len(report)} candidates rejected for intent {aci.intent_id}", report
    )


def explain(
    aci: AppCentricIntent,
    topology: MultiLayerTopology,
    profiles: ComplianceProfileTable,
    ledger: ResourceLedger,
    max_candidate_paths: int = 8,
) -> dict:
    """Full ranked candidate report in search order; pure read, no reservation."""
    candidates = list(_candidates(aci, topology, profiles, ledger, max_candidate_paths))
    notice = None
    if not candidates and aci.encryption.required:
        notice = "NoFeasibleEncryptionLayer"
    return {
        "intentId": aci.intent_id,
        "candidates": [c.report() for c in candidates],
        "notice": notice,
    }


def recompile(
    intent_id: str,
    topology: MultiLayerTopology,
    ledger: ResourceLedger,
    profiles: ComplianceProfileTable,
) -> CandidateSolution:
    """Release an installed service's resources and compile it afresh.

    The caller reserves and installs the returned solution; on error the
    resources stay released and the intent is expected to go FAILED.
    """
    record = ledger.records.get(intent_id)
    if record is None:
        raise Conflict(f"{intent_id} holds no live reservation")
    if record.aci is None:
        raise Conflict(f"{intent_id} has no stored ACI to recompile")
    aci = record.aci
    ledger.release(record)
    return compile_aci(aci, topology, profiles, ledger)


def _candidates(
    aci: AppCentricIntent,
    topology: MultiLayerTopology,
    profiles: ComplianceProfileTable,
    ledger: ResourceLedger,
    max_candidate_paths: int,
) -> Iterator[_Candidate]:
    for layer, mechanism, key_bits in _layer_choices(aci, profiles):
        plan = _plan_layer(aci, topology, layer, mechanism, key_bits)
        if isinstance(plan, str):  # rejection reason for the whole layer
            yield _Candidate(layer, mechanism, (), None, False, False, plan)
            continue

        # Grooming first: reuse a lightpath already joining this transponder
        # pair with the same encryption setting.
        encrypted = mechanism is Mechanism.OTN_AES
        groomed = ledger.find_lightpath(plan.transponders, encrypted, aci.bandwidth_mbps)
        if groomed is not None:
            yield _evaluate(
                aci, topology, ledger, plan,
                groomed.roadm_path, groomed.wavelength_index, groomed.id,
            )

        paths = _ordered_paths(topology, plan, max_candidate_paths)
        if not paths and groomed is None:
            yield _Candidate(
                layer, mechanism, (), None, False, False,
                f"no fiber path between {plan.roadms[0]} and {plan.roadms[1]}",
            )
            continue
        for path in paths:
            wavelength = ledger.first_fit_wavelength(path)
            if wavelength is None:
                yield _Candidate(
                    layer, mechanism, path, None, False, False, "no free wavelength"
                )
                continue
            yield _evaluate(aci, topology, ledger, plan, path, wavelength, None)


def _layer_choices(aci: AppCentricIntent, profiles: ComplianceProfileTable):
    if aci.encryption.required:
        layers = allowed_encryption_layers(
            aci.encryption,
            profiles,
            aci.capability_sets(SRC),
            aci.capability_sets(DST),
        )
        for layer, mechanism in layers:
            src = aci.attachment(layer, SRC)
            dst = aci.attachment(layer, DST)
            assert src and src.capability and dst and dst.capability
            key_bits = min(src.capability.key_length_bits, dst.capability.key_length_bits)
            yield layer, mechanism, key_bits
    else:
        # Unencrypted services are realized at the optical layer: a plain
        # lightpath plus flow rules steering the client devices into it.
        yield LayerId.L0_OPTICAL, None, None


def _plan_layer(
    aci: AppCentricIntent,
    topology: MultiLayerTopology,
    layer: LayerId,
    mechanism: Optional[Mechanism],
    key_bits: Optional[int],
) -> "_LayerPlan | str":
    transponders = []
    terminals = []
    crypto_devices = []
    client_links = []
    attach_links = []
    roadms = []
    for role in (SRC, DST):
        l0 = aci.attachment(LayerId.L0_OPTICAL, role)
        if l0 is None:
            return f"{role} site has no optical attachment"
        top_layer = max(l for l, roles in aci.attachments.items() if role in roles)
        terminal = aci.attachments[top_layer][role].node_id
        crypto = aci.attachment(layer, role)
        crypto_devices.append(crypto.node_id if crypto else terminal)
        transponders.append(l0.node_id)
        terminals.append(terminal)

        path = _client_path(topology, terminal, l0.node_id)
        if path is None:
            return f"no UP client path from {terminal} to {l0.node_id}"
        client_links.append(tuple(path))

        attach = _client_attach(topology, l0.node_id)
        if attach is None:
            return f"transponder {l0.node_id} has no UP client-attach link"
        attach_links.append(attach.id)
        roadms.append(attach.other(l0.node_id))

    return _LayerPlan(
        layer=layer,
        mechanism=mechanism,
        terminals=(terminals[0], terminals[1]),
        crypto_devices=(crypto_devices[0], crypto_devices[1]),
        transponders=(transponders[0], transponders[1]),
        client_links=(client_links[0], client_links[1]),
        attach_links=(attach_links[0], attach_links[1]),
        roadms=(roadms[0], roadms[1]),
        key_length_bits=key_bits,
    )


def _evaluate(
    aci: AppCentricIntent,
    topology: MultiLayerTopology,
    ledger: ResourceLedger,
    plan: _LayerPlan,
    path: tuple[str, ...],
    wavelength: int,
    groomed_id: Optional[str],
) -> _Candidate:
    overlay = (
        plan.client_links[0]
        + (plan.attach_links[0], plan.attach_links[1])
        + tuple(reversed(plan.client_links[1]))
    )
    latency = sum(topology.link(l).latency_ms for l in overlay) + sum(
        topology.link(l).latency_ms for l in path
    )

    reason = "feasible"
    feasible = True
    dead = [l for l in path if topology.link(l).state is not LinkState.UP]
    if dead:
        # Fresh paths only walk UP fibers; this guards groomed lightpaths
        # whose fiber died while another rider kept them alive.
        feasible, reason = False, f"lightpath fiber {dead[0]} is down"
    if feasible and groomed_id is None and aci.bandwidth_mbps > topology.line_rate_mbps:
        feasible, reason = False, (
            f"bandwidth {aci.bandwidth_mbps} exceeds lightpath line rate "
            f"{topology.line_rate_mbps}"
        )
    if feasible:
        for link_id in overlay:
            link = topology.link(link_id)
            if link.kind is LinkKind.TRANSITIONAL and (
                ledger.residual_bandwidth(link_id) < aci.bandwidth_mbps
            ):
                feasible, reason = False, f"no residual bandwidth on {link_id}"
                break
    if feasible and aci.max_latency_ms is not None and latency > aci.max_latency_ms:
        feasible, reason = False, (
            f"latency {latency:.3f} ms exceeds budget {aci.max_latency_ms:.3f} ms"
        )

    solution = None
    if feasible:
        if groomed_id is not None:
            reason = "reuses existing lightpath"
        solution = _build_solution(
            aci, topology, plan, path, wavelength, groomed_id, overlay, latency
        )
    return _Candidate(
        layer=plan.layer,
        mechanism=plan.mechanism,
        path=path,
        wavelength=wavelength,
        groomed=groomed_id is not None,
        feasible=feasible,
        reason=reason,
        solution=solution,
    )


def _build_solution(
    aci: AppCentricIntent,
    topology: MultiLayerTopology,
    plan: _LayerPlan,
    path: tuple[str, ...],
    wavelength: int,
    groomed_id: Optional[str],
    overlay: tuple[str, ...],
    latency: float,
) -> CandidateSolution:
    encrypted = plan.mechanism is Mechanism.OTN_AES
    ops: list[NetworkOperation] = []

    for side, peer in ((0, 1), (1, 0)):
        params: dict = {
            "peerTransponderId": plan.transponders[peer],
            "roadmPath": list(path) if side == 0 else list(reversed(path)),
            "wavelengthIndex": wavelength,
            "encryptionFlag": encrypted,
        }
        if encrypted:
            params["keyLengthBits"] = plan.key_length_bits
            params["keyId"] = f"key-{aci.intent_id}-{plan.mechanism.value}"
        ops.append(NetworkOperation(plan.transponders[side], OP_OPTICAL_CONNECTION, params))

    if plan.mechanism is Mechanism.MACSEC:
        vlan = 100 + zlib.crc32(aci.intent_id.encode()) % 3900
        for side, peer in ((0, 1), (1, 0)):
            ops.append(
                NetworkOperation(
                    plan.crypto_devices[side],
                    OP_MACSEC_CHANNEL,
                    {
                        "peerSwitchId": plan.crypto_devices[peer],
                        "keyLengthBits": plan.key_length_bits,
                        "vlanTag": vlan,
                        "keyId": f"key-{aci.intent_id}-MACSEC",
                    },
                )
            )
    elif plan.mechanism is Mechanism.IPSEC_GRE:
        addresses = _host_addresses(topology)
        for side, peer in ((0, 1), (1, 0)):
            ops.append(
                NetworkOperation(
                    plan.crypto_devices[side],
                    OP_GRE_IPSEC_TUNNEL,
                    {
                        "localAddr": addresses[plan.crypto_devices[side]],
                        "remoteAddr": addresses[plan.crypto_devices[peer]],
                        "keyLengthBits": plan.key_length_bits,
                        "tunnelId": f"gre-{aci.intent_id}",
                        "keyId": f"key-{aci.intent_id}-IPSEC_GRE",
                    },
                )
            )

    src_site, dst_site = _sites_of(aci, topology)
    for side, (src, dst) in ((0, (src_site, dst_site)), (1, (dst_site, src_site))):
        toward = plan.client_links[side][0] if plan.client_links[side] else plan.attach_links[side]
        ops.append(
            NetworkOperation(
                plan.terminals[side],
                OP_FLOW_RULE,
                {
                    "matchFields": {
                        "serviceId": aci.intent_id,
                        "srcSite": src,
                        "dstSite": dst,
                    },
                    "outputPort": toward,
                    "priority": FLOW_RULE_PRIORITY,
                },
            )
        )

    return CandidateSolution(
        layer=plan.layer,
        mechanism=plan.mechanism,
        optical_path=path,
        wavelength_index=wavelength,
        overlay_path=overlay,
        total_latency_ms=latency,
        operations=ops,
        transponders=plan.transponders,
        terminals=plan.terminals,
        encrypt_lightpath=encrypted,
        requested_bandwidth_mbps=aci.bandwidth_mbps,
        groomed_lightpath=groomed_id,
    )


def _sites_of(aci: AppCentricIntent, topology: MultiLayerTopology) -> tuple[str, str]:
    sites = []
    for role in (SRC, DST):
        top_layer = max(l for l, roles in aci.attachments.items() if role in roles)
        node = topology.node(aci.attachments[top_layer][role].node_id)
        site = node.site_id
        if site is None:
            site = next(s for s, members in topology.sites.items() if node.id in members)
        sites.append(site)
    return sites[0], sites[1]


def _host_addresses(topology: MultiLayerTopology) -> dict[str, str]:
    hosts = sorted(n.id for n in topology.nodes.values() if n.kind is NodeKind.IP_HOST)
    return {h: f"10.0.0.{i + 1}" for i, h in enumerate(hosts)}


def _client_attach(topology: MultiLayerTopology, transponder: str) -> Optional[Link]:
    for link in topology.links_of(transponder):
        if link.kind is LinkKind.CLIENT_ATTACH and link.state is LinkState.UP:
            return link
    return None


def _client_path(
    topology: MultiLayerTopology, start: str, goal: str
) -> Optional[list[str]]:
    """Shortest UP TRANSITIONAL path between client devices, or None."""
    if start == goal:
        return []
    previous: dict[str, tuple[str, str]] = {}
    queue: deque[str] = deque([start])
    seen = {start}
    while queue:
        node_id = queue.popleft()
        for link in topology.links_of(node_id):
            if link.kind is not LinkKind.TRANSITIONAL or link.state is not LinkState.UP:
                continue
            neighbor = link.other(node_id)
            if neighbor in seen:
                continue
            seen.add(neighbor)
            previous[neighbor] = (node_id, link.id)
            if neighbor == goal:
                path = []
                cursor = goal
                while cursor != start:
                    parent, via = previous[cursor]
                    path.append(via)
                    cursor = parent
                return list(reversed(path))
            queue.append(neighbor)
    return None


def _ordered_paths(
    topology: MultiLayerTopology, plan: _LayerPlan, max_candidate_paths: int
) -> list[tuple[str, ...]]:
    paths = _fiber_paths(topology, plan.roadms[0], plan.roadms[1])
    paths.sort(key=lambda p: (sum(topology.link(l).latency_ms for l in p), p))
    return paths[:max_candidate_paths]


def _fiber_paths(
    topology: MultiLayerTopology, roadm_a: str, roadm_b: str
) -> list[tuple[str, ...]]:
    """All simple UP-fiber paths between two ROADMs (both arcs on the ring)."""
    if roadm_a == roadm_b:
        return [()]
    paths: list[tuple[str, ...]] = []

    def walk(node_id: str, visited: set[str], acc: tuple[str, ...]) -> None:
        for link in topology.links_of(node_id):
            if link.kind is not LinkKind.FIBER or link.state is not LinkState.UP:
                continue
            neighbor = link.other(node_id)
            if neighbor == roadm_b:
                paths.append(acc + (link.id,))
                continue
            if neighbor in visited:
                continue
            walk(neighbor, visited | {neighbor}, acc + (link.id,))

    walk(roadm_a, {roadm_a}, ())
    return paths
