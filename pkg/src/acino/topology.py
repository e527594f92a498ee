"""Multi-layer network graph: typed nodes/links, wavelength occupancy, events.

The topology is the substrate the intent compiler routes over. It is loaded
from a JSON-compatible document (see ``topologies/acino-ring.json`` for the
reference ring), validated against the model invariants, and mutated only by
``apply_event`` inside the orchestrator core.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import InvariantError, SchemaError, UnknownLink, UnknownSite


class LayerId(enum.IntEnum):
    """Network layer; the integer values give the preference order L0 < L2 < L3."""

    L0_OPTICAL = 0
    L2_ETHERNET = 2
    L3_IP = 3


class Mechanism(str, enum.Enum):
    OTN_AES = "OTN_AES"
    MACSEC = "MACSEC"
    IPSEC_GRE = "IPSEC_GRE"


# Each encryption mechanism lives at exactly one layer.
MECHANISM_LAYER: dict[Mechanism, LayerId] = {
    Mechanism.OTN_AES: LayerId.L0_OPTICAL,
    Mechanism.MACSEC: LayerId.L2_ETHERNET,
    Mechanism.IPSEC_GRE: LayerId.L3_IP,
}

ALLOWED_KEY_LENGTHS = (128, 256)


class NodeKind(str, enum.Enum):
    ROADM = "ROADM"
    TRANSPONDER = "TRANSPONDER"
    ETH_SWITCH = "ETH_SWITCH"
    IP_HOST = "IP_HOST"


KIND_LAYER: dict[NodeKind, LayerId] = {
    NodeKind.ROADM: LayerId.L0_OPTICAL,
    NodeKind.TRANSPONDER: LayerId.L0_OPTICAL,
    NodeKind.ETH_SWITCH: LayerId.L2_ETHERNET,
    NodeKind.IP_HOST: LayerId.L3_IP,
}


class LinkKind(str, enum.Enum):
    FIBER = "FIBER"
    CLIENT_ATTACH = "CLIENT_ATTACH"
    TRANSITIONAL = "TRANSITIONAL"


class LinkState(str, enum.Enum):
    UP = "UP"
    DOWN = "DOWN"


@dataclass(frozen=True)
class EncryptionCapability:
    layer: LayerId
    mechanism: Mechanism
    key_length_bits: int


@dataclass
class Node:
    id: str
    kind: NodeKind
    layer: LayerId
    capabilities: frozenset[EncryptionCapability] = frozenset()
    site_id: Optional[str] = None


@dataclass
class Link:
    """Undirected link; (a_node, b_node) order carries no meaning."""

    id: str
    a_node: str
    b_node: str
    kind: LinkKind
    capacity_mbps: int
    latency_ms: float
    state: LinkState = LinkState.UP
    wavelength_count: Optional[int] = None  # FIBER only
    lambda_occupancy: dict[int, str] = field(default_factory=dict)  # FIBER only

    def other(self, node_id: str) -> str:
        if node_id == self.a_node:
            return self.b_node
        if node_id == self.b_node:
            return self.a_node
        raise ValueError(f"{node_id} is not an endpoint of {self.id}")

    @property
    def endpoints(self) -> frozenset[str]:
        return frozenset((self.a_node, self.b_node))


@dataclass(frozen=True)
class TopologyEvent:
    kind: str  # LINK_DOWN | LINK_UP
    link_id: str
    sequence: int = 0


EVENT_KINDS = ("LINK_DOWN", "LINK_UP")


@dataclass
class MultiLayerTopology:
    nodes: dict[str, Node]
    links: dict[str, Link]
    sites: dict[str, set[str]]
    revision: int = 0
    wavelength_count_default: int = 4
    line_rate_mbps: int = 10000

    def node(self, node_id: str) -> Node:
        return self.nodes[node_id]

    def link(self, link_id: str) -> Link:
        return self.links[link_id]

    def links_of(self, node_id: str) -> list[Link]:
        """All links touching ``node_id``, sorted by link id for determinism."""
        return sorted(
            (l for l in self.links.values() if node_id in l.endpoints),
            key=lambda l: l.id,
        )

    def fiber_links(self) -> list[Link]:
        return sorted(
            (l for l in self.links.values() if l.kind is LinkKind.FIBER),
            key=lambda l: l.id,
        )


# Which node-kind pairs each link kind may join.
_LINK_ENDPOINT_RULES: dict[LinkKind, list[frozenset[NodeKind]]] = {
    LinkKind.FIBER: [frozenset({NodeKind.ROADM})],
    LinkKind.CLIENT_ATTACH: [frozenset({NodeKind.TRANSPONDER, NodeKind.ROADM})],
    LinkKind.TRANSITIONAL: [
        frozenset({NodeKind.TRANSPONDER, NodeKind.ETH_SWITCH}),
        frozenset({NodeKind.TRANSPONDER, NodeKind.IP_HOST}),
        frozenset({NodeKind.ETH_SWITCH, NodeKind.IP_HOST}),
    ],
}


def _require(document: dict, key: str, kind: type, where: str):
    if key not in document:
        raise SchemaError(f"{where}: missing required key '{key}'")
    value = document[key]
    if kind is int and isinstance(value, bool):
        raise SchemaError(f"{where}: key '{key}' must be {kind.__name__}")
    if not isinstance(value, kind):
        raise SchemaError(f"{where}: key '{key}' must be {kind.__name__}")
    return value


def _parse_enum(enum_cls, raw, where: str):
    try:
        return enum_cls[raw] if not isinstance(raw, enum_cls) else raw
    except (KeyError, TypeError):
        allowed = ", ".join(m.name for m in enum_cls)
        raise SchemaError(f"{where}: '{raw}' is not one of {allowed}") from None


def _parse_capability(raw: dict, node_id: str) -> EncryptionCapability:
    if not isinstance(raw, dict):
        raise SchemaError(f"node {node_id}: capability must be an object")
    mechanism = _parse_enum(Mechanism, raw.get("mechanism"), f"node {node_id}")
    key_bits = raw.get("keyLengthBits")
    if not isinstance(key_bits, int) or isinstance(key_bits, bool):
        raise SchemaError(f"node {node_id}: keyLengthBits must be an integer")
    if key_bits not in ALLOWED_KEY_LENGTHS:
        raise InvariantError(
            f"keyLengthBits must be one of {ALLOWED_KEY_LENGTHS}, got {key_bits}",
            node_id,
        )
    layer = MECHANISM_LAYER[mechanism]
    if "layer" in raw:
        declared = _parse_enum(LayerId, raw["layer"], f"node {node_id}")
        if declared is not layer:
            raise InvariantError(
                f"capability {mechanism.value} belongs to {layer.name},"
                f" not {declared.name}",
                node_id,
            )
    return EncryptionCapability(layer=layer, mechanism=mechanism, key_length_bits=key_bits)


def _parse_node(raw: dict) -> Node:
    node_id = _require(raw, "id", str, "node")
    kind = _parse_enum(NodeKind, _require(raw, "kind", str, f"node {node_id}"), f"node {node_id}")
    layer = KIND_LAYER[kind]
    if "layer" in raw:
        declared = _parse_enum(LayerId, raw["layer"], f"node {node_id}")
        if declared is not layer:
            raise InvariantError(
                f"{kind.value} nodes live at {layer.name}, not {declared.name}", node_id
            )
    caps = frozenset(_parse_capability(c, node_id) for c in raw.get("capabilities", []))
    site_id = raw.get("siteId")
    if site_id is not None and not isinstance(site_id, str):
        raise SchemaError(f"node {node_id}: siteId must be a string")
    # Sites attach to client-facing devices; a ROADM cannot host one.
    if site_id is not None and kind is NodeKind.ROADM:
        raise InvariantError("ROADM nodes cannot carry a siteId", node_id)
    for cap in caps:
        if cap.layer is not layer:
            raise InvariantError(
                f"capability {cap.mechanism.value} ({cap.layer.name}) does not match"
                f" node layer {layer.name}",
                node_id,
            )
    return Node(id=node_id, kind=kind, layer=layer, capabilities=caps, site_id=site_id)


def _parse_link(raw: dict, defaults: dict) -> Link:
    link_id = _require(raw, "id", str, "link")
    where = f"link {link_id}"
    kind = _parse_enum(LinkKind, _require(raw, "kind", str, where), where)
    a_node = _require(raw, "aNode", str, where)
    b_node = _require(raw, "bNode", str, where)
    state = _parse_enum(LinkState, raw.get("state", "UP"), where)

    wavelength_count = None
    occupancy: dict[int, str] = {}
    if kind is LinkKind.FIBER:
        wavelength_count = raw.get("wavelengthCount", defaults["wavelengthCount"])
        if not isinstance(wavelength_count, int) or wavelength_count <= 0:
            raise SchemaError(f"{where}: wavelengthCount must be a positive integer")
        for idx_raw, service in raw.get("lambdaOccupancy", {}).items():
            try:
                idx = int(idx_raw)
            except (TypeError, ValueError):
                raise SchemaError(f"{where}: wavelength index '{idx_raw}' is not an integer")
            if not isinstance(service, str):
                raise SchemaError(f"{where}: occupancy values must be service ids")
            if idx < 0 or idx >= wavelength_count:
                raise InvariantError(
                    f"occupied wavelength {idx} outside 0..{wavelength_count - 1}", link_id
                )
            occupancy[idx] = service
    elif "wavelengthCount" in raw or "lambdaOccupancy" in raw:
        raise SchemaError(f"{where}: wavelength fields are only valid on FIBER links")

    if kind is LinkKind.FIBER:
        capacity_default = wavelength_count * defaults["lineRateMbps"]
    else:
        capacity_default = defaults["lineRateMbps"]
    capacity = raw.get("capacityMbps", capacity_default)
    if not isinstance(capacity, int) or isinstance(capacity, bool) or capacity <= 0:
        raise SchemaError(f"{where}: capacityMbps must be a positive integer")

    latency = raw.get("latencyMs", 0.0)
    if not isinstance(latency, (int, float)) or isinstance(latency, bool) or latency < 0:
        raise SchemaError(f"{where}: latencyMs must be a non-negative number")

    return Link(
        id=link_id,
        a_node=a_node,
        b_node=b_node,
        kind=kind,
        capacity_mbps=capacity,
        latency_ms=float(latency),
        state=state,
        wavelength_count=wavelength_count,
        lambda_occupancy=occupancy,
    )


def load_topology(document: dict) -> MultiLayerTopology:
    """Parse and validate a topology document; returns a topology at revision 0.

    Raises SchemaError for malformed documents and InvariantError (naming the
    offending element) for consistency violations such as dangling references
    or bad capability pairings.
    """
    if not isinstance(document, dict):
        raise SchemaError("topology document must be an object")
    defaults = {"wavelengthCount": 4, "lineRateMbps": 10000}
    raw_defaults = document.get("defaults", {})
    if not isinstance(raw_defaults, dict):
        raise SchemaError("defaults must be an object")
    defaults.update(raw_defaults)

    nodes: dict[str, Node] = {}
    for raw in _require(document, "nodes", list, "topology"):
        node = _parse_node(raw)
        if node.id in nodes:
            raise InvariantError("duplicate node id", node.id)
        nodes[node.id] = node

    links: dict[str, Link] = {}
    for raw in _require(document, "links", list, "topology"):
        link = _parse_link(raw, defaults)
        if link.id in links:
            raise InvariantError("duplicate link id", link.id)
        for endpoint in (link.a_node, link.b_node):
            if endpoint not in nodes:
                raise InvariantError("link endpoint references unknown node", endpoint)
        kinds = frozenset({nodes[link.a_node].kind, nodes[link.b_node].kind})
        if kinds not in _LINK_ENDPOINT_RULES[link.kind]:
            raise InvariantError(
                f"{link.kind.value} link cannot join"
                f" {nodes[link.a_node].kind.value} and {nodes[link.b_node].kind.value}",
                link.id,
            )
        links[link.id] = link

    # Sites: accept an explicit map (must agree with node fields) or derive it.
    declared_sites = {s: set(ns) for s, ns in nodes_site_map(nodes).items()}
    if "sites" in document:
        raw_sites = _require(document, "sites", dict, "topology")
        sites = {}
        for site_id, members in raw_sites.items():
            if not isinstance(members, list):
                raise SchemaError(f"site {site_id}: members must be a list of node ids")
            sites[site_id] = set(members)
        if sites != declared_sites:
            extra = set(sites) ^ set(declared_sites)
            offender = sorted(extra)[0] if extra else sorted(sites)[0]
            raise InvariantError(
                "sites map does not match node siteId fields", offender
            )
    else:
        sites = declared_sites

    for site_id, members in sites.items():
        for member in members:
            if member not in nodes:
                raise InvariantError(f"site {site_id} references unknown node", member)

    return MultiLayerTopology(
        nodes=nodes,
        links=links,
        sites=sites,
        revision=0,
        wavelength_count_default=defaults["wavelengthCount"],
        line_rate_mbps=defaults["lineRateMbps"],
    )


def nodes_site_map(nodes: dict[str, Node]) -> dict[str, set[str]]:
    sites: dict[str, set[str]] = {}
    for node in nodes.values():
        if node.site_id is not None:
            sites.setdefault(node.site_id, set()).add(node.id)
    return sites


def load_topology_path(path: str | Path) -> MultiLayerTopology:
    try:
        document = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
    return load_topology(document)


def serialize_topology(topology: MultiLayerTopology) -> dict:
    """Inverse of load_topology: emits the canonical document form."""
    nodes = []
    for node in sorted(topology.nodes.values(), key=lambda n: n.id):
        raw: dict = {"id": node.id, "kind": node.kind.value, "layer": node.layer.name}
        if node.capabilities:
            raw["capabilities"] = [
                {
                    "layer": c.layer.name,
                    "mechanism": c.mechanism.value,
                    "keyLengthBits": c.key_length_bits,
                }
                for c in sorted(
                    node.capabilities, key=lambda c: (c.mechanism.value, c.key_length_bits)
                )
            ]
        if node.site_id is not None:
            raw["siteId"] = node.site_id
        nodes.append(raw)

    links = []
    for link in sorted(topology.links.values(), key=lambda l: l.id):
        raw = {
            "id": link.id,
            "aNode": link.a_node,
            "bNode": link.b_node,
            "kind": link.kind.value,
            "capacityMbps": link.capacity_mbps,
            "latencyMs": link.latency_ms,
            "state": link.state.value,
        }
        if link.kind is LinkKind.FIBER:
            raw["wavelengthCount"] = link.wavelength_count
            raw["lambdaOccupancy"] = {
                str(i): s for i, s in sorted(link.lambda_occupancy.items())
            }
        links.append(raw)

    return {
        "defaults": {
            "wavelengthCount": topology.wavelength_count_default,
            "lineRateMbps": topology.line_rate_mbps,
        },
        "nodes": nodes,
        "links": links,
        "sites": {s: sorted(ns) for s, ns in sorted(topology.sites.items())},
    }


def apply_event(
    topology: MultiLayerTopology,
    event: TopologyEvent,
    ledger=None,
) -> tuple[MultiLayerTopology, list[str]]:
    """Apply a link up/down event; returns the topology and affected service ids.

    The revision increments on every applied event, including no-op state
    changes. Affected services are resolved through the resource ledger when
    one is supplied (the topology alone does not know which services ride an
    overlay link).
    """
    if event.kind not in EVENT_KINDS:
        raise SchemaError(f"unknown event kind: {event.kind}")
    link = topology.links.get(event.link_id)
    if link is None:
        raise UnknownLink(event.link_id)
    affected: list[str] = []
    if ledger is not None:
        affected = sorted(ledger.services_on_link(link.id))
    link.state = LinkState.DOWN if event.kind == "LINK_DOWN" else LinkState.UP
    topology.revision += 1
    return topology, affected


def reachable_attachments(
    topology: MultiLayerTopology, site_id: str
) -> dict[LayerId, set[tuple[str, Optional[EncryptionCapability]]]]:
    """Resolve a site into per-layer attachment points.

    Walks UP CLIENT_ATTACH/TRANSITIONAL links from the site's client devices
    without crossing ROADMs. A component only yields attachments if it is
    anchored to the optical layer, i.e. contains a transponder with an UP
    client-attach link to a ROADM; a site cut off from the optics cannot
    terminate any service, so every layer comes back empty.
    """
    if site_id not in topology.sites:
        raise UnknownSite(site_id)
    visited: set[str] = set()
    component: list[str] = []
    anchored: set[str] = set()
    frontier = sorted(topology.sites[site_id])
    while frontier:
        node_id = frontier.pop()
        if node_id in visited:
            continue
        visited.add(node_id)
        node = topology.node(node_id)
        if node.kind is NodeKind.ROADM:
            continue
        component.append(node_id)
        for link in topology.links_of(node_id):
            if link.kind is LinkKind.FIBER or link.state is not LinkState.UP:
                continue
            neighbor = topology.node(link.other(node_id))
            if neighbor.kind is NodeKind.ROADM:
                if node.kind is NodeKind.TRANSPONDER and link.kind is LinkKind.CLIENT_ATTACH:
                    anchored.add(node_id)
                continue
            if neighbor.id not in visited:
                frontier.append(neighbor.id)

    attachments: dict[LayerId, set[tuple[str, Optional[EncryptionCapability]]]] = {
        layer: set() for layer in LayerId
    }
    if not anchored:
        return attachments
    for node_id in component:
        node = topology.node(node_id)
        if node.kind is NodeKind.TRANSPONDER and node_id not in anchored:
            continue
        if node.capabilities:
            for cap in node.capabilities:
                attachments[node.layer].add((node_id, cap))
        else:
            attachments[node.layer].add((node_id, None))
    return attachments


def check_wavelength_soundness(topology: MultiLayerTopology) -> None:
    """Raise InvariantError if any fiber's occupancy exceeds its wavelength plan."""
    for link in topology.fiber_links():
        assert link.wavelength_count is not None
        if len(link.lambda_occupancy) > link.wavelength_count:
            raise InvariantError("more occupied wavelengths than the fiber carries", link.id)
        for idx in link.lambda_occupancy:
            if idx < 0 or idx >= link.wavelength_count:
                raise InvariantError(f"occupied wavelength {idx} out of range", link.id)
