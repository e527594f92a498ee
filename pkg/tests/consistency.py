"""Cross-checks between ledger, topology occupancy, intent states and devices.

Called between commands, when the system should be quiescent: live
reservations belong exactly to INSTALLED intents, every occupied wavelength
maps to a live lightpath with riders, device applied-configs mirror the
records' committed messages, every installed service's path is fully UP, and
encryption-required services trace end-to-end with no uncovered link (the
artifact's core theorem).
"""

from acino.intents import IntentState
from acino.southbound import trace
from acino.topology import LinkState


def check_consistency(orchestrator) -> None:
    topology = orchestrator.topology
    ledger = orchestrator.ledger
    registry = orchestrator.registry

    for link in topology.fiber_links():
        assert link.wavelength_count is not None
        assert len(link.lambda_occupancy) <= link.wavelength_count, link.id
        for index, lightpath_id in link.lambda_occupancy.items():
            assert 0 <= index < link.wavelength_count, link.id
            lightpath = ledger.lightpaths.get(lightpath_id)
            assert lightpath is not None, f"{link.id} λ{index} maps to dead {lightpath_id}"
            assert link.id in lightpath.roadm_path
            assert lightpath.wavelength_index == index

    for lightpath in ledger.lightpaths.values():
        assert lightpath.services, f"{lightpath.id} has no riders"
        for fiber in lightpath.roadm_path:
            occupancy = topology.link(fiber).lambda_occupancy
            assert occupancy.get(lightpath.wavelength_index) == lightpath.id
        riders_bandwidth = sum(
            ledger.records[s].solution.requested_bandwidth_mbps
            for s in lightpath.services
        )
        assert lightpath.used_mbps == riders_bandwidth
        assert 0 <= lightpath.used_mbps <= lightpath.capacity_mbps

    for link_id, per_service in ledger.bandwidth.items():
        link = topology.link(link_id)
        assert sum(per_service.values()) <= link.capacity_mbps, link_id
        for service in per_service:
            assert service in ledger.records, f"{link_id} holds stale {service}"

    installed = {
        intent_id
        for intent_id, intent in orchestrator.intents.items()
        if intent.state is IntentState.INSTALLED
    }
    assert installed == set(ledger.records), (
        f"records {sorted(ledger.records)} vs INSTALLED {sorted(installed)}"
    )

    expected_configs: dict[str, set[str]] = {}
    for record in ledger.records.values():
        assert record.message_ids, f"{record.intent_id} installed without messages"
        for message_id, op in zip(record.message_ids, record.solution.operations):
            expected_configs.setdefault(op.device_id, set()).add(message_id)
    for device_id, agent in registry.agents.items():
        assert not agent.state.pending_configs, f"{device_id} left staged configs"
        assert set(agent.state.applied_configs) == expected_configs.get(device_id, set()), (
            f"{device_id} configs diverge from ledger"
        )

    # An installed service rides only UP links, and when it promised
    # encryption, the traced data path is fully covered end to end.
    for record in ledger.records.values():
        for link_id in (*record.solution.optical_path, *record.solution.overlay_path):
            assert topology.link(link_id).state is LinkState.UP, (
                f"{record.intent_id} is INSTALLED over down link {link_id}"
            )
        intent = orchestrator.intents[record.intent_id]
        result = trace(intent.src, intent.dst, topology, registry)
        assert result.reached_destination, f"{record.intent_id} does not trace"
        if intent.encryption.required:
            assert result.uncovered_links == [], (
                f"{record.intent_id} leaves {result.uncovered_links} unencrypted"
            )
