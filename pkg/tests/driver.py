"""Seeded random command driver for whole-orchestrator property suites."""

import random

from acino.errors import OrchestratorError

SITES = ["A1", "A2", "A3", "B1", "B2", "B3"]
FIBERS = ["FIBER-R1-R2", "FIBER-R1-R3", "FIBER-R2-R3"]
CLIENT_LINKS = ["TR-S1-T1", "TR-S2-T3A", "TR-H1-T2", "TR-H2-T3B", "CA-ET1-R1", "CA-T2-R2"]


def random_request(rng: random.Random) -> dict:
    src, dst = rng.sample(SITES, 2)
    required = rng.random() < 0.7
    request = {
        "src": src,
        "dst": dst,
        "bandwidthMbps": rng.choice([500, 1000, 2500, 5000, 10000]),
        "encryption": {"required": required},
    }
    if required:
        request["encryption"]["compliance"] = rng.choice(["NONE", "GENERIC", "BSI", "HIPAA"])
        if rng.random() < 0.25:
            layers = ["L0_OPTICAL", "L2_ETHERNET", "L3_IP"]
            rng.shuffle(layers)
            request["encryption"]["layerPreference"] = layers[: rng.randint(1, 3)]
    if rng.random() < 0.2:
        request["maxLatencyMs"] = rng.choice([1.3, 1.5, 2.5])
    return request


def random_step(rng: random.Random, orchestrator) -> str:
    """Apply one random command; expected domain errors are tolerated."""
    roll = rng.random()
    try:
        if roll < 0.45:
            orchestrator.submit(random_request(rng))
            return "submit"
        if roll < 0.65:
            known = sorted(orchestrator.intents)
            if known:
                orchestrator.withdraw(rng.choice(known))
                return "withdraw"
            orchestrator.submit(random_request(rng))
            return "submit"
        if roll < 0.80:
            orchestrator.inject_event("LINK_DOWN", rng.choice(FIBERS + CLIENT_LINKS))
            return "link-down"
        if roll < 0.95:
            orchestrator.inject_event("LINK_UP", rng.choice(FIBERS + CLIENT_LINKS))
            return "link-up"
        orchestrator.submit({"src": "A1", "dst": "A1", "bandwidthMbps": 0})
        return "bad-submit"
    except OrchestratorError:
        return "rejected"


def intent_snapshot(orchestrator) -> dict:
    return {
        intent_id: {
            "state": intent.state.value,
            "history": [
                (change.state.value, change.sequence, change.reason)
                for change in intent.state_history
            ],
        }
        for intent_id, intent in orchestrator.intents.items()
    }


def device_snapshot(orchestrator) -> dict:
    return {
        device_id: sorted(agent.state.applied_configs)
        for device_id, agent in orchestrator.registry.agents.items()
        if agent.state.applied_configs
    }


def full_snapshot(orchestrator) -> dict:
    return {
        "intents": intent_snapshot(orchestrator),
        "ledger": orchestrator.ledger.snapshot(),
        "devices": device_snapshot(orchestrator),
        "revision": orchestrator.topology.revision,
    }
