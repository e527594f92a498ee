import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make oracle/consistency importable

from acino.core import Orchestrator, OrchestratorConfig
from acino.intents import ComplianceProfileTable
from acino.topology import load_topology_path

REPO_ROOT = Path(__file__).resolve().parent.parent
TOPOLOGY_FILE = REPO_ROOT / "topologies" / "acino-ring.json"
COMPLIANCE_FILE = REPO_ROOT / "config" / "compliance.json"


@pytest.fixture
def ring():
    """Fresh reference topology for every test."""
    return load_topology_path(TOPOLOGY_FILE)


@pytest.fixture(scope="session")
def profiles():
    return ComplianceProfileTable.from_path(COMPLIANCE_FILE)


@pytest.fixture
def orchestrator_factory(tmp_path):
    """Builds orchestrators on throwaway logs; restarting = same log name again."""
    created = []

    def make(log_name="events.log", fault_config=None, topology_path=None):
        config = OrchestratorConfig(
            topology_path=str(topology_path or TOPOLOGY_FILE),
            log_path=str(tmp_path / log_name),
            compliance_path=str(COMPLIANCE_FILE),
            southbound_log_path=str(tmp_path / f"southbound-{log_name}"),
            install_timeout_s=1.0,
            fault_config=fault_config or {},
        )
        orch = Orchestrator(config)
        created.append(orch)
        return orch

    yield make
    for orch in created:
        orch.close()


def connect_request(src, dst, bandwidth=1000, required=True, compliance="GENERIC",
                    preference=None, max_latency=None):
    request = {
        "src": src,
        "dst": dst,
        "bandwidthMbps": bandwidth,
        "encryption": {"required": required},
    }
    if required:
        request["encryption"]["compliance"] = compliance
        if preference:
            request["encryption"]["layerPreference"] = preference
    if max_latency is not None:
        request["maxLatencyMs"] = max_latency
    return request
