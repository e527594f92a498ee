#!/usr/bin/env python3
"""Fill the ring with full-rate lightpaths and watch first-fit RWA at work.

Submits identical full-line-rate requests between the encryption-transponder
sites until the compiler reports wavelength exhaustion, printing the chosen
arc and wavelength for each, then the per-fiber occupancy map.

    python3 scripts/saturation_experiment.py [--bandwidth MBPS]
"""

import argparse
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from acino.core import Orchestrator, OrchestratorConfig

ROOT = Path(__file__).resolve().parent.parent


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--bandwidth", type=int, default=10000,
                        help="per-request bandwidth; full rate defeats grooming")
    args = parser.parse_args()

    log_dir = Path(tempfile.mkdtemp())
    orchestrator = Orchestrator(OrchestratorConfig(
        topology_path=str(ROOT / "topologies" / "acino-ring.json"),
        compliance_path=str(ROOT / "config" / "compliance.json"),
        log_path=str(log_dir / "events.log"),
    ))

    request = {
        "src": "A1", "dst": "B1", "bandwidthMbps": args.bandwidth,
        "encryption": {"required": True, "compliance": "GENERIC"},
    }
    round_no = 0
    while True:
        round_no += 1
        view = orchestrator.submit(request)
        if view["state"] != "INSTALLED":
            reason = orchestrator.intents[view["id"]].state_history[-1].reason
            print(f"request {round_no}: {view['state']} ({reason})")
            break
        record = orchestrator.ledger.records[view["id"]]
        solution = record.solution
        path = "+".join(solution.optical_path) or "(local)"
        groomed = f" groomed onto {solution.groomed_lightpath}" if solution.groomed_lightpath else ""
        print(f"request {round_no}: λ{solution.wavelength_index} on {path}{groomed}")
        if round_no > 64:
            print("stopping: grooming keeps absorbing sub-rate requests")
            break

    print("\nper-fiber occupancy:")
    for link in orchestrator.topology.fiber_links():
        slots = [
            link.lambda_occupancy.get(i, "-") for i in range(link.wavelength_count)
        ]
        print(f"  {link.id}: {slots}")
    orchestrator.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
