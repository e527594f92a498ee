#!/usr/bin/env python3
"""Desk demo: provision encrypted services on all three layers, then fail over.

Runs an in-process orchestrator (no HTTP server needed), submits one
encrypted intent per layer, traces each service, kills the fiber under the
optical service and shows the recompiled path.

    python3 scripts/run_demo.py [--keep-logs DIR]
"""

import argparse
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from acino.core import Orchestrator, OrchestratorConfig

ROOT = Path(__file__).resolve().parent.parent

PAIRS = [("A1", "B1"), ("A2", "B2"), ("A3", "B3")]


def show(orchestrator, intent_id, src, dst):
    record = orchestrator.ledger.records.get(intent_id)
    intent = orchestrator.intents[intent_id]
    if record is None:
        print(f"  {intent_id} {src}<->{dst}: {intent.state.value}")
        return
    solution = record.solution
    path = "+".join(solution.optical_path) or "(local)"
    print(
        f"  {intent_id} {src}<->{dst}: {intent.state.value} layer={solution.layer.name}"
        f" mech={solution.mechanism.value if solution.mechanism else '-'}"
        f" path={path} λ{solution.wavelength_index}"
        f" latency={solution.total_latency_ms:.2f}ms"
    )
    result = orchestrator.query("trace", src=src, dst=dst)
    uncovered = result["uncoveredLinks"]
    print(
        f"    trace: reached={result['reachedDestination']}"
        f" uncovered={'none' if not uncovered else ','.join(uncovered)}"
    )


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--keep-logs", metavar="DIR", default=None,
                        help="write event/southbound logs here instead of a temp dir")
    args = parser.parse_args()

    log_dir = Path(args.keep_logs) if args.keep_logs else Path(tempfile.mkdtemp())
    orchestrator = Orchestrator(OrchestratorConfig(
        topology_path=str(ROOT / "topologies" / "acino-ring.json"),
        compliance_path=str(ROOT / "config" / "compliance.json"),
        log_path=str(log_dir / "events.log"),
        southbound_log_path=str(log_dir / "southbound.log"),
    ))

    print("== provisioning one encrypted service per layer ==")
    ids = {}
    for src, dst in PAIRS:
        view = orchestrator.submit({
            "src": src, "dst": dst, "bandwidthMbps": 1000,
            "encryption": {"required": True, "compliance": "GENERIC"},
        })
        ids[(src, dst)] = view["id"]
        show(orchestrator, view["id"], src, dst)

    optical_id = ids[("A1", "B1")]
    fiber = orchestrator.ledger.records[optical_id].solution.optical_path[0]
    print(f"\n== failing {fiber} under the optical service ==")
    outcome = orchestrator.inject_event("LINK_DOWN", fiber)
    for result in outcome["results"]:
        print(f"  recompiled {result['intentId']} -> {result['state']}")
    for (src, dst), intent_id in ids.items():
        show(orchestrator, intent_id, src, dst)

    print("\n== withdrawing everything ==")
    for (src, dst), intent_id in ids.items():
        final = orchestrator.withdraw(intent_id)
        print(f"  {intent_id}: {final['state']}")
    leftovers = sum(len(l.lambda_occupancy) for l in orchestrator.topology.fiber_links())
    print(f"occupied wavelengths after teardown: {leftovers}")
    print(f"logs in {log_dir}")
    orchestrator.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
