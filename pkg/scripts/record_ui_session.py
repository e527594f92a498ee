#!/usr/bin/env python3
"""Record the web console's scripted session against a real orchestrator.

Performs exactly the API call sequence the console's session contract test
replays (submit → observe INSTALLED → fail link → observe failover →
withdraw) and writes the transcript to frontend/tests/fixtures/session.json.
Re-run after any API change, then re-run the frontend tests.
"""

import json
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from fastapi.testclient import TestClient

from acino.api import create_app
from acino.core import Orchestrator, OrchestratorConfig

FIXTURE = ROOT / "frontend" / "tests" / "fixtures" / "session.json"

REQUEST = {
    "src": "A1",
    "dst": "B1",
    "bandwidthMbps": 1000,
    "encryption": {"required": True, "compliance": "GENERIC"},
}


def main() -> int:
    log_dir = Path(tempfile.mkdtemp())
    orchestrator = Orchestrator(OrchestratorConfig(
        topology_path=str(ROOT / "topologies" / "acino-ring.json"),
        compliance_path=str(ROOT / "config" / "compliance.json"),
        log_path=str(log_dir / "events.log"),
    ))
    transcript = []

    with TestClient(create_app(orchestrator)) as client:
        def call(method: str, path: str, body=None):
            response = client.request(method, path, json=body)
            transcript.append({
                "method": method,
                "path": path,
                "status": response.status_code,
                "body": response.json(),
            })
            return response.json()

        call("GET", "/topology")
        call("GET", "/intents")
        submitted = call("POST", "/intents", REQUEST)
        intent_id = submitted["id"]
        call("GET", "/intents")
        call("GET", f"/services/{intent_id}")
        call("GET", f"/intents/{intent_id}")
        service = call("GET", f"/services/{intent_id}")
        call("GET", "/topology")

        failed_fiber = service["solution"]["opticalPath"][0]
        call("POST", "/topology/events", {"kind": "LINK_DOWN", "linkId": failed_fiber})
        call("GET", "/topology")
        call("GET", "/intents")
        call("GET", f"/services/{intent_id}")
        call("GET", f"/intents/{intent_id}")
        call("GET", f"/services/{intent_id}")
        call("DELETE", f"/intents/{intent_id}")
        call("GET", "/intents")

    orchestrator.close()
    FIXTURE.parent.mkdir(parents=True, exist_ok=True)
    FIXTURE.write_text(json.dumps({
        "intentId": intent_id,
        "failedFiber": failed_fiber,
        "request": REQUEST,
        "calls": transcript,
    }, indent=2))
    print(f"recorded {len(transcript)} calls to {FIXTURE}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
