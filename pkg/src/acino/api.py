"""Northbound HTTP API over the orchestrator core, plus the server entry point."""

from __future__ import annotations

import logging
from pathlib import Path
import click
from fastapi import Body, FastAPI
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .core import Orchestrator, OrchestratorConfig
from .errors import (
    IllegalTransition,
    OrchestratorError,
    UnknownIntent,
    UnknownLink,
    UnknownSite,
    ValidationError,
)

logger = logging.getLogger(__name__)


def _error_body(exc: OrchestratorError) -> dict:
    body = {"error": type(exc).__name__, "detail": str(exc)}
    if isinstance(exc, ValidationError):
        body["reasons"] = exc.reasons
    return body


def create_app(orchestrator: Orchestrator) -> FastAPI:
    app = FastAPI(title="acino orchestrator", version="0.1.0")
    app.state.orchestrator = orchestrator
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(OrchestratorError)
    async def handle_domain_error(_, exc: OrchestratorError):
        if isinstance(exc, (UnknownIntent, UnknownSite, UnknownLink)):
            status = 404
        elif isinstance(exc, IllegalTransition):
            status = 409
        else:
            status = 400
        return JSONResponse(status_code=status, content=_error_body(exc))

    @app.post("/intents", status_code=201)
    def submit_intent(request: dict = Body(...)):
        return orchestrator.submit(request)

    @app.get("/intents")
    def list_intents():
        return orchestrator.query("intents")

    @app.get("/intents/{intent_id}")
    def get_intent(intent_id: str):
        return orchestrator.query("intent", id=intent_id)

    @app.delete("/intents/{intent_id}")
    def withdraw_intent(intent_id: str):
        return orchestrator.withdraw(intent_id)

    @app.get("/services/{intent_id}")
    def get_service(intent_id: str):
        return orchestrator.query("service", id=intent_id)

    @app.post("/explain")
    def explain(request: dict = Body(...)):
        return orchestrator.explain(request)

    @app.get("/topology")
    def get_topology():
        return orchestrator.query("topology")

    @app.post("/topology/events")
    def inject_event(event: dict = Body(...)):
        return orchestrator.inject_event(event.get("kind", ""), event.get("linkId", ""))

    @app.get("/devices/{device_id}")
    def get_device(device_id: str):
        return orchestrator.query("device", id=device_id)

    @app.get("/trace")
    def run_trace(src: str, dst: str):
        return orchestrator.query("trace", src=src, dst=dst)

    return app


@click.command()
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="JSON config file; flags override its values.")
@click.option("--port", type=int, default=None, help="Listen port (default 8088).")
@click.option("--topology", "topology_path", type=click.Path(), default=None,
              help="Topology file (default topologies/acino-ring.json).")
@click.option("--compliance", "compliance_path", type=click.Path(), default=None,
              help="Compliance profile table (default: built-in profiles).")
@click.option("--log", "log_path", type=click.Path(), default=None,
              help="Event log path (default logs/events.log).")
@click.option("--southbound-log", "southbound_log_path", type=click.Path(), default=None,
              help="Southbound message log (default logs/southbound.log).")
@click.option("--ui-dir", type=click.Path(), default=None,
              help="Serve a built web console from this directory at /ui.")
def main(config_path, port, topology_path, compliance_path, log_path,
         southbound_log_path, ui_dir):
    """Run the orchestrator service."""
    import uvicorn

    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(name)s %(message)s")
    if config_path:
        config = OrchestratorConfig.from_file(config_path)
    else:
        config = OrchestratorConfig(
            topology_path="topologies/acino-ring.json",
            log_path="logs/events.log",
            southbound_log_path="logs/southbound.log",
        )
    if topology_path:
        config.topology_path = topology_path
    if compliance_path:
        config.compliance_path = compliance_path
    if log_path:
        config.log_path = log_path
    if southbound_log_path:
        config.southbound_log_path = southbound_log_path
    if port:
        config.port = port

    orchestrator = Orchestrator(config)
    app = create_app(orchestrator)
    if ui_dir and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")
    try:
        uvicorn.run(app, host="127.0.0.1", port=config.port, log_level="warning")
    finally:
        orchestrator.close()


if __name__ == "__main__":
    main()
