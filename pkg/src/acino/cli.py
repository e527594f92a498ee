"""Operator command-line client for the orchestrator API.

Thin by design: every subcommand is one or two API calls plus formatting.
Structured mode (--json) prints the server's response body verbatim so output
can be piped back into scripts or diffed in golden tests.

Exit codes: 0 success, 1 intent ended non-INSTALLED, 2 usage/validation,
3 transport failure, 4 server-reported error.
"""

from __future__ import annotations

import json
import sys
import time
from dataclasses import dataclass
from urllib.parse import urlparse

import click
import httpx

POLL_INTERVAL_S = 0.2
POLL_TIMEOUT_S = 10.0

EXIT_USAGE = 2
EXIT_TRANSPORT = 3
EXIT_SERVER = 4


@dataclass
class CliConfig:
    endpoint: str
    output_mode: str  # "human" | "structured"

    def client(self) -> httpx.Client:
        return httpx.Client(base_url=self.endpoint, timeout=15.0)


def _fail(code: int, message: str):
    click.echo(message, err=True)
    sys.exit(code)


def _request(config: CliConfig, method: str, path: str, body=None,
             params=None) -> httpx.Response:
    try:
        with config.client() as client:
            response = client.request(method, path, json=body, params=params)
    except httpx.TransportError as exc:
        _fail(EXIT_TRANSPORT, f"cannot reach {config.endpoint}: {exc}")
    return response


def _server_error(response: httpx.Response, code: int = EXIT_SERVER):
    try:
        body = response.json()
        detail = body.get("detail", response.text)
        reasons = body.get("reasons")
    except ValueError:
        detail, reasons = response.text, None
    message = f"server error ({response.status_code}): {detail}"
    if reasons:
        message += "\n" + "\n".join(f"  - {r}" for r in reasons)
    _fail(code, message)


def _emit(config: CliConfig, response: httpx.Response, human) -> None:
    if config.output_mode == "structured":
        click.echo(response.text)
    else:
        click.echo(human(response.json()))


def _table(headers: list[str], rows: list[list[str]]) -> str:
    if not rows:
        rows = []
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(str(cell)))
    lines = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(headers))]
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append("  ".join(str(c).ljust(widths[i]) for i, c in enumerate(row)))
    return "\n".join(lines)


def _load_request_file(path: str) -> dict:
    try:
        with open(path) as handle:
            return json.load(handle)
    except OSError as exc:
        _fail(EXIT_USAGE, f"cannot read {path}: {exc}")
    except json.JSONDecodeError as exc:
        _fail(EXIT_USAGE, f"{path} is not valid JSON: {exc}")


@click.group()
@click.option("--endpoint", envvar="ACINO_ENDPOINT", default="http://127.0.0.1:8088",
              show_default=True, help="Orchestrator base URL.")
@click.option("--json", "json_mode", is_flag=True, help="Emit raw API responses.")
@click.pass_context
def main(ctx, endpoint: str, json_mode: bool):
    """Talk to a running orchestrator: submit intents, inspect state, inject faults."""
    parsed = urlparse(endpoint)
    if parsed.scheme not in ("http", "https") or not parsed.netloc:
        _fail(EXIT_USAGE, f"malformed endpoint: {endpoint}")
    ctx.obj = CliConfig(endpoint=endpoint, output_mode="structured" if json_mode else "human")


@main.command()
@click.argument("request_file", type=click.Path())
@click.pass_obj
def submit(config: CliConfig, request_file: str):
    """Submit an intent request file and wait for its terminal state."""
    request = _load_request_file(request_file)
    response = _request(config, "POST", "/intents", body=request)
    if response.status_code == 400:
        _server_error(response, code=EXIT_USAGE)
    if response.status_code != 201:
        _server_error(response)
    intent = response.json()
    intent_id = intent["id"]
    deadline = time.monotonic() + POLL_TIMEOUT_S
    while intent["state"] not in ("INSTALLED", "FAILED", "WITHDRAWN"):
        if time.monotonic() > deadline:
            _fail(1, f"{intent_id}: still {intent['state']} after {POLL_TIMEOUT_S:.0f}s")
        time.sleep(POLL_INTERVAL_S)
        poll = _request(config, "GET", f"/intents/{intent_id}")
        if poll.status_code != 200:
            _server_error(poll)
        intent = poll.json()

    if config.output_mode == "structured":
        click.echo(json.dumps(intent))
    else:
        click.echo(f"{intent_id} {intent['state']}")
        if intent["state"] != "INSTALLED":
            last = intent["stateHistory"][-1]
            click.echo(f"reason: {last['reason']}")
    sys.exit(0 if intent["state"] == "INSTALLED" else 1)


@main.command()
@click.argument("intent_id", required=False)
@click.pass_obj
def status(config: CliConfig, intent_id: str | None):
    """Show all intents, or one intent with its state history."""
    if intent_id is None:
        response = _request(config, "GET", "/intents")
        if response.status_code != 200:
            _server_error(response)

        def human(body):
            rows = [
                [i["id"], i["src"], i["dst"], i["bandwidthMbps"],
                 "yes" if i["encryption"]["required"] else "no", i["state"]]
                for i in body["intents"]
            ]
            return _table(["ID", "SRC", "DST", "MBPS", "ENC", "STATE"], rows)

        _emit(config, response, human)
        return
    response = _request(config, "GET", f"/intents/{intent_id}")
    if response.status_code != 200:
        _server_error(response)

    def human(body):
        head = (
            f"{body['id']}: {body['src']} <-> {body['dst']} "
            f"{body['bandwidthMbps']} Mbps state={body['state']}"
        )
        rows = [[c["sequence"], c["state"], c["reason"]] for c in body["stateHistory"]]
        return head + "\n" + _table(["SEQ", "STATE", "REASON"], rows)

    _emit(config, response, human)


@main.command()
@click.argument("intent_id")
@click.pass_obj
def withdraw(config: CliConfig, intent_id: str):
    """Withdraw an installed or failed intent."""
    response = _request(config, "DELETE", f"/intents/{intent_id}")
    if response.status_code != 200:
        _server_error(response)
    _emit(config, response, lambda body: f"{body['id']} {body['state']}")


@main.command()
@click.argument("request_file", type=click.Path())
@click.pass_obj
def explain(config: CliConfig, request_file: str):
    """Rank the compiler's candidates for a request without installing it."""
    request = _load_request_file(request_file)
    response = _request(config, "POST", "/explain", body=request)
    if response.status_code == 400:
        _server_error(response, code=EXIT_USAGE)
    if response.status_code != 200:
        _server_error(response)

    def human(body):
        rows = [
            [
                c["layer"],
                c["mechanism"] or "-",
                "+".join(c["path"]) or "(local)",
                c["lambda"] if c["lambda"] is not None else "-",
                "yes" if c["feasible"] else "no",
                c["reason"],
            ]
            for c in body["candidates"]
        ]
        out = _table(["LAYER", "MECH", "PATH", "LAMBDA", "FEASIBLE", "REASON"], rows)
        if body.get("notice"):
            out += f"\nnotice: {body['notice']}"
        return out

    _emit(config, response, human)


@main.command()
@click.pass_obj
def topology(config: CliConfig):
    """Show the current topology snapshot with wavelength occupancy."""
    response = _request(config, "GET", "/topology")
    if response.status_code != 200:
        _server_error(response)

    def human(body):
        node_rows = [
            [n["id"], n["kind"], n.get("siteId", "-"),
             ",".join(c["mechanism"] for c in n.get("capabilities", [])) or "-"]
            for n in body["nodes"]
        ]
        link_rows = []
        for l in body["links"]:
            occupancy = "-"
            if l["kind"] == "FIBER":
                occupied = l.get("lambdaOccupancy", {})
                occupancy = f"{len(occupied)}/{l['wavelengthCount']}"
                if occupied:
                    occupancy += " (" + ",".join(
                        f"λ{i}" for i in sorted(occupied, key=int)) + ")"
            link_rows.append([l["id"], l["kind"], l["state"], occupancy])
        return (
            f"revision {body['revision']}\n"
            + _table(["NODE", "KIND", "SITE", "CAPS"], node_rows)
            + "\n\n"
            + _table(["LINK", "KIND", "STATE", "LAMBDAS"], link_rows)
        )

    _emit(config, response, human)


@main.command()
@click.argument("src")
@click.argument("dst")
@click.pass_obj
def trace(config: CliConfig, src: str, dst: str):
    """Trace the installed data path between two sites."""
    response = _request(config, "GET", "/trace", params={"src": src, "dst": dst})
    if response.status_code != 200:
        _server_error(response)

    def human(body):
        rows = []
        for hop in body["hops"]:
            enc = hop["encryptedBy"]
            rows.append([
                hop["deviceId"],
                hop["linkId"],
                f"{enc['layer']}/{enc['mechanism']}" if enc else "(clear)",
            ])
        out = _table(["FROM", "LINK", "ENCRYPTION"], rows)
        out += "\nreached destination: " + ("yes" if body["reachedDestination"] else "no")
        uncovered = body["uncoveredLinks"]
        out += "\nuncovered links: " + (", ".join(uncovered) if uncovered else "none")
        return out

    _emit(config, response, human)


def _inject(config: CliConfig, kind: str, link_id: str):
    response = _request(
        config, "POST", "/topology/events", body={"kind": kind, "linkId": link_id}
    )
    if response.status_code != 200:
        _server_error(response)

    def human(body):
        if not body["results"]:
            return f"revision {body['revision']}; no services affected"
        rows = [[r["intentId"], r["state"]] for r in body["results"]]
        return f"revision {body['revision']}\n" + _table(["INTENT", "STATE"], rows)

    _emit(config, response, human)


@main.command()
@click.argument("link_id")
@click.pass_obj
def fail(config: CliConfig, link_id: str):
    """Take a link down; prints the recompilation outcome per affected intent."""
    _inject(config, "LINK_DOWN", link_id)


@main.command()
@click.argument("link_id")
@click.pass_obj
def restore(config: CliConfig, link_id: str):
    """Bring a link back up (installed services are not re-optimized)."""
    _inject(config, "LINK_UP", link_id)


if __name__ == "__main__":
    main()
