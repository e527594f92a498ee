/**
 * Pure renderers: ViewModel in, markup string out.
 *
 * No DOM access happens here, which is what lets the session contract test
 * assert on the rendered topology without a browser. The browser entry point
 * assigns these strings to innerHTML and wires events by delegation.
 */

import type { ViewModel } from "./store.js";
import type { LinkView, NodeView, ServiceView, TopologySnapshot } from "./types.js";

interface Point {
  x: number;
  y: number;
}

const WIDTH = 860;
const HEIGHT = 560;
const CENTER: Point = { x: WIDTH / 2, y: HEIGHT / 2 };
const ROADM_RADIUS = 130;
const TRANSPONDER_RADIUS = 230;
const CLIENT_RADIUS = 320;

const LAYER_CLASS: Record<string, string> = {
  L0_OPTICAL: "enc-l0",
  L2_ETHERNET: "enc-l2",
  L3_IP: "enc-l3",
};

function escapeXml(raw: string): string {
  return raw
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function tag(
  name: string,
  attrs: Record<string, string | number>,
  children = "",
): string {
  const rendered = Object.entries(attrs)
    .map(([key, value]) => `${key}="${escapeXml(String(value))}"`)
    .join(" ");
  return children === ""
    ? `<${name} ${rendered}/>`
    : `<${name} ${rendered}>${children}</${name}>`;
}

/** Deterministic layout: ROADMs on a ring, clients fanned outwards. */
export function layoutNodes(topology: TopologySnapshot): Record<string, Point> {
  const positions: Record<string, Point> = {};
  const roadms = topology.nodes
    .filter((n) => n.kind === "ROADM")
    .map((n) => n.id)
    .sort();
  roadms.forEach((id, index) => {
    const angle = (2 * Math.PI * index) / Math.max(roadms.length, 1) - Math.PI / 2;
    positions[id] = {
      x: CENTER.x + ROADM_RADIUS * Math.cos(angle),
      y: CENTER.y + ROADM_RADIUS * Math.sin(angle),
    };
  });

  const neighbors = (nodeId: string, kinds: string[]): string[] =>
    topology.links
      .filter((l) => kinds.includes(l.kind) && (l.aNode === nodeId || l.bNode === nodeId))
      .map((l) => (l.aNode === nodeId ? l.bNode : l.aNode))
      .sort();

  for (const roadm of roadms) {
    const transponders = neighbors(roadm, ["CLIENT_ATTACH"]).filter(
      (id) => !(id in positions),
    );
    const base = Math.atan2(
      positions[roadm].y - CENTER.y,
      positions[roadm].x - CENTER.x,
    );
    transponders.forEach((transponder, index) => {
      const spread = (index - (transponders.length - 1) / 2) * 0.42;
      positions[transponder] = {
        x: CENTER.x + TRANSPONDER_RADIUS * Math.cos(base + spread),
        y: CENTER.y + TRANSPONDER_RADIUS * Math.sin(base + spread),
      };
      for (const client of neighbors(transponder, ["TRANSITIONAL"])) {
        if (client in positions) continue;
        positions[client] = {
          x: CENTER.x + CLIENT_RADIUS * Math.cos(base + spread),
          y: CENTER.y + CLIENT_RADIUS * Math.sin(base + spread),
        };
      }
    });
  }
  // Anything untouched (isolated nodes) parks in a corner row.
  let leftover = 0;
  for (const node of topology.nodes) {
    if (!(node.id in positions)) {
      positions[node.id] = { x: 40 + 60 * leftover, y: HEIGHT - 30 };
      leftover += 1;
    }
  }
  return positions;
}

/** linkId -> encryption layer currently riding it (lowest layer wins). */
export function encryptionOverlay(model: ViewModel): Record<string, string> {
  const overlay: Record<string, string> = {};
  const order = ["L0_OPTICAL", "L2_ETHERNET", "L3_IP"];
  const services = Object.values(model.services).sort((a, b) =>
    a.intentId.localeCompare(b.intentId),
  );
  const intentById = new Map(model.intents.map((i) => [i.id, i]));
  for (const service of services) {
    const intent = intentById.get(service.intentId);
    if (intent !== undefined && intent.state !== "INSTALLED") continue;
    if (intent !== undefined && !intent.encryption.required) continue;
    const layer = service.solution.layer;
    for (const linkId of [
      ...service.solution.opticalPath,
      ...service.solution.overlayPath,
    ]) {
      const current = overlay[linkId];
      if (current === undefined || order.indexOf(layer) < order.indexOf(current)) {
        overlay[linkId] = layer;
      }
    }
  }
  return overlay;
}

function nodeGlyph(node: NodeView, point: Point): string {
  const label = tag(
    "text",
    { x: point.x, y: point.y + 4, class: "node-label", "text-anchor": "middle" },
    escapeXml(node.id),
  );
  const site = node.siteId
    ? tag(
        "text",
        { x: point.x, y: point.y + 26, class: "site-label", "text-anchor": "middle" },
        escapeXml(`site ${node.siteId}`),
      )
    : "";
  const common = { "data-node-id": node.id, class: `node ${node.kind.toLowerCase()}` };
  if (node.kind === "ROADM") {
    return tag("circle", { ...common, cx: point.x, cy: point.y, r: 18 }) + label + site;
  }
  if (node.kind === "TRANSPONDER") {
    return (
      tag("rect", { ...common, x: point.x - 16, y: point.y - 10, width: 32, height: 20, rx: 3 }) +
      label +
      site
    );
  }
  return (
    tag("rect", { ...common, x: point.x - 18, y: point.y - 13, width: 36, height: 26, rx: 8 }) +
    label +
    site
  );
}

function linkGlyph(
  link: LinkView,
  positions: Record<string, Point>,
  overlay: Record<string, string>,
): string {
  const a = positions[link.aNode];
  const b = positions[link.bNode];
  if (a === undefined || b === undefined) return "";
  const classes = ["link", link.kind.toLowerCase()];
  if (link.state === "DOWN") classes.push("down");
  const layer = overlay[link.id];
  if (layer !== undefined && link.state === "UP") classes.push(LAYER_CLASS[layer]);
  const line = tag("line", {
    x1: a.x,
    y1: a.y,
    x2: b.x,
    y2: b.y,
    class: classes.join(" "),
    "data-link-id": link.id,
    "data-link-state": link.state,
  });
  let annotation = "";
  if (link.kind === "FIBER" && link.wavelengthCount !== undefined) {
    const used = Object.keys(link.lambdaOccupancy ?? {}).length;
    annotation = tag(
      "text",
      {
        x: (a.x + b.x) / 2,
        y: (a.y + b.y) / 2 - 6,
        class: "lambda-label",
        "text-anchor": "middle",
      },
      escapeXml(`λ ${used}/${link.wavelengthCount}`),
    );
  }
  return line + annotation;
}

export function renderTopology(model: ViewModel): string {
  const topology = model.topology;
  if (topology === null) {
    return '<svg class="topology" role="img"><text x="20" y="30">loading topology…</text></svg>';
  }
  const positions = layoutNodes(topology);
  const overlay = encryptionOverlay(model);
  const links = topology.links
    .slice()
    .sort((x, y) => x.id.localeCompare(y.id))
    .map((link) => linkGlyph(link, positions, overlay))
    .join("");
  const nodes = topology.nodes
    .slice()
    .sort((x, y) => x.id.localeCompare(y.id))
    .map((node) => nodeGlyph(node, positions[node.id]))
    .join("");
  const caption = tag(
    "text",
    { x: 16, y: 24, class: "revision-label" },
    escapeXml(`topology revision ${topology.revision}`),
  );
  return (
    `<svg class="topology" viewBox="0 0 ${WIDTH} ${HEIGHT}" role="img">` +
    caption +
    links +
    nodes +
    "</svg>"
  );
}

const BADGE_CLASS: Record<string, string> = {
  INSTALLED: "ok",
  FAILED: "bad",
  WITHDRAWN: "quiet",
};

export function renderIntents(model: ViewModel): string {
  if (model.intents.length === 0) {
    return '<p class="empty">no intents yet</p>';
  }
  const rows = model.intents
    .map((intent) => {
      const service: ServiceView | undefined = model.services[intent.id];
      const path = service
        ? `${service.solution.layer} λ${service.solution.wavelengthIndex} via ` +
          (service.solution.opticalPath.join(" + ") || "(local)")
        : "—";
      const badge = BADGE_CLASS[intent.state] ?? "busy";
      const actions =
        intent.state === "INSTALLED" || intent.state === "FAILED"
          ? `<button data-withdraw="${escapeXml(intent.id)}">withdraw</button>`
          : "";
      return (
        `<tr data-intent-id="${escapeXml(intent.id)}">` +
        `<td>${escapeXml(intent.id)}</td>` +
        `<td>${escapeXml(intent.src)} ↔ ${escapeXml(intent.dst)}</td>` +
        `<td>${intent.bandwidthMbps}</td>` +
        `<td>${intent.encryption.required ? escapeXml(intent.encryption.compliance ?? "GENERIC") : "off"}</td>` +
        `<td><span class="badge ${badge}">${escapeXml(intent.state)}</span></td>` +
        `<td class="path">${escapeXml(path)}</td>` +
        `<td>${actions}</td>` +
        "</tr>"
      );
    })
    .join("");
  return (
    "<table><thead><tr>" +
    "<th>id</th><th>sites</th><th>Mbps</th><th>encryption</th><th>state</th><th>service</th><th></th>" +
    `</tr></thead><tbody>${rows}</tbody></table>`
  );
}

export function renderExplain(model: ViewModel): string {
  const report = model.explain;
  if (report === null) return '<p class="empty">run a what-if to see ranked candidates</p>';
  const notice = report.notice
    ? `<p class="notice">${escapeXml(report.notice)}</p>`
    : "";
  if (report.candidates.length === 0) {
    return notice + '<p class="empty">no candidates</p>';
  }
  const rows = report.candidates
    .map(
      (candidate, rank) =>
        `<tr class="${candidate.feasible ? "feasible" : "rejected"}">` +
        `<td>${rank + 1}</td>` +
        `<td>${escapeXml(candidate.layer)}</td>` +
        `<td>${escapeXml(candidate.mechanism ?? "—")}</td>` +
        `<td>${escapeXml(candidate.path.join(" + ") || "(local)")}</td>` +
        `<td>${candidate.lambda ?? "—"}</td>` +
        `<td>${candidate.feasible ? "✓" : "✗"}</td>` +
        `<td>${escapeXml(candidate.reason)}</td>` +
        "</tr>",
    )
    .join("");
  return (
    notice +
    "<table><thead><tr>" +
    "<th>#</th><th>layer</th><th>mechanism</th><th>path</th><th>λ</th><th>ok</th><th>reason</th>" +
    `</tr></thead><tbody>${rows}</tbody></table>`
  );
}

export function renderEventFeed(model: ViewModel): string {
  if (model.eventFeed.length === 0) return '<p class="empty">no events</p>';
  return (
    "<ul>" +
    model.eventFeed
      .slice(-12)
      .reverse()
      .map((line) => `<li>${escapeXml(line)}</li>`)
      .join("") +
    "</ul>"
  );
}

export function renderBanner(model: ViewModel): string {
  if (model.banner === null) return "";
  return `<div class="banner">${escapeXml(model.banner)}</div>`;
}

export function renderFormErrors(model: ViewModel): string {
  if (model.formErrors.length === 0) return "";
  return (
    '<ul class="form-errors">' +
    model.formErrors.map((error) => `<li>${escapeXml(error)}</li>`).join("") +
    "</ul>"
  );
}
