/** Test doubles: transcript-backed fetch stub and canned API documents. */

import type { FetchLike, HttpResponse } from "../src/api.js";

export interface TranscriptCall {
  method: string;
  path: string;
  status: number;
  body: unknown;
}

export interface Transcript {
  intentId: string;
  failedFiber: string;
  request: Record<string, unknown>;
  calls: TranscriptCall[];
}

/** Serves recorded responses FIFO per (method, path); throws on unknown calls. */
export function transcriptFetch(transcript: Transcript): {
  fetchLike: FetchLike;
  served: { method: string; path: string }[];
} {
  const queues = new Map<string, TranscriptCall[]>();
  for (const call of transcript.calls) {
    const key = `${call.method} ${call.path}`;
    const queue = queues.get(key) ?? [];
    queue.push(call);
    queues.set(key, queue);
  }
  const served: { method: string; path: string }[] = [];
  const fetchLike: FetchLike = async (url, init) => {
    const method = init?.method ?? "GET";
    const key = `${method} ${url}`;
    const queue = queues.get(key);
    if (queue === undefined || queue.length === 0) {
      throw new Error(`no recorded response for ${key}`);
    }
    const call = queue.shift()!;
    served.push({ method, path: url });
    return respond(call.status, call.body);
  };
  return { fetchLike, served };
}

export function respond(status: number, body: unknown): HttpResponse {
  return {
    status,
    json: () => Promise.resolve(structuredClone(body)),
  };
}

/** Static fetch stub mapping "METHOD path" to a fixed response. */
export function staticFetch(
  routes: Record<string, { status: number; body: unknown }>,
): FetchLike {
  return async (url, init) => {
    const key = `${init?.method ?? "GET"} ${url}`;
    const route = routes[key];
    if (route === undefined) {
      throw new Error(`unexpected request ${key}`);
    }
    return respond(route.status, route.body);
  };
}

export const TINY_TOPOLOGY = {
  revision: 0,
  defaults: { wavelengthCount: 4, lineRateMbps: 10000 },
  nodes: [
    { id: "R1", kind: "ROADM", layer: "L0_OPTICAL" },
    { id: "R2", kind: "ROADM", layer: "L0_OPTICAL" },
    { id: "ET1", kind: "TRANSPONDER", layer: "L0_OPTICAL", siteId: "A1" },
    { id: "ET2", kind: "TRANSPONDER", layer: "L0_OPTICAL", siteId: "B1" },
  ],
  links: [
    {
      id: "FIBER-R1-R2", aNode: "R1", bNode: "R2", kind: "FIBER", state: "UP",
      capacityMbps: 40000, latencyMs: 1, wavelengthCount: 4,
      lambdaOccupancy: { "0": "lp-0001", "2": "lp-0002" },
    },
    {
      id: "CA-ET1-R1", aNode: "ET1", bNode: "R1", kind: "CLIENT_ATTACH",
      state: "UP", capacityMbps: 10000, latencyMs: 0.1,
    },
    {
      id: "CA-ET2-R2", aNode: "ET2", bNode: "R2", kind: "CLIENT_ATTACH",
      state: "DOWN", capacityMbps: 10000, latencyMs: 0.1,
    },
  ],
  sites: { A1: ["ET1"], B1: ["ET2"] },
};
