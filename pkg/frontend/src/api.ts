/**
 * Typed client over the orchestrator's documented HTTP API.
 *
 * Every call goes through request(), which records (method, path) into
 * callLog; the contract test asserts the console never invents endpoints.
 * The fetch implementation is injected so tests can run without a browser
 * or a network.
 */

import type {
  EventOutcome,
  ExplainReport,
  IntentRequest,
  IntentView,
  ServiceView,
  TopologySnapshot,
} from "./types.js";

export interface HttpResponse {
  status: number;
  json(): Promise<unknown>;
}

export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<HttpResponse>;

/** The documented endpoint set; one regex per route. */
export const DOCUMENTED_ENDPOINTS: [string, RegExp][] = [
  ["POST", /^\/intents$/],
  ["GET", /^\/intents$/],
  ["GET", /^\/intents\/[^/]+$/],
  ["DELETE", /^\/intents\/[^/]+$/],
  ["GET", /^\/services\/[^/]+$/],
  ["POST", /^\/explain$/],
  ["GET", /^\/topology$/],
  ["POST", /^\/topology\/events$/],
  ["GET", /^\/devices\/[^/]+$/],
  ["GET", /^\/trace\?src=[^&]+&dst=[^&]+$/],
];

export function isDocumented(method: string, path: string): boolean {
  return DOCUMENTED_ENDPOINTS.some(
    ([m, pattern]) => m === method && pattern.test(path),
  );
}

export class ApiRequestError extends Error {
  constructor(
    public status: number,
    public body: { error?: string; detail?: string; reasons?: string[] },
  ) {
    super(body.detail ?? `HTTP ${status}`);
  }
}

export class ApiClient {
  readonly callLog: { method: string; path: string }[] = [];

  constructor(
    private readonly baseUrl: string,
    private readonly fetchLike: FetchLike,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    this.callLog.push({ method, path });
    const response = await this.fetchLike(this.baseUrl + path, {
      method,
      headers: body === undefined ? {} : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const parsed = (await response.json()) as T;
    if (response.status >= 400) {
      throw new ApiRequestError(response.status, parsed as object);
    }
    return parsed;
  }

  submitIntent(request: IntentRequest): Promise<IntentView> {
    return this.request("POST", "/intents", request);
  }

  listIntents(): Promise<{ intents: IntentView[] }> {
    return this.request("GET", "/intents");
  }

  getIntent(id: string): Promise<IntentView> {
    return this.request("GET", `/intents/${id}`);
  }

  withdrawIntent(id: string): Promise<IntentView> {
    return this.request("DELETE", `/intents/${id}`);
  }

  getService(id: string): Promise<ServiceView> {
    return this.request("GET", `/services/${id}`);
  }

  explain(request: IntentRequest): Promise<ExplainReport> {
    return this.request("POST", "/explain", request);
  }

  getTopology(): Promise<TopologySnapshot> {
    return this.request("GET", "/topology");
  }

  injectEvent(kind: "LINK_DOWN" | "LINK_UP", linkId: string): Promise<EventOutcome> {
    return this.request("POST", "/topology/events", { kind, linkId });
  }
}
