/**
 * Single store for the console's view model.
 *
 * All state flows in from API responses; nothing here is authoritative.
 * Invariants enforced: the rendered topology revision never goes backwards,
 * and no resource is polled more often than once per 500 ms.
 */

import { ApiClient, ApiRequestError } from "./api.js";
import type {
  ExplainReport,
  IntentRequest,
  IntentView,
  ServiceView,
  TopologySnapshot,
} from "./types.js";

export const MIN_POLL_INTERVAL_MS = 500;

export interface ViewModel {
  topology: TopologySnapshot | null;
  intents: IntentView[];
  services: Record<string, ServiceView>;
  explain: ExplainReport | null;
  selectedIntent: string | null;
  formErrors: string[];
  banner: string | null;
  eventFeed: string[];
}

export type Clock = () => number;

export class Store {
  readonly state: ViewModel = {
    topology: null,
    intents: [],
    services: {},
    explain: null,
    selectedIntent: null,
    formErrors: [],
    banner: null,
    eventFeed: [],
  };

  private lastPollAt: Record<string, number> = {};
  private listeners: (() => void)[] = [];

  constructor(
    private readonly api: ApiClient,
    private readonly clock: Clock = () => Date.now(),
  ) {}

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  private feed(line: string): void {
    this.state.eventFeed.push(line);
    if (this.state.eventFeed.length > 50) this.state.eventFeed.shift();
  }

  /** true when the resource may be polled now (>=500 ms since last poll). */
  pollPermitted(resource: string): boolean {
    const last = this.lastPollAt[resource];
    const now = this.clock();
    if (last !== undefined && now - last < MIN_POLL_INTERVAL_MS) {
      return false;
    }
    this.lastPollAt[resource] = now;
    return true;
  }

  applyTopology(snapshot: TopologySnapshot): boolean {
    const current = this.state.topology;
    if (current !== null && snapshot.revision < current.revision) {
      return false; // stale response; the rendered revision never decreases
    }
    this.state.topology = snapshot;
    this.notify();
    return true;
  }

  async refreshTopology(force = false): Promise<void> {
    if (!force && !this.pollPermitted("topology")) return;
    try {
      this.applyTopology(await this.api.getTopology());
      this.state.banner = null;
    } catch (error) {
      this.transportProblem(error);
    }
  }

  async refreshIntents(force = false): Promise<void> {
    if (!force && !this.pollPermitted("intents")) return;
    try {
      const body = await this.api.listIntents();
      this.state.intents = body.intents;
      for (const intent of body.intents) {
        if (intent.state === "INSTALLED") {
          this.state.services[intent.id] = await this.api.getService(intent.id);
        } else {
          delete this.state.services[intent.id];
        }
      }
      this.state.banner = null;
      this.notify();
    } catch (error) {
      this.transportProblem(error);
    }
  }

  /** Client-side mirror of the server's request validation. */
  validateForm(request: IntentRequest): string[] {
    const errors: string[] = [];
    if (!request.src) errors.push("src: required");
    if (!request.dst) errors.push("dst: required");
    if (request.src && request.dst && request.src === request.dst) {
      errors.push("src equals dst");
    }
    if (!Number.isInteger(request.bandwidthMbps) || request.bandwidthMbps <= 0) {
      errors.push("bandwidthMbps: must be a positive integer");
    }
    if (request.maxLatencyMs !== undefined && request.maxLatencyMs <= 0) {
      errors.push("maxLatencyMs: must be positive");
    }
    if (!request.encryption.required) {
      if (request.encryption.compliance && request.encryption.compliance !== "NONE") {
        errors.push("compliance without required encryption");
      }
      if (request.encryption.layerPreference?.length) {
        errors.push("layerPreference without required encryption");
      }
    }
    return errors;
  }

  async submitIntent(request: IntentRequest): Promise<IntentView | null> {
    this.state.formErrors = this.validateForm(request);
    if (this.state.formErrors.length > 0) {
      this.notify();
      return null; // inline errors, no request issued
    }
    try {
      const intent = await this.api.submitIntent(request);
      this.state.selectedIntent = intent.id;
      this.feed(`submitted ${intent.id} (${intent.src}→${intent.dst}): ${intent.state}`);
      await this.refreshIntents(true);
      return intent;
    } catch (error) {
      if (error instanceof ApiRequestError && error.status === 400) {
        this.state.formErrors = error.body.reasons ?? [error.body.detail ?? "rejected"];
        this.notify();
        return null;
      }
      this.transportProblem(error);
      return null;
    }
  }

  /** One polling step for a live intent badge; returns its current state. */
  async pollIntent(id: string, force = false): Promise<string | null> {
    if (!force && !this.pollPermitted(`intent:${id}`)) return null;
    try {
      const intent = await this.api.getIntent(id);
      this.state.intents = this.state.intents.map((existing) =>
        existing.id === id ? intent : existing,
      );
      if (intent.state === "INSTALLED") {
        this.state.services[id] = await this.api.getService(id);
      }
      this.notify();
      return intent.state;
    } catch (error) {
      this.transportProblem(error);
      return null;
    }
  }

  async withdrawIntent(id: string): Promise<void> {
    try {
      const intent = await this.api.withdrawIntent(id);
      this.feed(`withdrew ${id}: ${intent.state}`);
      delete this.state.services[id];
      await this.refreshIntents(true);
    } catch (error) {
      this.transportProblem(error);
    }
  }

  async failLink(linkId: string): Promise<void> {
    await this.injectEvent("LINK_DOWN", linkId);
  }

  async restoreLink(linkId: string): Promise<void> {
    await this.injectEvent("LINK_UP", linkId);
  }

  private async injectEvent(kind: "LINK_DOWN" | "LINK_UP", linkId: string): Promise<void> {
    try {
      const outcome = await this.api.injectEvent(kind, linkId);
      const moved = outcome.results
        .map((r) => `${r.intentId}→${r.state}`)
        .join(", ");
      this.feed(`${kind} ${linkId} @rev${outcome.revision}${moved ? `: ${moved}` : ""}`);
      await this.refreshTopology(true);
      await this.refreshIntents(true);
    } catch (error) {
      this.transportProblem(error);
    }
  }

  async runExplain(request: IntentRequest): Promise<void> {
    this.state.formErrors = this.validateForm(request);
    if (this.state.formErrors.length > 0) {
      this.notify();
      return;
    }
    try {
      this.state.explain = await this.api.explain(request);
      this.notify();
    } catch (error) {
      if (error instanceof ApiRequestError && error.status === 400) {
        this.state.formErrors = error.body.reasons ?? [error.body.detail ?? "rejected"];
        this.notify();
        return;
      }
      this.transportProblem(error);
    }
  }

  private transportProblem(error: unknown): void {
    // Non-blocking banner; the form and current view stay intact.
    const message = error instanceof Error ? error.message : String(error);
    this.state.banner = `server unreachable or failing: ${message}`;
    this.notify();
  }
}
