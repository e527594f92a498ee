/**
 * Scripted-session contract test (headless).
 *
 * Drives the console's store through submit → observe INSTALLED → fail link
 * → observe failover → withdraw against a transcript recorded from the real
 * orchestrator (scripts/record_ui_session.py). Asserts the console issues
 * only documented API calls, in exactly the recorded sequence, and renders
 * the final topology with the alternate arc highlighted.
 */

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

import { ApiClient, isDocumented } from "../src/api.js";
import { renderTopology } from "../src/render.js";
import { Store } from "../src/store.js";
import type { IntentRequest } from "../src/types.js";
import { transcriptFetch, type Transcript } from "./helpers.js";

const fixturePath = join(
  dirname(fileURLToPath(import.meta.url)),
  "fixtures",
  "session.json",
);
const transcript: Transcript = JSON.parse(readFileSync(fixturePath, "utf-8"));

describe("scripted operator session", () => {
  it("replays the recorded session and highlights the failover", async () => {
    const { fetchLike } = transcriptFetch(transcript);
    const client = new ApiClient("", fetchLike);
    const store = new Store(client);

    // Initial load.
    await store.refreshTopology(true);
    await store.refreshIntents(true);
    expect(store.state.topology?.revision).toBe(0);
    expect(store.state.intents).toEqual([]);

    // Submit and observe INSTALLED.
    const intent = await store.submitIntent(transcript.request as unknown as IntentRequest);
    expect(intent?.id).toBe(transcript.intentId);
    const observed = await store.pollIntent(transcript.intentId, true);
    expect(observed).toBe("INSTALLED");
    const before = store.state.services[transcript.intentId];
    expect(before.solution.opticalPath).toEqual([transcript.failedFiber]);
    await store.refreshTopology(true);

    // Fail the fiber under the service; the store refreshes everything.
    await store.failLink(transcript.failedFiber);
    const after = await store.pollIntent(transcript.intentId, true);
    expect(after).toBe("INSTALLED");
    const failedOver = store.state.services[transcript.intentId];
    expect(failedOver.solution.opticalPath).not.toEqual([transcript.failedFiber]);
    expect(failedOver.solution.opticalPath.length).toBeGreaterThan(0);

    // The final topology render: failed fiber down, alternate arc highlighted.
    const svg = renderTopology(store.state);
    const downPattern = new RegExp(
      `class="link fiber down"[^>]*data-link-id="${transcript.failedFiber}"`,
    );
    expect(svg).toMatch(downPattern);
    for (const fiber of failedOver.solution.opticalPath) {
      const encryptedPattern = new RegExp(
        `class="link fiber enc-l0"[^>]*data-link-id="${fiber}"`,
      );
      expect(svg).toMatch(encryptedPattern);
    }
    expect(store.state.topology?.revision).toBe(1);

    // Withdraw and confirm the console saw it through.
    await store.withdrawIntent(transcript.intentId);
    expect(store.state.intents.map((i) => i.state)).toEqual(["WITHDRAWN"]);
    expect(store.state.services[transcript.intentId]).toBeUndefined();

    // Contract: only documented endpoints, in exactly the recorded order.
    for (const call of client.callLog) {
      expect(isDocumented(call.method, call.path), `${call.method} ${call.path}`).toBe(true);
    }
    expect(
      client.callLog.map((c) => `${c.method} ${c.path}`),
    ).toEqual(transcript.calls.map((c) => `${c.method} ${c.path}`));
  });
});
