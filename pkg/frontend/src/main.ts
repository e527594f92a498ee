/** Browser entry point: wires the store to the DOM and starts polling. */

import { ApiClient } from "./api.js";
import {
  renderBanner,
  renderEventFeed,
  renderExplain,
  renderFormErrors,
  renderIntents,
  renderTopology,
} from "./render.js";
import { Store } from "./store.js";
import type { IntentRequest } from "./types.js";

declare global {
  interface Window {
    ACINO_ENDPOINT?: string;
  }
}

const endpoint = window.ACINO_ENDPOINT ?? "http://127.0.0.1:8088";
const api = new ApiClient(endpoint, (url, init) => fetch(url, init));
const store = new Store(api);

const panels = {
  banner: document.getElementById("banner")!,
  topology: document.getElementById("topology")!,
  intents: document.getElementById("intents")!,
  explain: document.getElementById("explain")!,
  feed: document.getElementById("feed")!,
  formErrors: document.getElementById("form-errors")!,
};

function render(): void {
  panels.banner.innerHTML = renderBanner(store.state);
  panels.topology.innerHTML = renderTopology(store.state);
  panels.intents.innerHTML = renderIntents(store.state);
  panels.explain.innerHTML = renderExplain(store.state);
  panels.feed.innerHTML = renderEventFeed(store.state);
  panels.formErrors.innerHTML = renderFormErrors(store.state);
  populateSiteSelects();
}

let sitesPopulated = false;
function populateSiteSelects(): void {
  if (sitesPopulated || store.state.topology === null) return;
  const sites = Object.keys(store.state.topology.sites).sort();
  for (const id of ["form-src", "form-dst"]) {
    const select = document.getElementById(id) as HTMLSelectElement;
    select.innerHTML = sites
      .map((site) => `<option value="${site}">${site}</option>`)
      .join("");
  }
  (document.getElementById("form-dst") as HTMLSelectElement).selectedIndex =
    sites.length > 1 ? 1 : 0;
  sitesPopulated = true;
}

function formRequest(): IntentRequest {
  const value = (id: string) => (document.getElementById(id) as HTMLInputElement).value;
  const checked = (id: string) =>
    (document.getElementById(id) as HTMLInputElement).checked;
  const request: IntentRequest = {
    src: value("form-src"),
    dst: value("form-dst"),
    bandwidthMbps: Number(value("form-bandwidth")),
    encryption: { required: checked("form-encrypted") },
  };
  if (checked("form-encrypted")) {
    request.encryption.compliance = value("form-compliance");
    const preference = value("form-preference");
    if (preference !== "") {
      request.encryption.layerPreference = [preference];
    }
  }
  const latency = value("form-latency");
  if (latency !== "") {
    request.maxLatencyMs = Number(latency);
  }
  return request;
}

async function pollSelected(): Promise<void> {
  const selected = store.state.selectedIntent;
  if (selected === null) return;
  const state = await store.pollIntent(selected);
  if (state !== null && state !== "COMPILING" && state !== "INSTALLING") {
    await store.refreshTopology(true);
  }
}

document.getElementById("submit")!.addEventListener("click", async () => {
  await store.submitIntent(formRequest());
  await store.refreshTopology(true);
});

document.getElementById("explain-btn")!.addEventListener("click", async () => {
  await store.runExplain(formRequest());
});

document.getElementById("intents")!.addEventListener("click", async (event) => {
  const target = event.target as HTMLElement;
  const intentId = target.getAttribute("data-withdraw");
  if (intentId !== null) {
    await store.withdrawIntent(intentId);
    await store.refreshTopology(true);
  }
});

// Clicking a link offers fail/restore depending on its current state.
document.getElementById("topology")!.addEventListener("click", async (event) => {
  const target = event.target as Element;
  const linkId = target.getAttribute("data-link-id");
  if (linkId === null) return;
  const state = target.getAttribute("data-link-state");
  const verb = state === "UP" ? "fail" : "restore";
  if (!window.confirm(`${verb} ${linkId}?`)) return;
  if (state === "UP") {
    await store.failLink(linkId);
  } else {
    await store.restoreLink(linkId);
  }
});

store.onChange(render);
render();
void store.refreshTopology(true).then(render);
void store.refreshIntents(true).then(render);
window.setInterval(() => void store.refreshTopology(), 600);
window.setInterval(() => void store.refreshIntents(), 600);
window.setInterval(() => void pollSelected(), 600);
