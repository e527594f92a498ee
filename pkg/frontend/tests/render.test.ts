import { describe, expect, it } from "vitest";

import {
  encryptionOverlay,
  renderExplain,
  renderIntents,
  renderTopology,
} from "../src/render.js";
import type { ViewModel } from "../src/store.js";
import { TINY_TOPOLOGY } from "./helpers.js";

function model(overrides: Partial<ViewModel> = {}): ViewModel {
  return {
    topology: TINY_TOPOLOGY as never,
    intents: [],
    services: {},
    explain: null,
    selectedIntent: null,
    formErrors: [],
    banner: null,
    eventFeed: [],
    ...overrides,
  };
}

const INSTALLED_INTENT = {
  id: "i-0001",
  action: "CONNECT",
  src: "A1",
  dst: "B1",
  bandwidthMbps: 1000,
  encryption: { required: true, compliance: "GENERIC" },
  state: "INSTALLED",
  stateHistory: [],
};

const SERVICE = {
  intentId: "i-0001",
  lightpathId: "lp-0001",
  installedAtRevision: 0,
  solution: {
    layer: "L0_OPTICAL",
    mechanism: "OTN_AES",
    opticalPath: ["FIBER-R1-R2"],
    wavelengthIndex: 0,
    overlayPath: ["CA-ET1-R1", "CA-ET2-R2"],
    totalLatencyMs: 1.2,
    groomedLightpath: null,
  },
};

describe("topology rendering", () => {
  it("shows wavelength occupancy on fibers", () => {
    const svg = renderTopology(model());
    expect(svg).toContain("λ 2/4");
    expect(svg).toContain('data-link-id="FIBER-R1-R2"');
  });

  it("marks down links", () => {
    const svg = renderTopology(model());
    expect(svg).toMatch(/class="link client_attach down"[^>]*data-link-id="CA-ET2-R2"/);
  });

  it("highlights encrypted segments by layer", () => {
    const svg = renderTopology(
      model({ intents: [INSTALLED_INTENT as never], services: { "i-0001": SERVICE as never } }),
    );
    expect(svg).toMatch(/enc-l0[^>]*data-link-id="FIBER-R1-R2"/);
  });

  it("renders every node with its site", () => {
    const svg = renderTopology(model());
    for (const fragment of ["R1", "R2", "ET1", "ET2", "site A1", "site B1"]) {
      expect(svg).toContain(fragment);
    }
    expect(svg).toContain("topology revision 0");
  });

  it("unencrypted services add no encryption overlay", () => {
    const plain = {
      ...INSTALLED_INTENT,
      encryption: { required: false },
    };
    const overlay = encryptionOverlay(
      model({ intents: [plain as never], services: { "i-0001": SERVICE as never } }),
    );
    expect(overlay).toEqual({});
  });
});

describe("intent table rendering", () => {
  it("empty list renders a placeholder", () => {
    expect(renderIntents(model())).toContain("no intents yet");
  });

  it("installed intents show badge, path and withdraw action", () => {
    const html = renderIntents(
      model({ intents: [INSTALLED_INTENT as never], services: { "i-0001": SERVICE as never } }),
    );
    expect(html).toContain('class="badge ok"');
    expect(html).toContain("FIBER-R1-R2");
    expect(html).toContain('data-withdraw="i-0001"');
  });
});

describe("explain rendering", () => {
  it("ranks candidates and shows rejection reasons", () => {
    const html = renderExplain(
      model({
        explain: {
          candidates: [
            {
              layer: "L0_OPTICAL", mechanism: "OTN_AES", path: ["FIBER-R1-R2"],
              lambda: 0, groomed: false, feasible: true, reason: "feasible",
            },
            {
              layer: "L0_OPTICAL", mechanism: "OTN_AES",
              path: ["FIBER-R1-R3", "FIBER-R2-R3"],
              lambda: null, groomed: false, feasible: false, reason: "no free wavelength",
            },
          ],
          notice: null,
        },
      }),
    );
    expect(html).toContain("no free wavelength");
    expect(html).toMatch(/<tr class="feasible">[\s\S]*<tr class="rejected">/);
  });

  it("shows the infeasible-compliance notice", () => {
    const html = renderExplain(
      model({ explain: { candidates: [], notice: "NoFeasibleEncryptionLayer" } }),
    );
    expect(html).toContain("NoFeasibleEncryptionLayer");
    expect(html).toContain("no candidates");
  });
});
