import { describe, expect, it } from "vitest";

import { UiStore } from "../src/store.js";
import { bboxContains, bboxOfFeature, viewportBBox } from "../src/geo.js";
import type { Feature } from "../src/types.js";

function blockGroup(geoid: string, cx: number, cy: number): Feature {
  const h = 0.05;
  return {
    type: "Feature",
    id: geoid,
    properties: { GEOID: geoid },
    geometry: {
      type: "Polygon",
      coordinates: [
        [
          [cx - h, cy - h],
          [cx - h, cy + h],
          [cx + h, cy + h],
          [cx + h, cy - h],
          [cx - h, cy - h],
        ],
      ],
    },
  };
}

const FEATURES = [
  blockGroup("150010201001", -155.1, 19.7),
  blockGroup("150010201002", -157.9, 21.3),
];

function storeWithCensus(): UiStore {
  const store = new UiStore();
  store.selectCensus(0, { layerId: "census1", metric: "POP", palette: "viridis" });
  return store;
}

describe("table-to-map sync", () => {
  it("pans and zooms to the selected row's block group", () => {
    const store = storeWithCensus();
    const ok = store.selectTableRow("census1", "150010201001", FEATURES, { POP: 1234 });
    expect(ok).toBe(true);
    const vp = store.getState().maps[0]!.viewport;
    const want = bboxOfFeature(FEATURES[0]!);
    expect(bboxContains(viewportBBox(vp), want)).toBe(true);
  });

  it("opens the popup with the row's values and highlights the GEOID", () => {
    const store = storeWithCensus();
    store.selectTableRow("census1", "150010201002", FEATURES, { POP: 77, RISK: "low" });
    const t = store.getTransient();
    expect(t.popup).toEqual({
      mapIndex: 0,
      geoid: "150010201002",
      values: { POP: 77, RISK: "low" },
    });
    expect(t.highlightedGeoid).toBe("150010201002");
  });

  it("targets the first map showing the dataset", () => {
    const store = new UiStore();
    store.addMap();
    store.selectCensus(1, { layerId: "census1", metric: "POP", palette: "viridis" });
    const before = store.getState().maps[0]!.viewport;
    store.selectTableRow("census1", "150010201001", FEATURES);
    const after = store.getState();
    expect(after.maps[0]!.viewport).toEqual(before); // untouched pane
    expect(after.maps[1]!.viewport).not.toEqual(before);
  });

  it("marks a GEOID missing from the layer as unmappable without crashing", () => {
    const store = storeWithCensus();
    const ok = store.selectTableRow("census1", "999999999999", FEATURES);
    expect(ok).toBe(false);
    expect(store.getTransient().unmappable).toContain("999999999999");
    expect(store.getTransient().popup).toBeNull();
  });

  it("is a no-op when no map shows the dataset", () => {
    const store = new UiStore();
    expect(store.selectTableRow("census1", "150010201001", FEATURES)).toBe(false);
  });
});
