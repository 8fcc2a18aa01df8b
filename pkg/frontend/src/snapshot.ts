/**
 * Deterministic pane compositor used by the per-map snapshot control.
 *
 * Renders a map pane's layer stack into an RGBA buffer at the pane's pixel
 * dimensions. The real dashboard feeds this buffer into a canvas for PNG
 * export; keeping the compositor pure makes snapshots reproducible: two
 * captures of an unchanged pane are byte-identical.
 */

import type { MapState } from "./state.js";

const BASE_COLOR: [number, number, number] = [230, 238, 245]; // light basemap

function hashColor(id: string): [number, number, number] {
  let h = 2166136261;
  for (let i = 0; i < id.length; i++) {
    h = Math.imul(h ^ id.charCodeAt(i), 16777619) >>> 0;
  }
  return [64 + (h & 0x7f), 64 + ((h >> 7) & 0x7f), 64 + ((h >> 14) & 0x7f)];
}

function blend(dst: Uint8ClampedArray, i: number, rgb: [number, number, number], alpha: number): void {
  dst[i] = dst[i]! * (1 - alpha) + rgb[0] * alpha;
  dst[i + 1] = dst[i + 1]! * (1 - alpha) + rgb[1] * alpha;
  dst[i + 2] = dst[i + 2]! * (1 - alpha) + rgb[2] * alpha;
  dst[i + 3] = 255;
}

export function renderSnapshot(pane: MapState, width: number, height: number): Uint8ClampedArray {
  if (width <= 0 || height <= 0) throw new Error("pane not rendered");
  const px = new Uint8ClampedArray(width * height * 4);
  for (let i = 0; i < px.length; i += 4) {
    px[i] = BASE_COLOR[0];
    px[i + 1] = BASE_COLOR[1];
    px[i + 2] = BASE_COLOR[2];
    px[i + 3] = 255;
  }
  // Layer order: census fill, raster, hazards, points — each as a
  // translucent wash keyed to the layer id so distinct stacks differ.
  const overlays: string[] = [];
  if (pane.census) overlays.push(`census:${pane.census.layerId}:${pane.census.metric}`);
  if (pane.raster) overlays.push(`raster:${pane.raster}`);
  for (const h of [...pane.hazardVectors].sort()) overlays.push(`hazard:${h}`);
  for (const p of [...pane.points].sort()) overlays.push(`points:${p}`);
  for (const id of overlays) {
    const rgb = hashColor(id);
    for (let i = 0; i < px.length; i += 4) blend(px, i, rgb, 0.25);
  }
  // Legend strip along the bottom edge when a choropleth is active.
  if (pane.census) {
    const rgb = hashColor(`legend:${pane.census.palette}`);
    const y0 = Math.max(0, height - 8);
    for (let y = y0; y < height; y++) {
      for (let x = 0; x < width; x++) blend(px, (y * width + x) * 4, rgb, 1);
    }
  }
  return px;
}
