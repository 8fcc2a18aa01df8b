import type { Feature, Geometry, Position } from "./types.js";
import type { Viewport } from "./state.js";

export type BBox = [number, number, number, number]; // west, south, east, north

function eachPosition(coords: unknown, fn: (p: Position) => void): void {
  if (Array.isArray(coords) && typeof coords[0] === "number") {
    fn(coords as Position);
    return;
  }
  for (const c of coords as unknown[]) eachPosition(c, fn);
}

export function bboxOfGeometry(g: Geometry): BBox {
  let w = Infinity;
  let s = Infinity;
  let e = -Infinity;
  let n = -Infinity;
  eachPosition(g.coordinates, ([x, y]) => {
    if (x < w) w = x;
    if (y < s) s = y;
    if (x > e) e = x;
    if (y > n) n = y;
  });
  if (!Number.isFinite(w)) throw new Error("empty geometry");
  return [w, s, e, n];
}

export function bboxOfFeature(f: Feature): BBox {
  return bboxOfGeometry(f.geometry);
}

export function bboxContains(outer: BBox, inner: BBox): boolean {
  return outer[0] <= inner[0] && outer[1] <= inner[1] && outer[2] >= inner[2] && outer[3] >= inner[3];
}

/**
 * Web-Mercator-style fit: center on the bbox and pick the integer zoom at
 * which the bbox spans at most one 360/2^z degree tile in each axis, padded
 * one level out so the feature is comfortably inside the view.
 */
export function viewportForBBox(box: BBox, maxZoom = 16): Viewport {
  const [w, s, e, n] = box;
  const spanLon = Math.max(e - w, 1e-9);
  const spanLat = Math.max(n - s, 1e-9);
  const span = Math.max(spanLon, spanLat);
  let zoom = Math.floor(Math.log2(360 / span)) - 1;
  if (zoom < 0) zoom = 0;
  if (zoom > maxZoom) zoom = maxZoom;
  return { lon: (w + e) / 2, lat: (s + n) / 2, zoom };
}

/** Degree span of the viewport, inverse of the fit above. */
export function viewportBBox(v: Viewport): BBox {
  const span = 360 / Math.pow(2, v.zoom + 1);
  return [v.lon - span / 2, v.lat - span / 2, v.lon + span / 2, v.lat + span / 2];
}
