/**
 * Shareable application state and its URL token codec.
 *
 * The token is canonical JSON (sorted keys, no whitespace, integral numbers
 * without a decimal point) encoded as unpadded base64url. The server and any
 * other client implementing the same canonical form produce byte-identical
 * tokens for the same state.
 */

export const STATE_VERSION = 1;
export const MAX_MAPS = 4;

export const DEFAULT_CENTER: [number, number] = [-157.5, 20.5];
export const DEFAULT_ZOOM = 7;

export interface Viewport {
  lon: number;
  lat: number;
  zoom: number;
}

export interface CensusSelection {
  layerId: string;
  metric: string;
  palette: string;
}

export interface MapState {
  census: CensusSelection | null;
  hazardVectors: string[];
  raster: string | null;
  points: string[];
  viewport: Viewport;
}

export interface TableState {
  dataset: string;
  sortColumn: string | null;
  direction: "asc" | "desc";
  search: string | null;
}

export interface AppState {
  version: number;
  maps: MapState[];
  table: TableState | null;
}

export class StateError extends Error {}

export function defaultViewport(): Viewport {
  return { lon: DEFAULT_CENTER[0], lat: DEFAULT_CENTER[1], zoom: DEFAULT_ZOOM };
}

export function emptyMap(): MapState {
  return { census: null, hazardVectors: [], raster: null, points: [], viewport: defaultViewport() };
}

export function defaultState(): AppState {
  return { version: STATE_VERSION, maps: [emptyMap()], table: null };
}

export function validateState(s: AppState): void {
  if (s.version !== STATE_VERSION) {
    throw new StateError(`unsupported state version ${s.version}`);
  }
  if (s.maps.length > MAX_MAPS) {
    throw new StateError("state violates map limit");
  }
  if (s.maps.length < 1) {
    throw new StateError("state requires at least one map");
  }
  for (const m of s.maps) {
    if (new Set(m.hazardVectors).size !== m.hazardVectors.length) {
      throw new StateError("duplicate hazard layer in map state");
    }
    if (new Set(m.points).size !== m.points.length) {
      throw new StateError("duplicate point layer in map state");
    }
    const { lon, lat } = m.viewport;
    if (!(lon >= -180 && lon <= 180 && lat >= -90 && lat <= 90)) {
      throw new StateError("viewport outside EPSG:4326 domain");
    }
  }
  if (s.table !== null && s.table.direction !== "asc" && s.table.direction !== "desc") {
    throw new StateError("invalid table sort direction");
  }
}

type Json = null | boolean | number | string | Json[] | { [k: string]: Json };

/** Recursive key-sorted compact stringify matching the server's canonical form. */
function canonicalJson(v: Json): string {
  if (v === null || typeof v === "boolean" || typeof v === "string") {
    return JSON.stringify(v);
  }
  if (typeof v === "number") {
    if (!Number.isFinite(v)) throw new StateError("non-finite number in state");
    return JSON.stringify(v);
  }
  if (Array.isArray(v)) {
    return "[" + v.map(canonicalJson).join(",") + "]";
  }
  const keys = Object.keys(v).sort();
  return "{" + keys.map((k) => JSON.stringify(k) + ":" + canonicalJson(v[k]!)).join(",") + "}";
}

const B64_ALPHABET = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_";

function base64urlEncode(bytes: Uint8Array): string {
  let out = "";
  for (let i = 0; i < bytes.length; i += 3) {
    const b0 = bytes[i]!;
    const b1 = i + 1 < bytes.length ? bytes[i + 1]! : 0;
    const b2 = i + 2 < bytes.length ? bytes[i + 2]! : 0;
    out += B64_ALPHABET[b0 >> 2]! + B64_ALPHABET[((b0 & 3) << 4) | (b1 >> 4)]!;
    if (i + 1 < bytes.length) out += B64_ALPHABET[((b1 & 15) << 2) | (b2 >> 6)]!;
    if (i + 2 < bytes.length) out += B64_ALPHABET[b2 & 63]!;
  }
  return out;
}

function base64urlDecode(token: string): Uint8Array {
  const lookup = new Map<string, number>();
  for (let i = 0; i < B64_ALPHABET.length; i++) lookup.set(B64_ALPHABET[i]!, i);
  if (token.length % 4 === 1) throw new StateError("malformed state token");
  const bytes: number[] = [];
  let buffer = 0;
  let bits = 0;
  for (const ch of token) {
    const val = lookup.get(ch);
    if (val === undefined) throw new StateError("malformed state token");
    buffer = (buffer << 6) | val;
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      bytes.push((buffer >> bits) & 0xff);
    }
  }
  return new Uint8Array(bytes);
}

function stateDoc(s: AppState): Json {
  return {
    version: s.version,
    maps: s.maps.map((m) => ({
      census:
        m.census === null
          ? null
          : { layer_id: m.census.layerId, metric: m.census.metric, palette: m.census.palette },
      hazard_vectors: [...m.hazardVectors].sort(),
      raster: m.raster,
      points: [...m.points].sort(),
      viewport: { lon: m.viewport.lon, lat: m.viewport.lat, zoom: m.viewport.zoom },
    })),
    table:
      s.table === null
        ? null
        : {
            dataset: s.table.dataset,
            sort_column: s.table.sortColumn,
            direction: s.table.direction,
            search: s.table.search,
          },
  };
}

export function encodeState(s: AppState): string {
  validateState(s);
  return base64urlEncode(new TextEncoder().encode(canonicalJson(stateDoc(s))));
}

function requireThat(cond: boolean, msg = "malformed state token"): asserts cond {
  if (!cond) throw new StateError(msg);
}

function isRecord(v: unknown): v is Record<string, unknown> {
  return typeof v === "object" && v !== null && !Array.isArray(v);
}

function parseMap(obj: unknown): MapState {
  requireThat(isRecord(obj));
  let census: CensusSelection | null = null;
  const c = obj.census;
  if (c !== null && c !== undefined) {
    requireThat(isRecord(c));
    requireThat(
      typeof c.layer_id === "string" && typeof c.metric === "string" && typeof c.palette === "string",
    );
    census = { layerId: c.layer_id, metric: c.metric, palette: c.palette };
  }
  const hv = obj.hazard_vectors ?? [];
  const pts = obj.points ?? [];
  requireThat(Array.isArray(hv) && hv.every((x) => typeof x === "string"));
  requireThat(Array.isArray(pts) && pts.every((x) => typeof x === "string"));
  const raster = obj.raster ?? null;
  requireThat(raster === null || typeof raster === "string");
  const vp = obj.viewport;
  requireThat(isRecord(vp));
  const lon = Number(vp.lon);
  const lat = Number(vp.lat);
  const zoom = Number(vp.zoom);
  requireThat(Number.isFinite(lon) && Number.isFinite(lat) && Number.isFinite(zoom));
  return {
    census,
    hazardVectors: hv as string[],
    raster: raster as string | null,
    points: pts as string[],
    viewport: { lon, lat, zoom },
  };
}

export function decodeState(token: string): AppState {
  let doc: unknown;
  try {
    doc = JSON.parse(new TextDecoder("utf-8", { fatal: true }).decode(base64urlDecode(token)));
  } catch (e) {
    if (e instanceof StateError) throw e;
    throw new StateError("malformed state token");
  }
  requireThat(isRecord(doc));
  const version = doc.version;
  if (version !== STATE_VERSION) {
    throw new StateError(`unsupported state version ${version}`);
  }
  requireThat(Array.isArray(doc.maps));
  const maps = doc.maps.map(parseMap);
  let table: TableState | null = null;
  const t = doc.table;
  if (t !== null && t !== undefined) {
    requireThat(isRecord(t));
    requireThat(typeof t.dataset === "string");
    table = {
      dataset: t.dataset,
      sortColumn: (t.sort_column ?? null) as string | null,
      direction: (t.direction ?? "asc") as "asc" | "desc",
      search: (t.search ?? null) as string | null,
    };
  }
  const state: AppState = { version, maps, table };
  validateState(state);
  return state;
}
