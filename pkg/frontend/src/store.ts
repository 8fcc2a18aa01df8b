/**
 * Centralized UI state store with unidirectional updates.
 *
 * Every mutation path re-validates against the shared AppState invariants
 * (at most four maps, one census metric per map, one raster per map), so no
 * interaction sequence can produce an unencodable state.
 */

import {
  AppState,
  CensusSelection,
  MapState,
  StateError,
  TableState,
  Viewport,
  decodeState,
  defaultState,
  emptyMap,
  encodeState,
  MAX_MAPS,
  validateState,
} from "./state.js";
import type { CatalogEntry, Feature, Cell } from "./types.js";
import { bboxOfFeature, viewportForBBox } from "./geo.js";

export interface Popup {
  mapIndex: number;
  geoid: string;
  values: Record<string, Cell>;
}

export interface Transient {
  highlightedGeoid: string | null;
  popup: Popup | null;
  /** Non-fatal notices, e.g. a corrupt share token replaced by defaults. */
  warning: string | null;
  /** GEOIDs selected in the table but absent from the active layer. */
  unmappable: string[];
}

export type Listener = (state: AppState, transient: Transient) => void;

function cloneMap(m: MapState): MapState {
  return {
    census: m.census ? { ...m.census } : null,
    hazardVectors: [...m.hazardVectors],
    raster: m.raster,
    points: [...m.points],
    viewport: { ...m.viewport },
  };
}

function cloneState(s: AppState): AppState {
  return {
    version: s.version,
    maps: s.maps.map(cloneMap),
    table: s.table ? { ...s.table } : null,
  };
}

export class UiStore {
  private state: AppState;
  private transient: Transient;
  private listeners: Listener[] = [];

  constructor(initialToken?: string | null) {
    this.transient = { highlightedGeoid: null, popup: null, warning: null, unmappable: [] };
    if (initialToken) {
      try {
        this.state = decodeState(initialToken);
      } catch (e) {
        this.state = defaultState();
        this.transient.warning =
          e instanceof StateError ? `invalid share link: ${e.message}` : "invalid share link";
      }
    } else {
      this.state = defaultState();
    }
  }

  getState(): AppState {
    return cloneState(this.state);
  }

  getTransient(): Transient {
    return { ...this.transient, unmappable: [...this.transient.unmappable] };
  }

  subscribe(fn: Listener): () => void {
    this.listeners.push(fn);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== fn);
    };
  }

  private commit(next: AppState): void {
    validateState(next);
    this.state = next;
    for (const fn of this.listeners) fn(this.getState(), this.getTransient());
  }

  /** Token for the URL fragment (#s=<token>). */
  urlToken(): string {
    return encodeState(this.state);
  }

  get canAddMap(): boolean {
    return this.state.maps.length < MAX_MAPS;
  }

  addMap(): boolean {
    if (!this.canAddMap) return false; // control disabled at the limit
    const next = cloneState(this.state);
    next.maps.push(emptyMap());
    this.commit(next);
    return true;
  }

  removeMap(mapIndex: number): void {
    if (this.state.maps.length <= 1) return; // always keep one pane
    const next = cloneState(this.state);
    next.maps.splice(mapIndex, 1);
    this.commit(next);
  }

  private mapAt(next: AppState, mapIndex: number): MapState {
    const m = next.maps[mapIndex];
    if (!m) throw new StateError(`no map at index ${mapIndex}`);
    return m;
  }

  /** Census selection replaces any prior census layer/metric on the map. */
  selectCensus(mapIndex: number, selection: CensusSelection): void {
    const next = cloneState(this.state);
    this.mapAt(next, mapIndex).census = { ...selection };
    this.commit(next);
  }

  clearCensus(mapIndex: number): void {
    const next = cloneState(this.state);
    this.mapAt(next, mapIndex).census = null;
    this.commit(next);
  }

  /** Palette switch re-colors only; layer and metric stay put. */
  setPalette(mapIndex: number, palette: string): void {
    const next = cloneState(this.state);
    const m = this.mapAt(next, mapIndex);
    if (m.census) m.census.palette = palette;
    this.commit(next);
  }

  /** Hazard vectors and point layers accumulate as sets; raster replaces. */
  toggleLayer(mapIndex: number, entry: CatalogEntry): void {
    const next = cloneState(this.state);
    const m = this.mapAt(next, mapIndex);
    switch (entry.kind) {
      case "hazard_vector": {
        const i = m.hazardVectors.indexOf(entry.layer_id);
        if (i >= 0) m.hazardVectors.splice(i, 1);
        else m.hazardVectors.push(entry.layer_id);
        break;
      }
      case "point": {
        const i = m.points.indexOf(entry.layer_id);
        if (i >= 0) m.points.splice(i, 1);
        else m.points.push(entry.layer_id);
        break;
      }
      case "hazard_raster":
        m.raster = m.raster === entry.layer_id ? null : entry.layer_id;
        break;
      case "census_map":
        throw new StateError("census layers need a metric; use selectCensus");
    }
    this.commit(next);
  }

  setViewport(mapIndex: number, viewport: Viewport): void {
    const next = cloneState(this.state);
    this.mapAt(next, mapIndex).viewport = { ...viewport };
    this.commit(next);
  }

  setTable(table: TableState | null): void {
    const next = cloneState(this.state);
    next.table = table ? { ...table } : null;
    this.commit(next);
  }

  /** First map pane whose census selection shows the given dataset. */
  mapShowingDataset(layerId: string): number {
    return this.state.maps.findIndex((m) => m.census !== null && m.census.layerId === layerId);
  }

  /**
   * Table row selection: highlight the block group, zoom the first map
   * showing that dataset to its bbox, and open its attribute popup. A GEOID
   * with no matching feature is recorded as unmappable instead of crashing.
   */
  selectTableRow(
    layerId: string,
    geoid: string,
    layerFeatures: Feature[],
    values: Record<string, Cell> = {},
  ): boolean {
    const mapIndex = this.mapShowingDataset(layerId);
    if (mapIndex < 0) return false;
    const feature = layerFeatures.find((f) => f.properties.GEOID === geoid);
    if (!feature) {
      if (!this.transient.unmappable.includes(geoid)) this.transient.unmappable.push(geoid);
      return false;
    }
    const next = cloneState(this.state);
    this.mapAt(next, mapIndex).viewport = viewportForBBox(bboxOfFeature(feature));
    this.transient.highlightedGeoid = geoid;
    this.transient.popup = { mapIndex, geoid, values };
    this.commit(next);
    return true;
  }

  /** Reset to the exact default state; the URL token must be cleared. */
  refreshAll(): void {
    this.transient = { highlightedGeoid: null, popup: null, warning: null, unmappable: [] };
    this.commit(defaultState());
  }
}
