// Wire types for the layer-server API.

export type Cell = string | number | null;

export interface CatalogEntry {
  layer_id: string;
  kind: "census_map" | "hazard_vector" | "point" | "hazard_raster";
  label: string;
  bbox: [number, number, number, number] | null;
  metrics?: string[];
}

export interface Catalog {
  entries: CatalogEntry[];
}

export type Position = [number, number];

export interface Geometry {
  type: "Point" | "MultiPoint" | "LineString" | "Polygon" | "MultiPolygon";
  coordinates: unknown;
}

export interface Feature {
  type: "Feature";
  id?: string;
  properties: Record<string, Cell>;
  geometry: Geometry;
}

export interface FeatureCollection {
  type: "FeatureCollection";
  features: Feature[];
}

export interface ClusterNode {
  id: string;
  lon: number;
  lat: number;
  count: number;
  point_id: string | null;
}

export interface TableResponse {
  columns: string[];
  rows: Cell[][];
  total_matching: number;
  page: number;
  page_size: number;
}

export interface RasterWindow {
  width: number;
  height: number;
  values: (number | null)[][];
  bbox: [number, number, number, number];
  level_used: number;
}

export interface SearchHit {
  name: string;
  lon: number;
  lat: number;
}
