/** Typed client for the layer-server HTTP API. */

import type {
  Catalog,
  ClusterNode,
  FeatureCollection,
  RasterWindow,
  SearchHit,
  TableResponse,
} from "./types.js";
import type { BBox } from "./geo.js";
import type { TableState } from "./state.js";

export type FetchLike = (url: string) => Promise<{
  ok: boolean;
  status: number;
  json(): Promise<unknown>;
  text(): Promise<string>;
}>;

export interface TableQuery extends TableState {
  page?: number;
  pageSize?: number;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message);
  }
}

function bboxParam(b: BBox): string {
  return b.join(",");
}

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = (url) => fetch(url),
  ) {}

  private async getJson<T>(path: string, params?: Record<string, string>): Promise<T> {
    let url = this.baseUrl + path;
    if (params && Object.keys(params).length > 0) {
      url += "?" + new URLSearchParams(params).toString();
    }
    const res = await this.fetchImpl(url);
    if (!res.ok) throw new ApiError(res.status, `${path} failed with ${res.status}`);
    return (await res.json()) as T;
  }

  catalog(): Promise<Catalog> {
    return this.getJson<Catalog>("/api/catalog");
  }

  layer(layerId: string, bbox?: BBox): Promise<FeatureCollection> {
    const params: Record<string, string> = {};
    if (bbox) params.bbox = bboxParam(bbox);
    return this.getJson<FeatureCollection>(`/api/layers/${layerId}`, params);
  }

  clusters(layerId: string, zoom: number, bbox: BBox): Promise<ClusterNode[]> {
    return this.getJson<ClusterNode[]>(`/api/points/${layerId}/clusters`, {
      zoom: String(zoom),
      bbox: bboxParam(bbox),
    });
  }

  rasterWindow(layerId: string, bbox: BBox, maxPx: number): Promise<RasterWindow> {
    return this.getJson<RasterWindow>(`/api/raster/${layerId}/window`, {
      bbox: bboxParam(bbox),
      max_px: String(maxPx),
    });
  }

  private tableParams(q: TableQuery): Record<string, string> {
    const params: Record<string, string> = { dir: q.direction };
    if (q.sortColumn) params.sort = q.sortColumn;
    if (q.search) params.search = q.search;
    return params;
  }

  table(q: TableQuery): Promise<TableResponse> {
    const params = this.tableParams(q);
    if (q.page !== undefined) params.page = String(q.page);
    if (q.pageSize !== undefined) params.page_size = String(q.pageSize);
    return this.getJson<TableResponse>(`/api/table/${q.dataset}`, params);
  }

  /** Export URL carrying the table's sort/search verbatim. */
  exportUrl(q: TableQuery): string {
    const qs = new URLSearchParams(this.tableParams(q)).toString();
    return `${this.baseUrl}/api/table/${q.dataset}/export` + (qs ? `?${qs}` : "");
  }

  search(text: string): Promise<SearchHit[]> {
    return this.getJson<SearchHit[]>("/api/search", { q: text });
  }

  decodeToken(token: string): Promise<unknown> {
    return this.getJson("/api/state/decode", { token });
  }
}

/**
 * Latest-request-wins guard: resolves only if no newer request was issued
 * through the same guard before this one settled (stale responses discard).
 */
export class LatestWins<T> {
  private seq = 0;

  async run(task: () => Promise<T>): Promise<T | undefined> {
    const ticket = ++this.seq;
    const result = await task();
    return ticket === this.seq ? result : undefined;
  }
}
