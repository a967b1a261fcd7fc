import type {
  GeometryResponse,
  PointResponse,
  ScoreResponse,
  TaxonomyResponse,
  UserConfig,
  ViewMode,
} from "./types";

export class ApiError extends Error {
  readonly status: number;

  constructor(status: number, detail: string) {
    super(detail);
    this.name = "ApiError";
    this.status = status;
  }
}

export interface ScoreParams {
  config: UserConfig;
  granularity: ViewMode;
  bbox?: [number, number, number, number];
  taxonomyHash?: string;
}

export type PointLookup = { config: UserConfig } | { fingerprint: string };

async function errorDetail(res: Response): Promise<string> {
  try {
    const body = await res.json();
    if (typeof body?.detail === "string") return body.detail;
    return JSON.stringify(body);
  } catch {
    return res.statusText || `HTTP ${res.status}`;
  }
}

async function asJson<T>(res: Response): Promise<T> {
  if (!res.ok) throw new ApiError(res.status, await errorDetail(res));
  return (await res.json()) as T;
}

export class ApiClient {
  readonly baseUrl: string;

  constructor(baseUrl: string) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  async taxonomy(): Promise<TaxonomyResponse> {
    return asJson(await fetch(`${this.baseUrl}/taxonomy`));
  }

  async score(params: ScoreParams): Promise<ScoreResponse> {
    const body: Record<string, unknown> = {
      config: params.config,
      granularity: params.granularity,
    };
    if (params.bbox) body.bbox = params.bbox;
    if (params.taxonomyHash) body.taxonomy_hash = params.taxonomyHash;
    const res = await fetch(`${this.baseUrl}/score`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    return asJson(res);
  }

  async point(lat: number, lon: number, by: PointLookup): Promise<PointResponse> {
    const qs = new URLSearchParams({ lat: String(lat), lon: String(lon) });
    if ("fingerprint" in by) qs.set("fingerprint", by.fingerprint);
    else qs.set("config", JSON.stringify(by.config));
    return asJson(await fetch(`${this.baseUrl}/point?${qs}`));
  }

  /** Like point() but maps out-of-bounds (404) to null so hover handlers
      can suppress the tooltip without try/catch noise. */
  async pointOrNull(
    lat: number,
    lon: number,
    by: PointLookup,
  ): Promise<PointResponse | null> {
    try {
      return await this.point(lat, lon, by);
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) return null;
      throw err;
    }
  }

  async geometry(granularity: ViewMode): Promise<GeometryResponse> {
    const qs = new URLSearchParams({ granularity });
    return asJson(await fetch(`${this.baseUrl}/geometry?${qs}`));
  }
}
