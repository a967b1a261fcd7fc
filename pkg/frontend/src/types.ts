export type Tier = "standard" | "preferred" | "required";
export type DecayName = "expansive" | "balanced" | "focused";
export type ViewMode = "grid" | "ward";

export const TIERS: Tier[] = ["standard", "preferred", "required"];
export const DECAYS: DecayName[] = ["expansive", "balanced", "focused"];

export interface TaxonomyCategory {
  id: string;
  name: string | null;
}

export interface TaxonomyResponse {
  categories: TaxonomyCategory[];
  taxonomy_hash: string;
}

export interface ConfigEntry {
  members: string[];
  tier: Tier;
  decay: DecayName;
}

export interface UserConfig {
  name?: string;
  entries: ConfigEntry[];
}

export interface ScoreResponse {
  granularity: ViewMode;
  scores: Record<string, number>;
  fingerprint: string;
  compute_ms: number;
}

export interface PointEntry {
  members: string[];
  tier: Tier;
  decay: DecayName;
  k: number;
}

export interface PointResponse {
  score: number;
  cell_id: string;
  ward_id: string | null;
  fingerprint: string;
  entries: PointEntry[];
}

export interface GeometryFeature {
  type: "Feature";
  id: string;
  properties: Record<string, unknown>;
  geometry: {
    type: "Polygon" | "MultiPolygon";
    coordinates: number[][][] | number[][][][];
  };
}

export interface GeometryResponse {
  type: "FeatureCollection";
  features: GeometryFeature[];
}
