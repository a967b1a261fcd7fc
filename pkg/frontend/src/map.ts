import * as L from "leaflet";
import type { GeometryFeature, GeometryResponse, ScoreResponse, ViewMode } from "./types";
import { HATCH_COLOR, NEUTRAL_ZERO, scoreColor } from "./ramp";

export interface MapViewOptions {
  container: HTMLElement;
  tileUrl: string;
  tileAttribution: string;
  fetchGeometry: (granularity: ViewMode) => Promise<GeometryResponse>;
  onHover: (lat: number, lon: number, point: { x: number; y: number }) => void;
  onHoverEnd: () => void;
}

export interface MapViewController {
  map: L.Map;
  setMode: (mode: ViewMode) => Promise<void>;
  setSurface: (surface: ScoreResponse, hasRequired: boolean) => void;
  destroy: () => void;
}

interface GridInfo {
  bounds: L.LatLngBounds;
  nCols: number;
  nRows: number;
  cellPx: number;
}

interface CachedGeometry {
  fc: GeometryResponse;
  ids: Set<string>;
  grid: GridInfo | null; // grid granularity only
}

const ringBounds = (ring: number[][]): [number, number, number, number] => {
  let minLon = Infinity;
  let minLat = Infinity;
  let maxLon = -Infinity;
  let maxLat = -Infinity;
  for (const [lon, lat] of ring) {
    if (lon < minLon) minLon = lon;
    if (lon > maxLon) maxLon = lon;
    if (lat < minLat) minLat = lat;
    if (lat > maxLat) maxLat = lat;
  }
  return [minLon, minLat, maxLon, maxLat];
};

function gridInfo(fc: GeometryResponse): GridInfo {
  let minLon = Infinity;
  let minLat = Infinity;
  let maxLon = -Infinity;
  let maxLat = -Infinity;
  for (const f of fc.features) {
    const [a, b, c, d] = ringBounds((f.geometry.coordinates as number[][][])[0]);
    if (a < minLon) minLon = a;
    if (b < minLat) minLat = b;
    if (c > maxLon) maxLon = c;
    if (d > maxLat) maxLat = d;
  }
  // cells unproject to equal lat/lon rectangles, so one cell fixes the pitch
  const first = ringBounds((fc.features[0].geometry.coordinates as number[][][])[0]);
  const cellLon = first[2] - first[0];
  const cellLat = first[3] - first[1];
  const nCols = Math.max(1, Math.round((maxLon - minLon) / cellLon));
  const nRows = Math.max(1, Math.round((maxLat - minLat) / cellLat));
  // cap the backing canvas around 2400px on the long side; hatching needs
  // a few pixels per cell and degrades to a tint below that
  const cellPx = Math.min(8, Math.max(1, Math.floor(2400 / Math.max(nCols, nRows))));
  return {
    bounds: L.latLngBounds([minLat, minLon], [maxLat, maxLon]),
    nCols,
    nRows,
    cellPx,
  };
}

function makeHatchPattern(ctx: CanvasRenderingContext2D): CanvasPattern | null {
  const tile = document.createElement("canvas");
  tile.width = 6;
  tile.height = 6;
  const tctx = tile.getContext("2d");
  if (!tctx) return null;
  tctx.fillStyle = NEUTRAL_ZERO;
  tctx.fillRect(0, 0, 6, 6);
  tctx.strokeStyle = HATCH_COLOR;
  tctx.lineWidth = 1.2;
  tctx.beginPath();
  tctx.moveTo(-2, 8);
  tctx.lineTo(8, -2);
  tctx.moveTo(-2, 2);
  tctx.lineTo(2, -2);
  tctx.moveTo(4, 8);
  tctx.lineTo(8, 4);
  tctx.stroke();
  return ctx.createPattern(tile, "repeat");
}

export function createMapView(opts: MapViewOptions): MapViewController {
  const map = L.map(opts.container, { zoomControl: true });
  map.setView([0, 0], 2);
  L.tileLayer(opts.tileUrl, { attribution: opts.tileAttribution, maxZoom: 19 }).addTo(map);

  const cache = new Map<ViewMode, CachedGeometry>();
  let mode: ViewMode = "ward";
  let fitted = false;

  let wardLayer: L.GeoJSON | null = null;
  let gridOverlay: L.ImageOverlay | null = null;
  const gridCanvas = document.createElement("canvas");

  map.on("mousemove", (e: L.LeafletMouseEvent) => {
    if (mode !== "grid") return;
    opts.onHover(e.latlng.lat, e.latlng.lng, { x: e.containerPoint.x, y: e.containerPoint.y });
  });
  map.on("mouseout", () => opts.onHoverEnd());

  const loadGeometry = async (granularity: ViewMode): Promise<CachedGeometry> => {
    const hit = cache.get(granularity);
    if (hit) return hit;
    const fc = await opts.fetchGeometry(granularity);
    const entry: CachedGeometry = {
      fc,
      ids: new Set(fc.features.map((f) => f.id)),
      grid: granularity === "grid" && fc.features.length > 0 ? gridInfo(fc) : null,
    };
    cache.set(granularity, entry);
    return entry;
  };

  const clearLayers = () => {
    if (wardLayer) {
      wardLayer.remove();
      wardLayer = null;
    }
    if (gridOverlay) {
      gridOverlay.remove();
      gridOverlay = null;
    }
  };

  const paintWards = (geom: CachedGeometry, scores: Record<string, number>) => {
    const style = (feature: GeometryFeature): L.PathOptions => {
      const v = scores[feature.id];
      return {
        fillColor: v === undefined ? NEUTRAL_ZERO : scoreColor(v),
        fillOpacity: 0.72,
        color: "#37474f",
        weight: 1,
      };
    };
    if (!wardLayer) {
      wardLayer = L.geoJSON(geom.fc as never, {
        style: (f) => style(f as unknown as GeometryFeature),
      }).addTo(map);
    } else {
      wardLayer.eachLayer((l) => {
        const feature = (l as L.Path & { feature: GeometryFeature }).feature;
        (l as L.Path).setStyle(style(feature));
      });
    }
  };

  const paintGrid = (geom: CachedGeometry, scores: Record<string, number>, hasRequired: boolean) => {
    const info = geom.grid;
    if (!info) return;
    const { nCols, nRows, cellPx } = info;
    gridCanvas.width = nCols * cellPx;
    gridCanvas.height = nRows * cellPx;
    const ctx = gridCanvas.getContext("2d");
    if (!ctx) return;
    ctx.clearRect(0, 0, gridCanvas.width, gridCanvas.height);
    const hatch = hasRequired && cellPx >= 4 ? makeHatchPattern(ctx) : null;
    const gatedFallback = hasRequired ? HATCH_COLOR : NEUTRAL_ZERO;
    for (const [id, v] of Object.entries(scores)) {
      const cid = Number(id);
      const row = Math.floor(cid / nCols);
      const col = cid % nCols;
      const x = col * cellPx;
      const y = (nRows - 1 - row) * cellPx; // grid row 0 is the south edge
      if (v === 0 && hasRequired) {
        ctx.fillStyle = hatch ?? gatedFallback;
      } else {
        ctx.fillStyle = scoreColor(v);
      }
      ctx.fillRect(x, y, cellPx, cellPx);
    }
    const url = gridCanvas.toDataURL();
    if (!gridOverlay) {
      gridOverlay = L.imageOverlay(url, info.bounds, {
        opacity: 0.8,
        interactive: false,
        className: "grid-overlay",
      }).addTo(map);
    } else {
      gridOverlay.setUrl(url);
    }
  };

  let currentSurface: { surface: ScoreResponse; hasRequired: boolean } | null = null;

  const repaint = () => {
    if (!currentSurface || currentSurface.surface.granularity !== mode) return;
    const geom = cache.get(mode);
    if (!geom) return;
    const { surface, hasRequired } = currentSurface;
    if (mode === "ward") paintWards(geom, surface.scores);
    else paintGrid(geom, surface.scores, hasRequired);
  };

  return {
    map,
    async setMode(next) {
      mode = next;
      const geom = await loadGeometry(next);
      clearLayers();
      if (!fitted && geom.fc.features.length > 0) {
        const bounds =
          geom.grid?.bounds ??
          L.geoJSON(geom.fc as never).getBounds();
        map.fitBounds(bounds, { padding: [16, 16] });
        fitted = true;
      }
      repaint();
    },
    setSurface(surface, hasRequired) {
      const geom = cache.get(surface.granularity);
      if (!geom) return; // geometry still loading; repaint happens in setMode
      for (const id of Object.keys(surface.scores)) {
        if (!geom.ids.has(id)) {
          throw new Error(
            `geometry/score id mismatch: score id ${id} missing from ${surface.granularity} geometry`,
          );
        }
      }
      currentSurface = { surface, hasRequired };
      repaint();
    },
    destroy() {
      clearLayers();
      map.remove();
    },
  };
}
