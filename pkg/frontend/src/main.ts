import "leaflet/dist/leaflet.css";
import { ApiClient, ApiError } from "./api";
import { createBanner } from "./banner";
import { createControls } from "./controls";
import { createLegend } from "./legend";
import { createMapView } from "./map";
import { PRESETS } from "./presets";
import {
  applyConfig,
  buildConfig,
  createState,
  exportConfig,
  hasRequired,
  parseConfigFile,
  validate,
} from "./state";
import { createScoreScheduler } from "./scheduler";
import { buildTooltip, renderTooltip } from "./tooltip";
import type { UserConfig, ViewMode } from "./types";

const params = new URLSearchParams(window.location.search);
const API_BASE = params.get("api") ?? "http://127.0.0.1:8000";
const TILE_URL = params.get("tiles") ?? "https://tile.openstreetmap.org/{z}/{x}/{y}.png";
const TILE_ATTRIBUTION = '&copy; <a href="https://www.openstreetmap.org/copyright">OpenStreetMap</a> contributors';
const HOVER_DEBOUNCE_MS = 80;

async function boot(): Promise<void> {
  const panel = document.getElementById("panel")!;
  const mapWrap = document.getElementById("map-wrap")!;
  const mapEl = document.getElementById("map")!;

  const banner = createBanner();
  mapWrap.appendChild(banner.element);

  const tooltipEl = document.createElement("div");
  tooltipEl.className = "tooltip";
  tooltipEl.style.display = "none";
  mapWrap.appendChild(tooltipEl);

  const legend = createLegend();
  mapWrap.appendChild(legend.element);

  const api = new ApiClient(API_BASE);
  let taxonomy;
  try {
    taxonomy = await api.taxonomy();
  } catch (err) {
    banner.show(`scoring service unreachable at ${API_BASE}: ${String(err)}`);
    return;
  }
  const knownIds = new Set(taxonomy.categories.map((c) => c.id));
  const state = createState(taxonomy.categories.map((c) => c.id));

  let lastFingerprint: string | null = null;
  let lastMode: ViewMode = state.viewMode;

  const hideTooltip = () => {
    tooltipEl.style.display = "none";
  };

  let hoverTimer: ReturnType<typeof setTimeout> | null = null;
  let hoverSeq = 0;
  const handleHover = (lat: number, lon: number, point: { x: number; y: number }) => {
    if (hoverTimer !== null) clearTimeout(hoverTimer);
    hoverTimer = setTimeout(async () => {
      const config = buildConfig(state);
      if (config.entries.length === 0) return;
      const seq = ++hoverSeq;
      try {
        const by = lastFingerprint ? { fingerprint: lastFingerprint } : { config };
        let res = await api.pointOrNull(lat, lon, by);
        if (res === null) {
          if (seq === hoverSeq) hideTooltip();
          return;
        }
        if (seq !== hoverSeq) return; // cursor has moved on
        renderTooltip(tooltipEl, buildTooltip(res));
        tooltipEl.style.display = "block";
        tooltipEl.style.left = `${point.x + 14}px`;
        tooltipEl.style.top = `${point.y + 14}px`;
      } catch (err) {
        // a restarted service forgets cached fingerprints; resend the config
        if (err instanceof ApiError && err.status === 400 && lastFingerprint) {
          lastFingerprint = null;
          handleHover(lat, lon, point);
          return;
        }
        if (seq === hoverSeq) hideTooltip();
      }
    }, HOVER_DEBOUNCE_MS);
  };

  const mapView = createMapView({
    container: mapEl as HTMLElement,
    tileUrl: TILE_URL,
    tileAttribution: TILE_ATTRIBUTION,
    fetchGeometry: (granularity) => api.geometry(granularity),
    onHover: handleHover,
    onHoverEnd: hideTooltip,
  });

  const scheduler = createScoreScheduler({
    fetchScore: (config, granularity) =>
      api.score({ config, granularity, taxonomyHash: taxonomy.taxonomy_hash }),
    onSurface: (surface) => {
      lastFingerprint = surface.fingerprint;
      try {
        mapView.setSurface(surface, hasRequired(state));
        banner.hide();
      } catch (err) {
        banner.show(String(err instanceof Error ? err.message : err));
      }
      legend.setGatedVisible(hasRequired(state));
    },
    onError: (err) => {
      banner.show(`scoring failed: ${String(err instanceof Error ? err.message : err)}`);
    },
  });

  const handleChange = () => {
    const issues = validate(state, knownIds);
    controls.setIssues(issues);
    if (state.viewMode !== lastMode) {
      lastMode = state.viewMode;
      hideTooltip();
      void mapView.setMode(state.viewMode).catch((err) => banner.show(String(err)));
    }
    if (issues.length === 0) {
      scheduler.schedule(buildConfig(state), state.viewMode);
    }
  };

  const loadPreset = (config: UserConfig) => {
    const dropped = applyConfig(state, config);
    if (dropped.length > 0) {
      banner.show(`config references unknown categories: ${dropped.join(", ")}`);
    }
    handleChange();
  };

  const controls = createControls({
    state,
    categories: taxonomy.categories,
    onChange: handleChange,
    onPreset: loadPreset,
    onExport: () => {
      const blob = new Blob([exportConfig(state)], { type: "application/json" });
      const a = document.createElement("a");
      a.href = URL.createObjectURL(blob);
      a.download = "walkgrid-config.json";
      a.click();
      URL.revokeObjectURL(a.href);
    },
    onImport: (file) => {
      file
        .text()
        .then((text) => loadPreset(parseConfigFile(text)))
        .catch((err) => banner.show(`import failed: ${String(err)}`));
    },
  });
  panel.appendChild(controls.element);

  await mapView.setMode(state.viewMode);
  loadPreset(PRESETS[0].config);
}

void boot();
