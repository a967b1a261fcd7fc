import type { ScoreResponse, UserConfig, ViewMode } from "./types";

export interface SchedulerOptions {
  fetchScore: (config: UserConfig, granularity: ViewMode) => Promise<ScoreResponse>;
  onSurface: (surface: ScoreResponse) => void;
  onError: (err: unknown) => void;
  debounceMs?: number;
}

export interface ScoreScheduler {
  schedule: (config: UserConfig, granularity: ViewMode) => void;
  pending: (granularity: ViewMode) => boolean;
  dispose: () => void;
}

interface Lane {
  timer: ReturnType<typeof setTimeout> | null;
  seq: number;
  inFlight: boolean;
  queued: UserConfig | null;
}

export const DEBOUNCE_MS = 200;

/** Coalesces rapid config edits into at most one request in flight per
    granularity. Edits made while a request is outstanding are parked and
    fired when it settles; the superseded response is discarded unseen, so
    the rendered surface always corresponds to the newest config. */
export function createScoreScheduler(opts: SchedulerOptions): ScoreScheduler {
  const debounceMs = opts.debounceMs ?? DEBOUNCE_MS;
  const lanes = new Map<ViewMode, Lane>();
  let disposed = false;

  const lane = (granularity: ViewMode): Lane => {
    let l = lanes.get(granularity);
    if (!l) {
      l = { timer: null, seq: 0, inFlight: false, queued: null };
      lanes.set(granularity, l);
    }
    return l;
  };

  const issue = (l: Lane, config: UserConfig, granularity: ViewMode): void => {
    l.inFlight = true;
    const seq = ++l.seq;
    opts.fetchScore(config, granularity).then(
      (surface) => {
        l.inFlight = false;
        if (disposed) return;
        const queued = l.queued;
        l.queued = null;
        if (queued !== null) {
          issue(l, queued, granularity); // this response is stale, drop it
          return;
        }
        if (seq === l.seq) opts.onSurface(surface);
      },
      (err) => {
        l.inFlight = false;
        if (disposed) return;
        const queued = l.queued;
        l.queued = null;
        if (queued !== null) {
          issue(l, queued, granularity);
          return;
        }
        opts.onError(err);
      },
    );
  };

  return {
    schedule(config, granularity) {
      const l = lane(granularity);
      if (l.timer !== null) clearTimeout(l.timer);
      l.timer = setTimeout(() => {
        l.timer = null;
        if (l.inFlight) l.queued = config;
        else issue(l, config, granularity);
      }, debounceMs);
    },
    pending(granularity) {
      const l = lanes.get(granularity);
      return Boolean(l && (l.timer !== null || l.inFlight || l.queued !== null));
    },
    dispose() {
      disposed = true;
      for (const l of lanes.values()) {
        if (l.timer !== null) clearTimeout(l.timer);
        l.timer = null;
        l.queued = null;
      }
    },
  };
}
