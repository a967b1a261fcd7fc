"""HTTP JSON service over a loaded KVectorStore.

Stateless request model: the full config travels with each request and an
LRU memo (64 entries, keyed by config fingerprint + granularity) absorbs
repeat surfaces. Geometry and scores are separate endpoints so clients
fetch shapes once and restyle per config change.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from collections import OrderedDict
from typing import Optional

import numpy as np
import shapely
from fastapi import FastAPI, HTTPException, Request
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .errors import ConfigError, OutOfBounds, TaxonomyMismatch
from .geo import Frame, LatLon
from .precompute import KVectorStore
from .scoring import (ResolvedConfig, SCORE_DECIMALS, UserConfig,
                      parse_config, validate_config)

logger = logging.getLogger("walkgrid.service")

MEMO_CAPACITY = 64


class ScoreRequest(BaseModel):
    config: dict
    granularity: str = "ward"
    bbox: Optional[list[float]] = None
    taxonomy_hash: Optional[str] = None


class _SurfaceMemo:
    """Thread-safe LRU of computed score arrays keyed by fingerprint."""

    def __init__(self, capacity: int = MEMO_CAPACITY):
        self._lock = threading.Lock()
        self._data: OrderedDict[str, np.ndarray] = OrderedDict()
        self._capacity = capacity

    def get(self, key: str) -> np.ndarray | None:
        with self._lock:
            arr = self._data.get(key)
            if arr is not None:
                self._data.move_to_end(key)
            return arr

    def put(self, key: str, arr: np.ndarray) -> None:
        with self._lock:
            self._data[key] = arr
            self._data.move_to_end(key)
            while len(self._data) > self._capacity:
                self._data.popitem(last=False)


def _cell_scores(store: KVectorStore, config: UserConfig,
                 memo: _SurfaceMemo) -> tuple[np.ndarray, str]:
    resolved = ResolvedConfig(config, store.taxonomy)
    cached = memo.get(resolved.fingerprint)
    if cached is None:
        cached = resolved.score_matrix(store.counts)
        cached.setflags(write=False)
        memo.put(resolved.fingerprint, cached)
    return cached, resolved.fingerprint


def _bbox_cell_mask(store: KVectorStore, bbox: list[float]) -> np.ndarray:
    if len(bbox) != 4:
        raise ConfigError("bbox: expected [min_lon, min_lat, max_lon, max_lat]")
    min_lon, min_lat, max_lon, max_lat = (float(v) for v in bbox)
    if min_lon >= max_lon or min_lat >= max_lat:
        raise ConfigError("bbox: min must be strictly less than max")
    grid = store.grid
    if grid.reference is None:
        raise ConfigError("bbox: store has no geographic reference")
    frame = Frame(grid.reference)
    lo = frame.project(LatLon(min_lat, min_lon))
    hi = frame.project(LatLon(max_lat, max_lon))
    cols = np.arange(grid.n_cols)
    rows = np.arange(grid.n_rows)
    cx0 = grid.origin.x + cols * grid.cell_size
    ry0 = grid.origin.y + rows * grid.cell_size
    col_ok = (cx0 < hi.x) & (cx0 + grid.cell_size > lo.x)
    row_ok = (ry0 < hi.y) & (ry0 + grid.cell_size > lo.y)
    if not col_ok.any() or not row_ok.any():
        raise ConfigError("bbox: does not intersect the grid extent")
    return (row_ok[:, None] & col_ok[None, :]).ravel()


def _require_store(app: FastAPI) -> KVectorStore:
    store = app.state.store
    if store is None:
        raise HTTPException(status_code=503, detail="store not loaded")
    return store


def _parse_validated(store: KVectorStore, raw: dict) -> UserConfig:
    try:
        config = parse_config(raw)
        validate_config(config, store.taxonomy)
    except ConfigError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    return config


def create_app(store: KVectorStore | None = None,
               cors_origins: tuple[str, ...] = ("*",)) -> FastAPI:
    app = FastAPI(title="walkgrid", docs_url=None, redoc_url=None)
    app.state.store = store
    app.state.memo = _SurfaceMemo()
    app.state.configs_by_fingerprint: dict[str, UserConfig] = {}
    app.state.geometry_cache: dict[str, dict] = {}
    app.state.geometry_lock = threading.Lock()
    app.add_middleware(CORSMiddleware, allow_origins=list(cors_origins),
                       allow_methods=["*"], allow_headers=["*"])

    @app.middleware("http")
    async def _log_requests(request: Request, call_next):
        t0 = time.perf_counter()
        request.state.fingerprint = "-"
        response = await call_next(request)
        ms = (time.perf_counter() - t0) * 1000.0
        logger.info("route=%s fingerprint=%s ms=%.2f", request.url.path,
                    request.state.fingerprint, ms)
        return response

    @app.get("/taxonomy")
    def taxonomy():
        store = _require_store(app)
        return {"categories": store.taxonomy.to_dict()["categories"],
                "taxonomy_hash": store.taxonomy_hash}

    @app.post("/score")
    def score(req: ScoreRequest, request: Request):
        store = _require_store(app)
        if req.granularity not in ("grid", "ward"):
            raise HTTPException(status_code=400,
                                detail="granularity: must be 'grid' or 'ward'")
        if req.taxonomy_hash is not None and req.taxonomy_hash != store.taxonomy_hash:
            raise HTTPException(
                status_code=422,
                detail=f"taxonomy hash mismatch: store has "
                       f"{store.taxonomy_hash}, request expects {req.taxonomy_hash}")
        config = _parse_validated(store, req.config)
        t0 = time.perf_counter()
        scores, fingerprint = _cell_scores(store, config, app.state.memo)
        request.state.fingerprint = fingerprint
        known = app.state.configs_by_fingerprint
        known[fingerprint] = config
        while len(known) > 4 * MEMO_CAPACITY:
            known.pop(next(iter(known)))
        try:
            mask = (_bbox_cell_mask(store, req.bbox)
                    if req.bbox is not None else None)
        except ConfigError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        grid = store.grid
        if req.granularity == "grid":
            ids = np.nonzero(mask)[0] if mask is not None else range(grid.n_cells)
            values = {str(int(i)): round(float(scores[i]), SCORE_DECIMALS)
                      for i in ids}
        else:
            keep = grid.cell_ward >= 0
            if mask is not None:
                keep &= mask
            idx = grid.cell_ward[keep]
            sums = np.bincount(idx, weights=scores[keep],
                               minlength=len(grid.ward_ids))
            cells = np.bincount(idx, minlength=len(grid.ward_ids))
            values = {grid.ward_ids[w]: round(float(sums[w] / cells[w]),
                                              SCORE_DECIMALS)
                      for w in range(len(grid.ward_ids)) if cells[w] > 0}
        ms = (time.perf_counter() - t0) * 1000.0
        return {"granularity": req.granularity, "scores": values,
                "fingerprint": fingerprint, "compute_ms": round(ms, 3)}

    @app.get("/point")
    def point(lat: float, lon: float, request: Request,
              config: str | None = None, fingerprint: str | None = None):
        store = _require_store(app)
        if config is not None:
            try:
                raw = json.loads(config)
            except json.JSONDecodeError as exc:
                raise HTTPException(status_code=400,
                                    detail=f"config: not valid JSON: {exc.msg}")
            cfg = _parse_validated(store, raw)
        elif fingerprint is not None:
            cfg = app.state.configs_by_fingerprint.get(fingerprint)
            if cfg is None:
                raise HTTPException(status_code=400,
                                    detail=f"fingerprint {fingerprint!r} is not "
                                           f"cached; send the config instead")
        else:
            raise HTTPException(status_code=400,
                                detail="config: query parameter required")
        resolved = ResolvedConfig(cfg, store.taxonomy)
        request.state.fingerprint = resolved.fingerprint
        if store.grid.reference is None:
            raise HTTPException(status_code=404,
                                detail="store has no geographic reference")
        frame = Frame(store.grid.reference)
        try:
            cell_id = store.grid.cell_at(frame.project(LatLon(lat, lon)))
        except (OutOfBounds, ValueError) as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        value = float(resolved.score_matrix(store.counts[cell_id:cell_id + 1])[0])
        kv = store.k_vector(cell_id)
        entries = [{"members": list(e.members), "tier": e.tier.label,
                    "decay": e.decay.name.lower(),
                    "k": sum(kv[m] for m in e.members)}
                   for e in cfg.entries]
        return {"score": round(value, SCORE_DECIMALS), "cell_id": str(cell_id),
                "ward_id": store.grid.cell_ward_id(cell_id),
                "fingerprint": resolved.fingerprint, "entries": entries}

    @app.get("/geometry")
    def geometry(granularity: str = "ward"):
        store = _require_store(app)
        if granularity not in ("grid", "ward"):
            raise HTTPException(status_code=400,
                                detail="granularity: must be 'grid' or 'ward'")
        with app.state.geometry_lock:
            cached = app.state.geometry_cache.get(granularity)
            if cached is None:
                cached = _build_geometry(store, granularity)
                app.state.geometry_cache[granularity] = cached
        return cached

    return app


def _build_geometry(store: KVectorStore, granularity: str) -> dict:
    grid = store.grid
    frame = Frame(grid.reference)
    features = []
    if granularity == "grid":
        for cid in range(grid.n_cells):
            x0, y0, x1, y1 = grid.cell_rect(cid)
            corners = np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1],
                                [x0, y0]])
            ring = frame.unproject_coords(corners).tolist()
            features.append({
                "type": "Feature", "id": str(cid),
                "properties": {"cell_id": str(cid),
                               "ward_id": grid.cell_ward_id(cid)},
                "geometry": {"type": "Polygon", "coordinates": [ring]}})
    else:
        for w, wid in enumerate(grid.ward_ids):
            cell_ids = np.nonzero(grid.cell_ward == w)[0]
            if cell_ids.size == 0:
                continue
            boxes = [shapely.box(*grid.cell_rect(int(c))) for c in cell_ids]
            merged = shapely.unary_union(boxes)
            polys = ([merged] if isinstance(merged, shapely.Polygon)
                     else list(merged.geoms))
            coords = [[frame.unproject_coords(
                np.asarray(ring.coords)).tolist()
                for ring in [g.exterior, *g.interiors]] for g in polys]
            geom = ({"type": "Polygon", "coordinates": coords[0]}
                    if len(coords) == 1
                    else {"type": "MultiPolygon", "coordinates": coords})
            features.append({
                "type": "Feature", "id": wid,
                "properties": {"ward_id": wid, "cells": int(cell_ids.size)},
                "geometry": geom})
    return {"type": "FeatureCollection", "features": features}
