"""Walking catchments: origin selection, isochrone providers, and the
per-amenity spatial union.

Two providers ship: a deterministic circular-buffer fallback (no network,
ignores the street grid) and an HTTP client for a Valhalla-style isochrone
API. Both return planar polygons in the shared frame.
"""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Protocol, Sequence

import numpy as np
import requests
import shapely

from .errors import ContractError, EmptyIsochrone, ParseError, ProviderError
from .geo import Frame, LatLon, PlanarPoint, Polygon
from .ingest import AmenityFeature

ORIGIN_INTERVAL_M = 250.0
DEFAULT_WALK_SPEED_M_PER_MIN = 80.0
# Below this the shape is numerically a point; guards degenerate specs.
MIN_CATCHMENT_AREA_M2 = 1.0


@dataclass(frozen=True)
class CatchmentSpec:
    mode: str = "walking"
    max_minutes: float = 15.0

    def __post_init__(self):
        if self.mode != "walking":
            raise ValueError(f"unsupported travel mode {self.mode!r} (walking only)")
        if self.max_minutes <= 0:
            raise ValueError(f"max_minutes must be positive, got {self.max_minutes}")


@dataclass(frozen=True)
class Catchment:
    """Reachable area for one amenity. ``parts`` are disjoint planar
    polygons; a connected catchment has exactly one."""

    amenity_id: str
    category: str
    parts: tuple[Polygon, ...]
    reference: LatLon | None = None

    @property
    def shape(self) -> Polygon:
        return max(self.parts, key=lambda p: p.area)

    @property
    def area(self) -> float:
        return sum(p.area for p in self.parts)


class IsochroneProvider(Protocol):
    name: str
    supports_batch: bool

    def isochrone(self, origin: PlanarPoint, spec: CatchmentSpec) -> list[Polygon]:
        """Reachable polygons from one origin (multiple when disconnected)."""
        ...


def catchment_origins(feature: AmenityFeature, frame: Frame,
                      interval: float = ORIGIN_INTERVAL_M) -> list[PlanarPoint]:
    """Origins for isochrone queries.

    Points map to themselves. Small polygons (perimeter <= interval) use
    the centroid. Larger ones are sampled along the exterior ring every
    ``interval`` meters of arc length starting at the first vertex; the
    final sample is dropped when it lands within 1 m of the first.
    """
    if feature.is_point:
        return [frame.project(feature.point)]
    poly = feature.planar_polygon(frame)
    perimeter = poly.perimeter
    if perimeter <= interval:
        return [poly.centroid()]
    ring = poly.exterior
    seg = np.diff(ring, axis=0)
    seg_len = np.hypot(seg[:, 0], seg[:, 1])
    cum = np.concatenate([[0.0], np.cumsum(seg_len)])
    n = int(math.floor(perimeter / interval)) + 1
    origins = []
    for i in range(n):
        d = min(i * interval, cum[-1])
        j = int(np.searchsorted(cum, d, side="right")) - 1
        j = min(j, seg_len.shape[0] - 1)
        t = (d - cum[j]) / seg_len[j] if seg_len[j] > 0 else 0.0
        origins.append(PlanarPoint(float(ring[j, 0] + t * seg[j, 0]),
                                   float(ring[j, 1] + t * seg[j, 1])))
    if len(origins) > 1:
        dx = origins[-1].x - origins[0].x
        dy = origins[-1].y - origins[0].y
        if math.hypot(dx, dy) < 1.0:
            origins.pop()
    return origins


@dataclass(frozen=True)
class BufferProvider:
    """Circle-buffer fallback: radius = walk_speed * max_minutes as a
    regular 64-gon. Deterministic, street-network-blind."""

    walk_speed: float = DEFAULT_WALK_SPEED_M_PER_MIN
    name: str = "buffer"
    supports_batch: bool = False

    def isochrone(self, origin: PlanarPoint, spec: CatchmentSpec) -> list[Polygon]:
        radius = self.walk_speed * spec.max_minutes
        return [Polygon.regular(origin.x, origin.y, radius, 64)]


def buffer_provider(walk_speed: float = DEFAULT_WALK_SPEED_M_PER_MIN) -> BufferProvider:
    if walk_speed <= 0:
        raise ValueError(f"walk_speed must be positive, got {walk_speed}")
    return BufferProvider(walk_speed)


@dataclass
class RoutingClient:
    """HTTP isochrone client (Valhalla-style contour API).

    One origin per request. Transient failures (connection errors, 5xx)
    retry with exponential backoff; a response lacking the requested
    contour is a contract violation and is not retried.
    """

    endpoint: str
    frame: Frame
    costing: str = "pedestrian"
    max_attempts: int = 3
    backoff_base_s: float = 0.2
    timeout_s: float = 30.0
    session: requests.Session = field(default_factory=requests.Session)
    sleep: Callable[[float], None] = time.sleep
    name: str = "routing"
    supports_batch: bool = False

    def isochrone(self, origin: PlanarPoint, spec: CatchmentSpec) -> list[Polygon]:
        ll = self.frame.unproject(origin)
        payload = {
            "locations": [{"lat": ll.lat, "lon": ll.lon}],
            "costing": self.costing,
            "contours": [{"time": spec.max_minutes}],
            "polygons": True,
        }
        doc = self._request(payload)
        return self._parse_contours(doc, spec.max_minutes)

    def _request(self, payload: dict) -> dict:
        last: Exception | None = None
        for attempt in range(self.max_attempts):
            if attempt:
                self.sleep(self.backoff_base_s * (2 ** (attempt - 1)))
            try:
                resp = self.session.post(self.endpoint, json=payload,
                                         timeout=self.timeout_s)
            except requests.RequestException as exc:
                last = exc
                continue
            if resp.status_code >= 500:
                last = ProviderError(f"routing engine returned {resp.status_code}")
                continue
            if resp.status_code != 200:
                raise ProviderError(f"routing engine returned {resp.status_code}")
            try:
                return resp.json()
            except ValueError as exc:
                raise ProviderError(f"unparseable isochrone response: {exc}") from exc
        raise ProviderError(f"isochrone request failed after {self.max_attempts} "
                            f"attempts: {last}")

    def _parse_contours(self, doc: dict, minutes: float) -> list[Polygon]:
        feats = doc.get("features") or []
        polys: list[Polygon] = []
        for feat in feats:
            props = feat.get("properties") or {}
            contour = props.get("contour")
            if contour is None or abs(float(contour) - minutes) > 1e-9:
                continue
            geom = feat.get("geometry") or {}
            gtype = geom.get("type")
            coords = geom.get("coordinates")
            if gtype == "Polygon":
                polys.append(self._project_rings(coords))
            elif gtype == "MultiPolygon":
                polys.extend(self._project_rings(p) for p in coords)
        if not polys:
            raise ContractError(f"response has no {minutes}-minute contour")
        return polys

    def _project_rings(self, rings) -> Polygon:
        projected = [self.frame.project_coords(np.asarray(r, np.float64))
                     for r in rings]
        return Polygon(projected[0], projected[1:])


def routing_client(endpoint: str, frame: Frame, costing: str = "pedestrian",
                   session: requests.Session | None = None, **kw) -> RoutingClient:
    if session is None:
        session = requests.Session()
    return RoutingClient(endpoint=endpoint, frame=frame, costing=costing,
                         session=session, **kw)


def _union_parts(polys: Sequence[Polygon]) -> tuple[Polygon, ...]:
    merged = shapely.unary_union([p.to_shapely() for p in polys])
    if merged.is_empty:
        return ()
    if isinstance(merged, shapely.Polygon):
        return (Polygon.from_shapely(merged),)
    return tuple(Polygon.from_shapely(g) for g in merged.geoms
                 if isinstance(g, shapely.Polygon) and g.area > 0)


def compute_catchment(feature: AmenityFeature, spec: CatchmentSpec,
                      provider: IsochroneProvider, frame: Frame) -> Catchment:
    """Union of provider isochrones from every origin of ``feature``."""
    origins = catchment_origins(feature, frame)
    polys: list[Polygon] = []
    try:
        for origin in origins:
            polys.extend(provider.isochrone(origin, spec))
    except ProviderError as exc:
        exc.amenity_id = feature.id
        raise
    parts = _union_parts(polys)
    if sum(p.area for p in parts) < MIN_CATCHMENT_AREA_M2:
        raise EmptyIsochrone(f"provider {provider.name!r} returned a zero-area "
                             f"catchment", amenity_id=feature.id)
    return Catchment(feature.id, feature.category, parts, frame.reference)


def compute_catchments(features: Iterable[AmenityFeature], spec: CatchmentSpec,
                       provider: IsochroneProvider, frame: Frame,
                       jobs: int = 8) -> list[Catchment]:
    """Catchments for many amenities with bounded provider concurrency.
    Output sorted by amenity_id regardless of completion order."""
    feats = list(features)
    jobs = max(1, int(jobs))
    if jobs == 1:
        out = [compute_catchment(f, spec, provider, frame) for f in feats]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            out = list(pool.map(
                lambda f: compute_catchment(f, spec, provider, frame), feats))
    out.sort(key=lambda c: c.amenity_id)
    return out


def save_catchments(catchments: Iterable[Catchment], directory: str,
                    frame: Frame) -> list[str]:
    """Persist catchments as one GeoJSON file per category (lon-lat)."""
    by_cat: dict[str, list[Catchment]] = {}
    for c in catchments:
        by_cat.setdefault(c.category, []).append(c)
    os.makedirs(directory, exist_ok=True)
    written = []
    for cat in sorted(by_cat):
        feats = []
        for c in sorted(by_cat[cat], key=lambda c: c.amenity_id):
            coords = [[frame.unproject_coords(ring[:, :2]).tolist()
                       for ring, _ in part.rings()] for part in c.parts]
            geom = ({"type": "Polygon", "coordinates": coords[0]}
                    if len(coords) == 1
                    else {"type": "MultiPolygon", "coordinates": coords})
            feats.append({"type": "Feature",
                          "properties": {"amenity_id": c.amenity_id,
                                         "category": c.category},
                          "geometry": geom})
        path = os.path.join(directory, f"{cat}.geojson")
        with open(path, "w") as fh:
            json.dump({"type": "FeatureCollection", "features": feats}, fh)
        written.append(path)
    return written


def load_catchments(paths: Iterable[str], frame: Frame) -> list[Catchment]:
    """Load catchments persisted by :func:`save_catchments`."""
    out: list[Catchment] = []
    for path in paths:
        with open(path) as fh:
            doc = json.load(fh)
        for feat in doc.get("features", []):
            props = feat.get("properties") or {}
            aid = props.get("amenity_id")
            cat = props.get("category")
            if aid is None or cat is None:
                raise ParseError(f"{path}: catchment feature missing amenity_id "
                                 f"or category")
            geom = feat.get("geometry") or {}
            raw = (geom["coordinates"] if geom.get("type") == "MultiPolygon"
                   else [geom["coordinates"]])
            parts = []
            for rings in raw:
                projected = [frame.project_coords(np.asarray(r, np.float64))
                             for r in rings]
                parts.append(Polygon(projected[0], projected[1:]))
            out.append(Catchment(str(aid), str(cat), tuple(parts),
                                 frame.reference))
    out.sort(key=lambda c: c.amenity_id)
    return out
