"""GeoJSON ingestion: amenity features, ward boundaries, and the category
taxonomy registry.

Category assignment happens upstream (see docs/osm_preprocessing.md); here a
feature arrives with a `category` property already set and is checked against
the taxonomy. Ward geometries are projected into a shared planar frame whose
reference is the centroid of the collection's bounding box.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from typing import IO, Iterator, Union

import numpy as np

from .errors import EmptyResult, MissingProperty, ParseError, UnknownCategory
from .geo import Frame, LatLon, Polygon

Source = Union[bytes, str, IO]


def _read_source(source: Source) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, str):
        return source
    data = source.read()
    return data.decode("utf-8") if isinstance(data, bytes) else data


def _parse_geojson(source: Source) -> dict:
    text = _read_source(source)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed GeoJSON at line {exc.lineno}, column {exc.colno}: "
                         f"{exc.msg}") from exc
    if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection":
        raise ParseError("expected a GeoJSON FeatureCollection")
    feats = doc.get("features")
    if not isinstance(feats, list):
        raise ParseError("FeatureCollection missing a `features` array")
    return doc


class CategoryTaxonomy:
    """Ordered registry of category identifiers with display names.

    The identity of a taxonomy is the sha256 over its identifier list, so
    display-name edits do not invalidate precomputed stores while any
    add/remove/reorder does.
    """

    def __init__(self, categories: list[tuple[str, str]]):
        if not categories:
            raise ParseError("taxonomy has no categories")
        ids = [c[0] for c in categories]
        if len(set(ids)) != len(ids):
            raise ParseError("taxonomy identifiers must be unique")
        for cid in ids:
            if not cid or cid != cid.lower():
                raise ParseError(f"taxonomy identifier must be non-empty lowercase: {cid!r}")
        self._ids = tuple(ids)
        self._names = dict(categories)
        self._index = {cid: i for i, cid in enumerate(ids)}

    @property
    def ids(self) -> tuple[str, ...]:
        return self._ids

    def name(self, category_id: str) -> str:
        return self._names[category_id]

    def index(self, category_id: str) -> int:
        try:
            return self._index[category_id]
        except KeyError:
            raise UnknownCategory(f"category {category_id!r} not in taxonomy") from None

    def __contains__(self, category_id: str) -> bool:
        return category_id in self._index

    def __len__(self) -> int:
        return len(self._ids)

    def __iter__(self) -> Iterator[str]:
        return iter(self._ids)

    def __eq__(self, other) -> bool:
        return isinstance(other, CategoryTaxonomy) and other._ids == self._ids

    def sha256(self) -> str:
        canon = json.dumps(list(self._ids), separators=(",", ":")).encode()
        return hashlib.sha256(canon).hexdigest()

    def to_dict(self) -> dict:
        return {"categories": [{"id": cid, "name": self._names[cid]} for cid in self._ids]}

    def __repr__(self):
        return f"CategoryTaxonomy({len(self._ids)} categories, sha256={self.sha256()[:12]})"


def load_taxonomy(source: Source) -> CategoryTaxonomy:
    text = _read_source(source)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed taxonomy JSON: {exc.msg}") from exc
    cats = doc.get("categories")
    if not isinstance(cats, list):
        raise ParseError("taxonomy JSON must contain a `categories` array")
    pairs = []
    for c in cats:
        if not isinstance(c, dict) or "id" not in c:
            raise ParseError("each taxonomy category needs an `id`")
        pairs.append((str(c["id"]), str(c.get("name", c["id"]))))
    return CategoryTaxonomy(pairs)


def default_taxonomy() -> CategoryTaxonomy:
    text = resources.files("walkgrid.data").joinpath("taxonomy.json").read_text()
    return load_taxonomy(text)


@dataclass(frozen=True)
class AmenityFeature:
    """One amenity: a point or a single polygon part, WGS84 coordinates."""

    id: str
    category: str
    point: LatLon | None = None
    # lon-lat rings; first exterior, rest holes
    rings: tuple[np.ndarray, ...] = ()

    @property
    def is_point(self) -> bool:
        return self.point is not None

    def planar_polygon(self, frame: Frame) -> Polygon:
        if self.is_point:
            raise ValueError(f"amenity {self.id!r} is a point feature")
        projected = [frame.project_coords(r) for r in self.rings]
        return Polygon(projected[0], projected[1:])


@dataclass
class AmenityLoadResult:
    """Emitted features (sorted by id) plus drop accounting."""

    features: list[AmenityFeature]
    dropped: int = 0
    dropped_categories: dict[str, int] = field(default_factory=dict)

    def __iter__(self) -> Iterator[AmenityFeature]:
        return iter(self.features)

    def __len__(self) -> int:
        return len(self.features)


def _feature_id(feature: dict, idx: int, id_property: str) -> str:
    props = feature.get("properties") or {}
    fid = feature.get("id", props.get(id_property))
    if fid is None:
        raise MissingProperty(f"feature #{idx} has no {id_property!r} property")
    return str(fid)


def _ring_array(ring, where: str) -> np.ndarray:
    arr = np.asarray(ring, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] < 2 or arr.shape[0] < 4:
        raise ParseError(f"{where}: ring must list at least 4 closed lon-lat positions")
    return np.ascontiguousarray(arr[:, :2])


def load_amenities(source: Source, taxonomy: CategoryTaxonomy,
                   id_property: str = "id",
                   category_property: str = "category") -> AmenityLoadResult:
    """Parse amenity points/polygons, dropping unknown categories.

    MultiPolygon features split into per-part features suffixed ``#0``,
    ``#1``, ... so the perimeter-based origin rule applies per connected
    part. Output is sorted by feature id.
    """
    doc = _parse_geojson(source)
    out: list[AmenityFeature] = []
    seen: set[str] = set()
    dropped = 0
    dropped_cats: dict[str, int] = {}
    for idx, feat in enumerate(doc["features"]):
        if not isinstance(feat, dict) or feat.get("type") != "Feature":
            raise ParseError(f"feature #{idx} is not a GeoJSON Feature")
        fid = _feature_id(feat, idx, id_property)
        props = feat.get("properties") or {}
        category = props.get(category_property)
        if category is None:
            raise MissingProperty(f"feature {fid!r} has no {category_property!r} property")
        if category not in taxonomy:
            dropped += 1
            dropped_cats[category] = dropped_cats.get(category, 0) + 1
            continue
        geom = feat.get("geometry") or {}
        gtype = geom.get("type")
        coords = geom.get("coordinates")
        where = f"feature {fid!r}"
        if gtype == "Point":
            if not isinstance(coords, (list, tuple)) or len(coords) < 2:
                raise ParseError(f"{where}: point needs [lon, lat]")
            parts = [AmenityFeature(fid, category,
                                    point=LatLon(float(coords[1]), float(coords[0])))]
        elif gtype == "Polygon":
            rings = tuple(_ring_array(r, where) for r in coords)
            parts = [AmenityFeature(fid, category, rings=rings)]
        elif gtype == "MultiPolygon":
            parts = [AmenityFeature(f"{fid}#{i}", category,
                                    rings=tuple(_ring_array(r, where) for r in poly))
                     for i, poly in enumerate(coords)]
        else:
            raise ParseError(f"{where}: unsupported geometry type {gtype!r}")
        for part in parts:
            if part.id in seen:
                dropped += 1
                dropped_cats.setdefault("__duplicate__", 0)
                dropped_cats["__duplicate__"] += 1
                continue
            seen.add(part.id)
            out.append(part)
    if not out:
        raise EmptyResult("no valid amenity features after filtering")
    out.sort(key=lambda f: f.id)
    return AmenityLoadResult(out, dropped, dropped_cats)


class WardCollection:
    """Ward polygons in a shared planar frame, one entry per polygon part."""

    def __init__(self, wards: list[tuple[str, Polygon]], frame: Frame):
        self.wards = wards
        self.frame = frame

    @property
    def reference(self) -> LatLon:
        return self.frame.reference

    def __iter__(self) -> Iterator[tuple[str, Polygon]]:
        return iter(self.wards)

    def __len__(self) -> int:
        return len(self.wards)

    def ward_ids(self) -> list[str]:
        return [wid for wid, _ in self.wards]


def load_wards(source: Source, id_property: str = "ward_id") -> WardCollection:
    """Parse ward boundaries and project them to planar meters.

    The frame reference is the center of the collection's lon-lat bounding
    box. MultiPolygon wards expand to per-part entries suffixed ``#i``.
    """
    doc = _parse_geojson(source)
    raw: list[tuple[str, tuple[np.ndarray, ...]]] = []
    for idx, feat in enumerate(doc["features"]):
        if not isinstance(feat, dict) or feat.get("type") != "Feature":
            raise ParseError(f"feature #{idx} is not a GeoJSON Feature")
        props = feat.get("properties") or {}
        wid = props.get(id_property, feat.get("id"))
        if wid is None:
            raise MissingProperty(f"ward feature #{idx} has no {id_property!r} property")
        wid = str(wid)
        geom = feat.get("geometry") or {}
        gtype = geom.get("type")
        coords = geom.get("coordinates")
        where = f"ward {wid!r}"
        if gtype == "Polygon":
            raw.append((wid, tuple(_ring_array(r, where) for r in coords)))
        elif gtype == "MultiPolygon":
            for i, poly in enumerate(coords):
                raw.append((f"{wid}#{i}", tuple(_ring_array(r, where) for r in poly)))
        else:
            raise ParseError(f"{where}: unsupported geometry type {gtype!r}")
    if not raw:
        raise EmptyResult("no ward features in collection")
    ids = [wid for wid, _ in raw]
    if len(set(ids)) != len(ids):
        dupes = sorted({w for w in ids if ids.count(w) > 1})
        raise ParseError(f"duplicate ward ids after part expansion: {dupes}")

    all_lon = np.concatenate([r[:, 0] for _, rings in raw for r in rings])
    all_lat = np.concatenate([r[:, 1] for _, rings in raw for r in rings])
    reference = LatLon(float((all_lat.min() + all_lat.max()) / 2.0),
                       float((all_lon.min() + all_lon.max()) / 2.0))
    frame = Frame(reference)
    wards = []
    for wid, rings in raw:
        projected = [frame.project_coords(r) for r in rings]
        wards.append((wid, Polygon(projected[0], projected[1:])))
    return WardCollection(wards, frame)
