"""Geometry primitives: local planar projection, polygons, the metric grid,
and ward assignment by majority overlap.

All planar coordinates are meters in a local equirectangular frame anchored
at a study-area reference point. At city scale (< 60 km from the reference)
the projection round-trips to well under a millimeter, which is all the
engine needs; geodesic-exact areas are a non-goal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np
import shapely

from . import kernels
from .errors import DegenerateWard, EmptyInput, InvalidGeometry, OutOfBounds

EARTH_RADIUS_M = 6_371_008.8
DEFAULT_CELL_SIZE_M = 250.0


@dataclass(frozen=True)
class LatLon:
    """WGS84 coordinate (degrees)."""

    lat: float
    lon: float

    def __post_init__(self):
        if not (-90.0 <= self.lat <= 90.0):
            raise ValueError(f"latitude out of range: {self.lat}")
        if not (-180.0 <= self.lon <= 180.0):
            raise ValueError(f"longitude out of range: {self.lon}")


@dataclass(frozen=True)
class PlanarPoint:
    """Meters east/north of the frame reference."""

    x: float
    y: float


def project(p: LatLon, reference: LatLon) -> PlanarPoint:
    """Local equirectangular projection about ``reference``."""
    kx = EARTH_RADIUS_M * math.cos(math.radians(reference.lat)) * math.pi / 180.0
    ky = EARTH_RADIUS_M * math.pi / 180.0
    return PlanarPoint((p.lon - reference.lon) * kx, (p.lat - reference.lat) * ky)


def unproject(q: PlanarPoint, reference: LatLon) -> LatLon:
    kx = EARTH_RADIUS_M * math.cos(math.radians(reference.lat)) * math.pi / 180.0
    ky = EARTH_RADIUS_M * math.pi / 180.0
    return LatLon(reference.lat + q.y / ky, reference.lon + q.x / kx)


class Frame:
    """A projection frame: the reference point plus vectorized converters."""

    def __init__(self, reference: LatLon):
        self.reference = reference
        self._kx = EARTH_RADIUS_M * math.cos(math.radians(reference.lat)) * math.pi / 180.0
        self._ky = EARTH_RADIUS_M * math.pi / 180.0

    def project(self, p: LatLon) -> PlanarPoint:
        return PlanarPoint((p.lon - self.reference.lon) * self._kx,
                           (p.lat - self.reference.lat) * self._ky)

    def unproject(self, q: PlanarPoint) -> LatLon:
        return LatLon(self.reference.lat + q.y / self._ky,
                      self.reference.lon + q.x / self._kx)

    def project_coords(self, lonlat: np.ndarray) -> np.ndarray:
        """(N,2) lon/lat degrees -> (N,2) planar meters."""
        out = np.empty_like(lonlat, dtype=np.float64)
        out[:, 0] = (lonlat[:, 0] - self.reference.lon) * self._kx
        out[:, 1] = (lonlat[:, 1] - self.reference.lat) * self._ky
        return out

    def unproject_coords(self, xy: np.ndarray) -> np.ndarray:
        """(N,2) planar meters -> (N,2) lon/lat degrees."""
        out = np.empty_like(xy, dtype=np.float64)
        out[:, 0] = self.reference.lon + xy[:, 0] / self._kx
        out[:, 1] = self.reference.lat + xy[:, 1] / self._ky
        return out

    def matches(self, other: "Frame | LatLon", tol_deg: float = 1e-9) -> bool:
        ref = other.reference if isinstance(other, Frame) else other
        return (abs(ref.lat - self.reference.lat) <= tol_deg
                and abs(ref.lon - self.reference.lon) <= tol_deg)

    def __repr__(self):
        return f"Frame(lat={self.reference.lat}, lon={self.reference.lon})"


def _as_closed_ring(coords) -> np.ndarray:
    arr = np.asarray(coords, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 3:
        raise InvalidGeometry("ring needs at least 3 (x, y) vertices")
    if not np.isfinite(arr).all():
        raise InvalidGeometry("ring contains non-finite coordinates")
    if not np.array_equal(arr[0], arr[-1]):
        arr = np.vstack([arr, arr[0]])
    return arr


def _ring_signed_area(ring: np.ndarray) -> float:
    x = ring[:-1, 0]
    y = ring[:-1, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


class Polygon:
    """Planar polygon: one exterior ring plus optional holes.

    Rings are stored closed (first vertex repeated last). The exterior is
    normalized counter-clockwise, holes clockwise. Construction does not run
    the O(n^2) simplicity check; call :meth:`validate` where inputs are
    untrusted.
    """

    __slots__ = ("exterior", "holes")

    def __init__(self, exterior, holes: Iterable = ()):
        ext = _as_closed_ring(exterior)
        if _ring_signed_area(ext) < 0:
            ext = ext[::-1].copy()
        self.exterior = ext
        hs = []
        for h in holes:
            ring = _as_closed_ring(h)
            if _ring_signed_area(ring) > 0:
                ring = ring[::-1].copy()
            hs.append(ring)
        self.holes = hs

    @classmethod
    def rect(cls, xmin: float, ymin: float, xmax: float, ymax: float) -> "Polygon":
        return cls([(xmin, ymin), (xmax, ymin), (xmax, ymax), (xmin, ymax)])

    @classmethod
    def regular(cls, cx: float, cy: float, radius: float, n_vertices: int = 64) -> "Polygon":
        ang = 2.0 * np.pi * np.arange(n_vertices) / n_vertices
        return cls(np.column_stack([cx + radius * np.cos(ang),
                                    cy + radius * np.sin(ang)]))

    @property
    def area(self) -> float:
        a = abs(_ring_signed_area(self.exterior))
        for h in self.holes:
            a -= abs(_ring_signed_area(h))
        return a

    @property
    def perimeter(self) -> float:
        d = np.diff(self.exterior, axis=0)
        return float(np.hypot(d[:, 0], d[:, 1]).sum())

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        xs = self.exterior[:, 0]
        ys = self.exterior[:, 1]
        return float(xs.min()), float(ys.min()), float(xs.max()), float(ys.max())

    def rings(self) -> Iterator[tuple[np.ndarray, float]]:
        """Yield (closed ring, sign) pairs: +1 exterior, -1 each hole."""
        yield self.exterior, 1.0
        for h in self.holes:
            yield h, -1.0

    def flat_rings(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Kernel form: open-ring xs, ys, offsets, signs."""
        xs, ys, offsets, signs = [], [], [0], []
        for ring, sign in self.rings():
            open_ring = ring[:-1]
            xs.append(open_ring[:, 0])
            ys.append(open_ring[:, 1])
            offsets.append(offsets[-1] + open_ring.shape[0])
            signs.append(sign)
        return (np.concatenate(xs), np.concatenate(ys),
                np.array(offsets, np.int64), np.array(signs, np.float64))

    def contains(self, x: float, y: float) -> bool:
        xs, ys, offsets, _ = self.flat_rings()
        return kernels.point_in_rings(x, y, xs, ys, offsets)

    def centroid(self) -> PlanarPoint:
        ring = self.exterior
        x = ring[:-1, 0]
        y = ring[:-1, 1]
        xn = np.roll(x, -1)
        yn = np.roll(y, -1)
        cross = x * yn - xn * y
        a = cross.sum() / 2.0
        if abs(a) < 1e-12:
            return PlanarPoint(float(x.mean()), float(y.mean()))
        cx = float(((x + xn) * cross).sum() / (6.0 * a))
        cy = float(((y + yn) * cross).sum() / (6.0 * a))
        return PlanarPoint(cx, cy)

    def validate(self) -> "Polygon":
        """Raise InvalidGeometry on self-intersection or empty area."""
        if self.area <= 0:
            raise InvalidGeometry("polygon area must be positive")
        if not self.to_shapely().is_valid:
            raise InvalidGeometry("polygon is self-intersecting or malformed")
        return self

    def to_shapely(self) -> shapely.Polygon:
        return shapely.Polygon(self.exterior, [h for h in self.holes])

    @classmethod
    def from_shapely(cls, geom: shapely.Polygon) -> "Polygon":
        return cls(np.asarray(geom.exterior.coords),
                   [np.asarray(r.coords) for r in geom.interiors])

    def __repr__(self):
        return (f"Polygon({self.exterior.shape[0] - 1} vertices, "
                f"{len(self.holes)} holes, area={self.area:.1f})")


def intersection_area(a: Polygon, b: Polygon) -> float:
    """Exact overlap area of two valid polygons (square meters)."""
    a.validate()
    b.validate()
    return float(a.to_shapely().intersection(b.to_shapely()).area)


@dataclass
class GridCell:
    id: int
    centroid: PlanarPoint
    ward_id: str | None
    k_vector: dict[str, int] = field(default_factory=dict)


class Grid:
    """Row-major square grid covering the ward-union bounding box.

    Cell ``id = row * n_cols + col`` with row 0 at the south edge. Every
    bbox cell is kept, including cells overlapping no ward (``ward_id``
    None); those are usable for point queries but excluded from ward
    aggregation.
    """

    def __init__(self, origin: PlanarPoint, cell_size: float, n_cols: int,
                 n_rows: int, ward_ids: Sequence[str], cell_ward: np.ndarray,
                 reference: LatLon | None = None):
        self.origin = origin
        self.cell_size = float(cell_size)
        self.n_cols = int(n_cols)
        self.n_rows = int(n_rows)
        self.ward_ids = list(ward_ids)
        self.cell_ward = np.asarray(cell_ward, np.int32)
        self.reference = reference
        if self.cell_ward.shape[0] != self.n_cells:
            raise ValueError("cell_ward length must equal n_cols * n_rows")

    @property
    def n_cells(self) -> int:
        return self.n_cols * self.n_rows

    def cell_rect(self, cell_id: int) -> tuple[float, float, float, float]:
        row, col = divmod(int(cell_id), self.n_cols)
        x0 = self.origin.x + col * self.cell_size
        y0 = self.origin.y + row * self.cell_size
        return x0, y0, x0 + self.cell_size, y0 + self.cell_size

    def cell_centroid(self, cell_id: int) -> PlanarPoint:
        x0, y0, x1, y1 = self.cell_rect(cell_id)
        return PlanarPoint((x0 + x1) / 2.0, (y0 + y1) / 2.0)

    def cell_ward_id(self, cell_id: int) -> str | None:
        w = int(self.cell_ward[cell_id])
        return self.ward_ids[w] if w >= 0 else None

    def cell_at(self, p: PlanarPoint) -> int:
        col = math.floor((p.x - self.origin.x) / self.cell_size)
        row = math.floor((p.y - self.origin.y) / self.cell_size)
        if not (0 <= col < self.n_cols and 0 <= row < self.n_rows):
            raise OutOfBounds(f"point ({p.x:.1f}, {p.y:.1f}) outside grid extent")
        return row * self.n_cols + col

    def cells(self) -> Iterator[GridCell]:
        for cid in range(self.n_cells):
            yield GridCell(cid, self.cell_centroid(cid), self.cell_ward_id(cid))

    def centroids(self) -> np.ndarray:
        """(n_cells, 2) centroid coordinates in row-major cell order."""
        cols = np.arange(self.n_cols) + 0.5
        rows = np.arange(self.n_rows) + 0.5
        xx, yy = np.meshgrid(self.origin.x + cols * self.cell_size,
                             self.origin.y + rows * self.cell_size)
        return np.column_stack([xx.ravel(), yy.ravel()])


def overlap_areas_on_grid(poly: Polygon, origin: PlanarPoint, cell_size: float,
                          n_cols: int, n_rows: int) -> tuple[np.ndarray, np.ndarray]:
    xs, ys, offsets, signs = poly.flat_rings()
    return kernels.polygon_cell_areas(xs, ys, offsets, signs, origin.x,
                                      origin.y, cell_size, n_cols, n_rows)


def build_grid(wards: Sequence[tuple[str, Polygon]], cell_size: float = DEFAULT_CELL_SIZE_M,
               reference: LatLon | None = None) -> Grid:
    """Tile the ward-union bbox with square cells and assign each cell to
    the ward holding the majority of its area (ties to the smaller id)."""
    if not wards:
        raise EmptyInput("no wards supplied")
    if cell_size <= 0:
        raise ValueError(f"cell_size must be positive, got {cell_size}")
    for wid, poly in wards:
        if poly.area <= 0:
            raise DegenerateWard(f"ward {wid!r} has non-positive area")

    minx = min(p.bounds[0] for _, p in wards)
    miny = min(p.bounds[1] for _, p in wards)
    maxx = max(p.bounds[2] for _, p in wards)
    maxy = max(p.bounds[3] for _, p in wards)
    n_cols = max(1, math.ceil((maxx - minx - 1e-9) / cell_size))
    n_rows = max(1, math.ceil((maxy - miny - 1e-9) / cell_size))
    origin = PlanarPoint(minx, miny)

    ward_ids = sorted({wid for wid, _ in wards})
    ward_index = {wid: i for i, wid in enumerate(ward_ids)}
    n_cells = n_cols * n_rows
    best_area = np.zeros(n_cells, np.float64)
    cell_ward = np.full(n_cells, -1, np.int32)
    # Sorted iteration + strict > update makes ties land on the smaller id.
    for wid, poly in sorted(wards, key=lambda t: t[0]):
        ids, areas = overlap_areas_on_grid(poly, origin, cell_size, n_cols, n_rows)
        for cid, area in zip(ids, areas):
            if area > best_area[cid] and area > 0.0:
                best_area[cid] = area
                cell_ward[cid] = ward_index[wid]
    return Grid(origin, cell_size, n_cols, n_rows, ward_ids, cell_ward, reference)


def assign_ward(cell_rect: tuple[float, float, float, float],
                wards: Sequence[tuple[str, Polygon]]) -> str | None:
    """Majority-overlap ward for one cell rectangle; ties break to the
    lexicographically smallest ward id; None when nothing overlaps."""
    x0, y0, x1, y1 = cell_rect
    best_id = None
    best_area = 0.0
    for wid, poly in sorted(wards, key=lambda t: t[0]):
        xs, ys, offsets, signs = poly.flat_rings()
        area = 0.0
        for r in range(offsets.shape[0] - 1):
            s, e = offsets[r], offsets[r + 1]
            area += signs[r] * kernels.ring_clip_area(xs[s:e], ys[s:e], x0, y0, x1, y1)
        if area > best_area:
            best_area = area
            best_id = wid
    return best_id
