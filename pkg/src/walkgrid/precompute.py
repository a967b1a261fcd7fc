"""Stage 1: intersect catchments with the grid, producing per-cell
per-category overlap counts, and persist them in a versioned binary store.

Store layout (format version 1, little-endian throughout):

    bytes 0..3    magic ``WGKV``
    bytes 4..5    format version, u16
    bytes 6..9    metadata byte length M, u32
    next M        UTF-8 JSON metadata (grid geometry, reference, taxonomy,
                  taxonomy sha256, ward ids)
    next 2*C*N    counts, u16, category-major: all N cells for category 0,
                  then category 1, ... (C categories, N cells row-major)
    next 4*N      per-cell ward index, i32, -1 for unassigned cells

A human-readable JSON sidecar (``<path>.meta.json``) duplicates the
metadata block for inspection; only the binary is read back.
"""

from __future__ import annotations

import json
import struct
from typing import Iterable, Sequence

import numpy as np

from .errors import FrameMismatch, ParseError, TaxonomyMismatch, VersionError
from .geo import Grid, LatLon, PlanarPoint, Polygon
from .ingest import CategoryTaxonomy, load_taxonomy
from .isochrone import Catchment
from . import kernels

STORE_MAGIC = b"WGKV"
STORE_VERSION = 1
COUNT_SATURATION = 65535


def coverage_test(cell_rect: tuple[float, float, float, float],
                  catchment: Catchment) -> bool:
    """A cell counts as covered when at least half its area intersects the
    catchment; the exact-50 % boundary case is covered."""
    x0, y0, x1, y1 = cell_rect
    area = 0.0
    for part in catchment.parts:
        xs, ys, offsets, signs = part.flat_rings()
        for r in range(offsets.shape[0] - 1):
            s, e = offsets[r], offsets[r + 1]
            area += signs[r] * kernels.ring_clip_area(xs[s:e], ys[s:e],
                                                      x0, y0, x1, y1)
    return area >= 0.5 * (x1 - x0) * (y1 - y0)


class KVectorStore:
    """Immutable precompute output: grid + taxonomy + (n_cells, n_categories)
    count matrix. Safe to share across threads once built or loaded."""

    def __init__(self, grid: Grid, taxonomy: CategoryTaxonomy, counts: np.ndarray):
        counts = np.asarray(counts, np.uint16)
        if counts.shape != (grid.n_cells, len(taxonomy)):
            raise ValueError(f"counts shape {counts.shape} does not match "
                             f"{grid.n_cells} cells x {len(taxonomy)} categories")
        self.grid = grid
        self.taxonomy = taxonomy
        self.counts = counts
        self.counts.setflags(write=False)

    @property
    def taxonomy_hash(self) -> str:
        return self.taxonomy.sha256()

    def k_vector(self, cell_id: int) -> dict[str, int]:
        row = self.counts[int(cell_id)]
        return {cat: int(row[i]) for i, cat in enumerate(self.taxonomy.ids)}

    def __eq__(self, other) -> bool:
        if not isinstance(other, KVectorStore):
            return NotImplemented
        g, h = self.grid, other.grid
        return (self.taxonomy == other.taxonomy
                and np.array_equal(self.counts, other.counts)
                and np.array_equal(g.cell_ward, h.cell_ward)
                and g.ward_ids == h.ward_ids
                and (g.origin.x, g.origin.y, g.cell_size, g.n_cols, g.n_rows)
                == (h.origin.x, h.origin.y, h.cell_size, h.n_cols, h.n_rows)
                and ((g.reference is None and h.reference is None)
                     or (g.reference is not None and h.reference is not None
                         and g.reference.lat == h.reference.lat
                         and g.reference.lon == h.reference.lon)))

    def __repr__(self):
        return (f"KVectorStore({self.grid.n_cols}x{self.grid.n_rows} cells, "
                f"{len(self.taxonomy)} categories, "
                f"{len(self.grid.ward_ids)} wards)")


def build_k_vectors(grid: Grid, catchments: Iterable[Catchment],
                    taxonomy: CategoryTaxonomy) -> KVectorStore:
    """Count, per cell and category, the catchments covering the cell.

    Each catchment only visits the cells under its bounding box (the grid
    itself is the spatial index), so cost scales with catchment footprint
    rather than grid size.
    """
    counts = np.zeros((grid.n_cells, len(taxonomy)), np.int64)
    half = 0.5 * grid.cell_size * grid.cell_size
    overlap = np.zeros(grid.n_cells, np.float64)
    for c in catchments:
        if (grid.reference is not None and c.reference is not None
                and (abs(c.reference.lat - grid.reference.lat) > 1e-9
                     or abs(c.reference.lon - grid.reference.lon) > 1e-9)):
            raise FrameMismatch(f"catchment {c.amenity_id!r} reference "
                                f"{c.reference} differs from grid "
                                f"{grid.reference}")
        col = taxonomy.index(c.category)
        touched: list[np.ndarray] = []
        for part in c.parts:
            xs, ys, offsets, signs = part.flat_rings()
            ids, areas = kernels.polygon_cell_areas(
                xs, ys, offsets, signs, grid.origin.x, grid.origin.y,
                grid.cell_size, grid.n_cols, grid.n_rows)
            overlap[ids] += areas
            touched.append(ids)
        if touched:
            ids = np.unique(np.concatenate(touched))
            covered = ids[overlap[ids] >= half]
            counts[covered, col] += 1
            overlap[ids] = 0.0
    return KVectorStore(grid, taxonomy, np.minimum(counts, COUNT_SATURATION))


def _metadata(store: KVectorStore) -> dict:
    g = store.grid
    meta = {
        "format": "walkgrid-kvector",
        "version": STORE_VERSION,
        "origin_x": g.origin.x,
        "origin_y": g.origin.y,
        "cell_size": g.cell_size,
        "n_cols": g.n_cols,
        "n_rows": g.n_rows,
        "reference": ({"lat": g.reference.lat, "lon": g.reference.lon}
                      if g.reference is not None else None),
        "ward_ids": g.ward_ids,
        "taxonomy": store.taxonomy.to_dict(),
        "taxonomy_sha256": store.taxonomy_hash,
    }
    return meta


def save_store(store: KVectorStore, path: str) -> None:
    """Write the versioned binary plus a JSON metadata sidecar."""
    meta = json.dumps(_metadata(store), sort_keys=True,
                      separators=(",", ":")).encode()
    with open(path, "wb") as fh:
        fh.write(STORE_MAGIC)
        fh.write(struct.pack("<HI", STORE_VERSION, len(meta)))
        fh.write(meta)
        fh.write(np.ascontiguousarray(store.counts.T, "<u2").tobytes())
        fh.write(np.ascontiguousarray(store.grid.cell_ward, "<i4").tobytes())
    with open(path + ".meta.json", "w") as fh:
        json.dump(_metadata(store), fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_store(path: str, expected_taxonomy: CategoryTaxonomy | None = None,
               force: bool = False) -> KVectorStore:
    """Read a store written by :func:`save_store`.

    Refuses stores built against a different taxonomy than
    ``expected_taxonomy`` (by sha256) unless ``force`` is set.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != STORE_MAGIC:
        raise ParseError(f"{path}: not a k-vector store (bad magic)")
    version, meta_len = struct.unpack_from("<HI", blob, 4)
    if version != STORE_VERSION:
        raise VersionError(f"{path}: store format version {version}, "
                           f"this build reads version {STORE_VERSION}")
    pos = 10
    try:
        meta = json.loads(blob[pos:pos + meta_len].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"{path}: corrupt metadata block: {exc}") from exc
    pos += meta_len

    taxonomy = load_taxonomy(json.dumps(meta["taxonomy"]))
    if not force:
        if taxonomy.sha256() != meta.get("taxonomy_sha256"):
            raise TaxonomyMismatch(f"{path}: embedded taxonomy does not match "
                                   f"its recorded hash")
        if (expected_taxonomy is not None
                and expected_taxonomy.sha256() != taxonomy.sha256()):
            raise TaxonomyMismatch(f"{path}: store was built with taxonomy "
                                   f"{taxonomy.sha256()[:12]}, expected "
                                   f"{expected_taxonomy.sha256()[:12]}")

    n_cols, n_rows = int(meta["n_cols"]), int(meta["n_rows"])
    n_cells = n_cols * n_rows
    n_cat = len(taxonomy)
    need = pos + 2 * n_cat * n_cells + 4 * n_cells
    if len(blob) < need:
        raise ParseError(f"{path}: truncated store ({len(blob)} bytes, "
                         f"need {need})")
    counts = np.frombuffer(blob, "<u2", n_cat * n_cells, pos)
    counts = np.ascontiguousarray(counts.reshape(n_cat, n_cells).T)
    pos += 2 * n_cat * n_cells
    cell_ward = np.frombuffer(blob, "<i4", n_cells, pos).copy()

    ref = meta.get("reference")
    grid = Grid(PlanarPoint(float(meta["origin_x"]), float(meta["origin_y"])),
                float(meta["cell_size"]), n_cols, n_rows,
                [str(w) for w in meta["ward_ids"]], cell_ward,
                LatLon(ref["lat"], ref["lon"]) if ref else None)
    return KVectorStore(grid, taxonomy, counts)


def brute_force_counts(grid: Grid, catchments: Sequence[Catchment],
                       taxonomy: CategoryTaxonomy) -> np.ndarray:
    """O(cells x catchments) reference counter with no pruning, for
    equivalence checks on small instances."""
    counts = np.zeros((grid.n_cells, len(taxonomy)), np.int64)
    for cid in range(grid.n_cells):
        rect = grid.cell_rect(cid)
        for c in catchments:
            if coverage_test(rect, c):
                counts[cid, taxonomy.index(c.category)] += 1
    return np.minimum(counts, COUNT_SATURATION).astype(np.uint16)
