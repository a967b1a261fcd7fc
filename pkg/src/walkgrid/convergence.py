"""Convergence harness: runs the production grid pipeline against the
continuous oracle on synthetic scenarios and measures the error as the
cell size shrinks.

Scenario JSON schema::

    {
      "name": "...",
      "ward": {"type": "rect", "bounds": [x0, y0, x1, y1]}
              | {"type": "polygon", "coordinates": [[x, y], ...]},
      "catchments": [
        {"category": "...",
         "shape": {"type": "rect", "bounds": [...]}
                 | {"type": "circle", "center": [cx, cy], "radius": r,
                    "vertices": 256}
                 | {"type": "polygon", "coordinates": [...]}}
      ],
      "config": {"entries": [...]}
    }

Coordinates are planar meters. Circles are fixed 256-gons so the grid
pipeline and the oracle intersect identical geometry. The centroid
coverage mode (count a catchment when it contains the cell centroid)
exists only here, as the literal Riemann-sum discretization to compare
against the production 50 % area rule.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import shapely

from . import kernels
from .errors import BoundaryPointWarning, ParseError
from .geo import Grid, PlanarPoint, Polygon, build_grid
from .ingest import CategoryTaxonomy, default_taxonomy
from .isochrone import Catchment
from .precompute import KVectorStore, build_k_vectors
from .scoring import (ResolvedConfig, UserConfig, continuous_ward_score,
                      parse_config, ward_scores)

SCENARIO_WARD_ID = "scenario"


@dataclass(frozen=True)
class SyntheticScenario:
    name: str
    ward: Polygon
    catchments: tuple[Catchment, ...]
    config: UserConfig


@dataclass(frozen=True)
class RefinementRow:
    cell_size: float
    grid_score: float
    oracle_score: float
    error: float


@dataclass(frozen=True)
class BoundCheck:
    cell_size: float
    error: float
    bound: float
    ok: bool

    @property
    def ratio(self) -> float:
        return self.error / self.bound if self.bound > 0 else (
            0.0 if self.error == 0 else math.inf)


def _parse_shape(raw: dict, where: str) -> Polygon:
    stype = raw.get("type")
    if stype == "rect":
        b = raw.get("bounds")
        if not (isinstance(b, list) and len(b) == 4):
            raise ParseError(f"{where}: rect needs bounds [x0, y0, x1, y1]")
        if not (b[0] < b[2] and b[1] < b[3]):
            raise ParseError(f"{where}: rect bounds must be ordered min < max")
        return Polygon.rect(*[float(v) for v in b])
    if stype == "circle":
        c = raw.get("center")
        r = raw.get("radius")
        if not (isinstance(c, list) and len(c) == 2) or r is None or float(r) <= 0:
            raise ParseError(f"{where}: circle needs center [x, y] and a "
                             f"positive radius")
        return Polygon.regular(float(c[0]), float(c[1]), float(r),
                               int(raw.get("vertices", 256)))
    if stype == "polygon":
        coords = raw.get("coordinates")
        if not isinstance(coords, list):
            raise ParseError(f"{where}: polygon needs a coordinates ring")
        return Polygon(np.asarray(coords, np.float64))
    raise ParseError(f"{where}: unknown shape type {stype!r}")


def load_scenario(source) -> SyntheticScenario:
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    if isinstance(source, str):
        if source.lstrip().startswith("{"):
            doc = json.loads(source)
        else:
            with open(source) as fh:
                doc = json.load(fh)
    else:
        doc = source
    name = str(doc.get("name", "scenario"))
    ward = _parse_shape(doc.get("ward") or {}, "ward").validate()
    raw_catchments = doc.get("catchments")
    if not isinstance(raw_catchments, list):
        raise ParseError("scenario needs a catchments array")
    catchments = []
    for i, raw in enumerate(raw_catchments):
        where = f"catchments[{i}]"
        cat = raw.get("category")
        if not cat:
            raise ParseError(f"{where}: missing category")
        shape = _parse_shape(raw.get("shape") or {}, where)
        catchments.append(Catchment(raw.get("id", f"c{i}"), str(cat), (shape,)))
    config = parse_config(doc.get("config") or {})
    return SyntheticScenario(name, ward, tuple(catchments), config)


def _centroid_counts(grid: Grid, catchments: Sequence[Catchment],
                     taxonomy: CategoryTaxonomy) -> np.ndarray:
    """Harness-only coverage rule: a catchment counts for a cell when it
    contains the cell centroid."""
    pts = grid.centroids()
    counts = np.zeros((grid.n_cells, len(taxonomy)), np.int64)
    for c in catchments:
        inside = np.zeros(grid.n_cells, np.bool_)
        for part in c.parts:
            xs, ys, offsets, _ = part.flat_rings()
            inside |= kernels.points_in_rings(pts[:, 0], pts[:, 1], xs, ys,
                                              offsets)
        counts[inside, taxonomy.index(c.category)] += 1
    return np.minimum(counts, 65535).astype(np.uint16)


def _scenario_store(scenario: SyntheticScenario, cell_size: float,
                    taxonomy: CategoryTaxonomy, coverage: str) -> KVectorStore:
    grid = build_grid([(SCENARIO_WARD_ID, scenario.ward)], cell_size)
    if coverage == "area":
        return build_k_vectors(grid, scenario.catchments, taxonomy)
    if coverage == "centroid":
        return KVectorStore(grid, taxonomy,
                            _centroid_counts(grid, scenario.catchments, taxonomy))
    raise ValueError(f"unknown coverage mode {coverage!r}")


def run_refinement(scenario: SyntheticScenario, cell_sizes: Sequence[float],
                   coverage: str = "area",
                   taxonomy: CategoryTaxonomy | None = None) -> list[RefinementRow]:
    """Grid ward score vs continuous oracle at each cell size."""
    sizes = [float(s) for s in cell_sizes]
    if not sizes:
        raise ValueError("cell_sizes must be non-empty")
    if any(b >= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError("cell_sizes must be strictly decreasing")
    taxonomy = taxonomy or default_taxonomy()
    oracle = continuous_ward_score(scenario.ward, scenario.catchments,
                                   scenario.config).value
    rows = []
    for size in sizes:
        store = _scenario_store(scenario, size, taxonomy, coverage)
        surface = ward_scores(store, scenario.config)
        grid_score = surface.values[SCENARIO_WARD_ID]
        rows.append(RefinementRow(size, grid_score, oracle,
                                  abs(grid_score - oracle)))
    return rows


def run_point_refinement(scenario: SyntheticScenario, location: PlanarPoint,
                         cell_sizes: Sequence[float],
                         taxonomy: CategoryTaxonomy | None = None
                         ) -> list[tuple[float, float]]:
    """Score of the cell containing ``location`` at each cell size.

    Warns with BoundaryPointWarning when the point sits within one cell
    size of a catchment edge: there the containing cell straddles a
    coverage discontinuity and stabilization is not guaranteed.
    """
    sizes = [float(s) for s in cell_sizes]
    if not sizes:
        raise ValueError("cell_sizes must be non-empty")
    taxonomy = taxonomy or default_taxonomy()
    pt = shapely.Point(location.x, location.y)
    edge_dist = min((part.to_shapely().boundary.distance(pt)
                     for c in scenario.catchments for part in c.parts),
                    default=math.inf)
    if edge_dist < max(sizes):
        warnings.warn(f"point ({location.x}, {location.y}) is {edge_dist:.1f} m "
                      f"from a catchment edge, within one cell size; point "
                      f"scores may not stabilize", BoundaryPointWarning,
                      stacklevel=2)
    resolved = ResolvedConfig(scenario.config, taxonomy)
    out = []
    for size in sizes:
        store = _scenario_store(scenario, size, taxonomy, "area")
        cell_id = store.grid.cell_at(location)
        score = resolved.score_matrix(store.counts[cell_id:cell_id + 1])
        out.append((size, float(score[0])))
    return out


def interior_boundary_length(scenario: SyntheticScenario) -> float:
    """Total catchment-boundary length strictly interior to the ward.

    Boundary segments lying on the ward's own boundary do not separate
    assigned cells of different coverage, so they are excluded.
    """
    ward = scenario.ward.to_shapely()
    ward_edge = ward.boundary
    total = 0.0
    for c in scenario.catchments:
        for part in c.parts:
            edge = part.to_shapely().boundary
            total += edge.intersection(ward).length
            total -= edge.intersection(ward_edge).length
    return total


def error_bound_check(scenario: SyntheticScenario, cell_size: float,
                      coverage: str = "area",
                      taxonomy: CategoryTaxonomy | None = None) -> BoundCheck:
    """Check |S_grid - S_oracle| <= 2 * L * cell_size / Area_ward where L is
    the interior catchment-boundary length. The integrand is bounded by 1
    and disagreement between grid and continuum is confined to the band of
    cells crossing a catchment boundary, whose total area is at most
    2 * L * cell_size."""
    row = run_refinement(scenario, [cell_size], coverage, taxonomy)[0]
    L = interior_boundary_length(scenario)
    bound = 2.0 * L * cell_size / scenario.ward.area
    return BoundCheck(cell_size, row.error, bound, row.error <= bound)
