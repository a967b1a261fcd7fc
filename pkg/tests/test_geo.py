import math

import numpy as np
import pytest
import shapely
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import equirect_forward, mc_intersection_area, shoelace
from walkgrid.errors import (DegenerateWard, EmptyInput, InvalidGeometry,
                             OutOfBounds)
from walkgrid.geo import (EARTH_RADIUS_M, Frame, LatLon, PlanarPoint, Polygon,
                          assign_ward, build_grid, intersection_area,
                          overlap_areas_on_grid, project, unproject)


class TestProjection:
    def test_one_degree_latitude_length(self):
        # closed form: R * pi / 180
        ref = LatLon(0.0, 0.0)
        q = project(LatLon(1.0, 0.0), ref)
        assert q.x == 0.0
        assert q.y == pytest.approx(EARTH_RADIUS_M * math.pi / 180.0, abs=1e-6)
        assert q.y == pytest.approx(111_195.08, abs=0.01)

    def test_longitude_shrinks_with_latitude(self):
        ref = LatLon(13.0, 100.5)
        q = project(LatLon(13.0, 100.51), ref)
        ox, oy = equirect_forward(13.0, 100.51, 13.0, 100.5)
        assert q.x == pytest.approx(ox, abs=1e-9)
        assert q.x == pytest.approx(1083.45, abs=0.01)
        assert q.y == pytest.approx(oy, abs=1e-9)

    def test_frame_matches_free_functions(self):
        ref = LatLon(12.9716, 77.5946)
        frame = Frame(ref)
        p = LatLon(12.99, 77.62)
        assert frame.project(p) == project(p, ref)
        back = frame.unproject(frame.project(p))
        assert back.lat == pytest.approx(p.lat, abs=1e-12)
        assert back.lon == pytest.approx(p.lon, abs=1e-12)

    @given(lat=st.floats(-60, 60), lon=st.floats(-179, 179),
           dlat=st.floats(-0.4, 0.4), dlon=st.floats(-0.4, 0.4))
    @settings(max_examples=200, deadline=None)
    def test_roundtrip_property(self, lat, lon, dlat, dlon):
        ref = LatLon(lat, lon)
        p = LatLon(lat + dlat, lon + dlon)
        back = unproject(project(p, ref), ref)
        assert abs(back.lat - p.lat) < 1e-9
        assert abs(back.lon - p.lon) < 1e-9

    def test_vectorized_coords(self):
        frame = Frame(LatLon(12.9716, 77.5946))
        lonlat = np.array([[77.6, 12.98], [77.58, 12.96]])
        xy = frame.project_coords(lonlat)
        for i in range(2):
            q = frame.project(LatLon(lonlat[i, 1], lonlat[i, 0]))
            assert xy[i, 0] == q.x and xy[i, 1] == q.y
        rt = frame.unproject_coords(xy)
        assert np.allclose(rt, lonlat, atol=1e-12)

    def test_latlon_range_validation(self):
        with pytest.raises(ValueError):
            LatLon(91.0, 0.0)
        with pytest.raises(ValueError):
            LatLon(0.0, -181.0)


class TestPolygon:
    def test_rect_area_perimeter_bounds(self):
        p = Polygon.rect(1.0, 2.0, 4.0, 6.0)
        assert p.area == 12.0
        assert p.perimeter == 14.0
        assert p.bounds == (1.0, 2.0, 4.0, 6.0)

    def test_orientation_normalized(self):
        cw = Polygon([(0, 0), (0, 1), (1, 1), (1, 0)])
        assert shoelace([tuple(v) for v in cw.exterior]) > 0
        assert cw.area == 1.0

    def test_holes_subtract(self):
        p = Polygon([(0, 0), (4, 0), (4, 4), (0, 4)],
                    holes=[[(1, 1), (3, 1), (3, 3), (1, 3)]])
        assert p.area == 12.0
        assert not p.contains(2.0, 2.0)
        assert p.contains(0.5, 2.0)

    def test_regular_polygon_area(self):
        # closed form: n/2 * r^2 * sin(2 pi / n)
        p = Polygon.regular(10.0, -5.0, 100.0, 64)
        expected = 32.0 * 100.0 ** 2 * math.sin(math.pi / 32.0)
        assert p.area == pytest.approx(expected, rel=1e-12)
        assert p.area == pytest.approx(math.pi * 100.0 ** 2, rel=0.005)

    def test_centroid_of_rect(self):
        c = Polygon.rect(0, 0, 10, 4).centroid()
        assert (c.x, c.y) == (5.0, 2.0)

    def test_validate_rejects_bowtie(self):
        bow = Polygon([(0, 0), (2, 2), (2, 0), (0, 2)])
        with pytest.raises(InvalidGeometry):
            bow.validate()

    def test_too_few_vertices(self):
        with pytest.raises(InvalidGeometry):
            Polygon([(0, 0), (1, 1)])

    def test_nonfinite_rejected(self):
        with pytest.raises(InvalidGeometry):
            Polygon([(0, 0), (1, float("nan")), (1, 1)])

    def test_shapely_roundtrip(self):
        p = Polygon([(0, 0), (4, 0), (4, 4), (0, 4)],
                    holes=[[(1, 1), (2, 1), (2, 2), (1, 2)]])
        back = Polygon.from_shapely(p.to_shapely())
        assert back.area == pytest.approx(p.area, abs=1e-12)
        assert len(back.holes) == 1


class TestIntersectionArea:
    def test_offset_unit_squares(self):
        a = Polygon.rect(0, 0, 1, 1)
        b = Polygon.rect(0.5, 0.0, 1.5, 1.0)
        assert intersection_area(a, b) == pytest.approx(0.5, abs=1e-12)

    def test_against_mc_oracle(self):
        a = Polygon([(0, 0), (3, 0), (3, 3), (0, 3)])
        b = Polygon([(1, -1), (4, 1), (2, 4)])
        got = intersection_area(a, b)
        rings_a = [[tuple(v) for v in a.exterior]]
        rings_b = [[tuple(v) for v in b.exterior]]
        mc, se = mc_intersection_area(rings_a, rings_b, (-1, -1, 4, 4),
                                      n=200_000)
        assert abs(got - mc) < max(4 * se, 1e-3 * 25)

    def test_invalid_input_raises(self):
        bow = Polygon([(0, 0), (2, 2), (2, 0), (0, 2)])
        with pytest.raises(InvalidGeometry):
            intersection_area(bow, Polygon.rect(0, 0, 1, 1))


class TestBuildGrid:
    def test_dimensions_cover_span(self):
        g = build_grid([("W", Polygon.rect(0, 0, 2100, 2000))], 250.0)
        assert (g.n_cols, g.n_rows) == (9, 8)
        assert g.n_cells == 72

    def test_exact_multiple_span_has_no_extra_cell(self):
        g = build_grid([("W", Polygon.rect(0, 0, 1000, 500))], 250.0)
        assert (g.n_cols, g.n_rows) == (4, 2)

    def test_row_major_ids_and_rects(self):
        g = build_grid([("W", Polygon.rect(0, 0, 1000, 500))], 250.0)
        assert g.cell_rect(0) == (0.0, 0.0, 250.0, 250.0)
        assert g.cell_rect(5) == (250.0, 250.0, 500.0, 500.0)
        c = g.cell_centroid(4)
        assert (c.x, c.y) == (125.0, 375.0)

    def test_majority_assignment(self):
        # cell column 0-250 overlaps A fully; B starts at 500
        wards = [("A", Polygon.rect(0, 0, 500, 250)),
                 ("B", Polygon.rect(500, 0, 1000, 250))]
        g = build_grid(wards, 250.0)
        assert [g.cell_ward_id(i) for i in range(4)] == ["A", "A", "B", "B"]

    def test_tie_breaks_to_smaller_ward_id(self):
        # both wards cover exactly half of the middle cell
        wards = [("Z", Polygon.rect(125, 0, 250, 250)),
                 ("A", Polygon.rect(0, 0, 125, 250))]
        g = build_grid(wards, 250.0)
        assert g.cell_ward_id(0) == "A"

    def test_unassigned_cells_allowed(self):
        # two disjoint wards leave a gap column with no overlap
        wards = [("A", Polygon.rect(0, 0, 250, 250)),
                 ("B", Polygon.rect(500, 0, 750, 250))]
        g = build_grid(wards, 250.0)
        assert g.cell_ward_id(0) == "A"
        assert g.cell_ward_id(1) is None
        assert g.cell_ward_id(2) == "B"

    def test_empty_input(self):
        with pytest.raises(EmptyInput):
            build_grid([], 250.0)

    def test_degenerate_ward(self):
        line = Polygon([(0, 0), (10, 0), (10, 0.0), (0, 0.0)])
        with pytest.raises(DegenerateWard):
            build_grid([("W", line)], 250.0)

    def test_bad_cell_size(self):
        with pytest.raises(ValueError):
            build_grid([("W", Polygon.rect(0, 0, 100, 100))], 0.0)

    def test_cell_at_and_out_of_bounds(self):
        g = build_grid([("W", Polygon.rect(0, 0, 1000, 500))], 250.0)
        assert g.cell_at(PlanarPoint(600.0, 100.0)) == 2
        assert g.cell_at(PlanarPoint(0.0, 0.0)) == 0
        with pytest.raises(OutOfBounds):
            g.cell_at(PlanarPoint(-0.001, 100.0))
        with pytest.raises(OutOfBounds):
            g.cell_at(PlanarPoint(100.0, 500.001))

    def test_centroids_match_cell_centroid(self):
        g = build_grid([("W", Polygon.rect(0, 0, 1000, 500))], 250.0)
        pts = g.centroids()
        for cid in range(g.n_cells):
            c = g.cell_centroid(cid)
            assert pts[cid, 0] == c.x and pts[cid, 1] == c.y


class TestOverlapAreas:
    def test_matches_shapely_on_random_polygons(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            n = int(rng.integers(3, 9))
            ang = (np.linspace(0, 2 * np.pi, n, endpoint=False)
                   + rng.uniform(0.05, 0.6, n))
            r = rng.uniform(100, 900, n)
            pts = np.column_stack([1000 + r * np.cos(ang),
                                   1000 + r * np.sin(ang)])
            poly = Polygon(pts)
            ids, areas = overlap_areas_on_grid(poly, PlanarPoint(0, 0), 250.0,
                                               8, 8)
            sh = poly.to_shapely()
            for cid, area in zip(ids, areas):
                row, col = divmod(int(cid), 8)
                box = shapely.box(col * 250.0, row * 250.0,
                                  (col + 1) * 250.0, (row + 1) * 250.0)
                assert area == pytest.approx(sh.intersection(box).area,
                                             abs=1e-6)
            assert areas.sum() == pytest.approx(sh.area, rel=1e-9)

    def test_hole_reduces_cell_overlap(self):
        poly = Polygon([(0, 0), (500, 0), (500, 500), (0, 500)],
                       holes=[[(100, 100), (400, 100), (400, 400), (100, 400)]])
        ids, areas = overlap_areas_on_grid(poly, PlanarPoint(0, 0), 250.0, 2, 2)
        assert areas.sum() == pytest.approx(500 * 500 - 300 * 300, abs=1e-9)
        # each quadrant cell loses a 150x150 corner of the hole
        assert np.allclose(areas, 250.0 * 250.0 - 150.0 * 150.0)


class TestAssignWard:
    def test_majority_and_none(self):
        wards = [("A", Polygon.rect(0, 0, 100, 100)),
                 ("B", Polygon.rect(100, 0, 300, 100))]
        assert assign_ward((0, 0, 150, 100), wards) == "A"
        assert assign_ward((50, 0, 250, 100), wards) == "B"
        assert assign_ward((1000, 1000, 1100, 1100), wards) is None

    def test_tie_lexicographic(self):
        wards = [("B", Polygon.rect(50, 0, 100, 100)),
                 ("A", Polygon.rect(0, 0, 50, 100))]
        assert assign_ward((0, 0, 100, 100), wards) == "A"
