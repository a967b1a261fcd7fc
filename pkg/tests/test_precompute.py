import json
import random

import numpy as np
import pytest

from walkgrid.errors import (FrameMismatch, ParseError, TaxonomyMismatch,
                             VersionError)
from walkgrid.geo import LatLon, Polygon, build_grid
from walkgrid.ingest import CategoryTaxonomy
from walkgrid.isochrone import Catchment
from walkgrid.precompute import (COUNT_SATURATION, KVectorStore,
                                 brute_force_counts, build_k_vectors,
                                 coverage_test, load_store, save_store)

TAX = CategoryTaxonomy([("banks", "Banks"), ("parks", "Parks"),
                        ("restaurants", "Restaurants")])


def rect_catchment(aid, cat, x0, y0, x1, y1, reference=None):
    return Catchment(aid, cat, (Polygon.rect(x0, y0, x1, y1),), reference)


def one_ward_grid(width=1000.0, height=1000.0, cell=250.0):
    return build_grid([("W", Polygon.rect(0, 0, width, height))], cell)


class TestCoverageTest:
    CELL = (0.0, 0.0, 250.0, 250.0)

    def test_full_containment_covered(self):
        c = rect_catchment("a", "parks", -100, -100, 400, 400)
        assert coverage_test(self.CELL, c)

    def test_forty_percent_not_covered(self):
        c = rect_catchment("a", "parks", 0, 0, 100, 250)
        assert not coverage_test(self.CELL, c)

    def test_exact_half_is_covered(self):
        c = rect_catchment("a", "parks", 0, 0, 125, 250)
        assert coverage_test(self.CELL, c)

    def test_disjoint_not_covered(self):
        c = rect_catchment("a", "parks", 1000, 1000, 2000, 2000)
        assert not coverage_test(self.CELL, c)

    def test_hole_subtracts(self):
        # annulus: 350 square minus centered 290 hole leaves a thin frame;
        # the cell overlap is well under half
        outer = Polygon.rect(-50, -50, 300, 300)
        donut = Polygon(outer.exterior,
                        [Polygon.rect(-20, -20, 270, 270).exterior])
        assert not coverage_test(self.CELL, Catchment("a", "parks", (donut,)))

    def test_multi_part_sums(self):
        # two parts each 25% of the cell: together exactly half
        parts = (Polygon.rect(0, 0, 125, 125), Polygon.rect(125, 125, 250, 250))
        assert coverage_test(self.CELL, Catchment("a", "parks", parts))


class TestBuildKVectors:
    def test_no_coverage_all_zero(self):
        grid = one_ward_grid()
        c = rect_catchment("a", "parks", 5000, 5000, 6000, 6000)
        store = build_k_vectors(grid, [c], TAX)
        assert store.counts.sum() == 0

    def test_full_grid_coverage(self):
        grid = one_ward_grid()
        c = rect_catchment("a", "parks", -10, -10, 1010, 1010)
        store = build_k_vectors(grid, [c], TAX)
        col = TAX.index("parks")
        assert (store.counts[:, col] == 1).all()
        assert store.counts.sum() == grid.n_cells

    def test_three_identical_catchments_count_three(self):
        grid = one_ward_grid()
        cs = [rect_catchment(f"a{i}", "parks", 0, 0, 500, 500)
              for i in range(3)]
        store = build_k_vectors(grid, cs, TAX)
        assert store.k_vector(0) == {"banks": 0, "parks": 3, "restaurants": 0}
        # cells outside the catchment stay zero
        assert store.k_vector(grid.n_cells - 1)["parks"] == 0

    def test_half_cell_boundary_included(self):
        grid = one_ward_grid()
        c = rect_catchment("a", "banks", 0, 0, 125, 250)
        store = build_k_vectors(grid, [c], TAX)
        assert store.k_vector(0)["banks"] == 1
        assert store.counts.sum() == 1

    def test_permutation_invariance(self):
        grid = one_ward_grid(2000, 1500)
        rng = random.Random(7)
        cs = [rect_catchment(f"a{i}", TAX.ids[i % 3],
                             rng.uniform(0, 1500), rng.uniform(0, 1000),
                             rng.uniform(1500, 2000), rng.uniform(1000, 1500))
              for i in range(12)]
        a = build_k_vectors(grid, cs, TAX)
        shuffled = cs[:]
        rng.shuffle(shuffled)
        b = build_k_vectors(grid, shuffled, TAX)
        assert a == b

    def test_adding_catchment_never_decreases(self):
        grid = one_ward_grid()
        base = [rect_catchment("a", "parks", 0, 0, 600, 600)]
        extra = base + [rect_catchment("b", "parks", 300, 300, 900, 900)]
        s0 = build_k_vectors(grid, base, TAX)
        s1 = build_k_vectors(grid, extra, TAX)
        assert (s1.counts.astype(int) >= s0.counts.astype(int)).all()
        assert s1.counts.sum() > s0.counts.sum()

    def test_categories_accumulate_independently(self):
        grid = one_ward_grid()
        cs = [rect_catchment("a", "parks", 0, 0, 1000, 1000),
              rect_catchment("b", "banks", 0, 0, 500, 1000)]
        store = build_k_vectors(grid, cs, TAX)
        assert store.k_vector(0) == {"banks": 1, "parks": 1, "restaurants": 0}
        assert store.k_vector(3) == {"banks": 0, "parks": 1, "restaurants": 0}

    def test_frame_mismatch_rejected(self):
        grid = build_grid([("W", Polygon.rect(0, 0, 1000, 1000))], 250,
                          reference=LatLon(12.97, 77.6))
        c = rect_catchment("a", "parks", 0, 0, 500, 500,
                           reference=LatLon(13.5, 77.6))
        with pytest.raises(FrameMismatch, match="'a'"):
            build_k_vectors(grid, [c], TAX)

    def test_matching_reference_accepted(self):
        ref = LatLon(12.97, 77.6)
        grid = build_grid([("W", Polygon.rect(0, 0, 1000, 1000))], 250,
                          reference=ref)
        c = rect_catchment("a", "parks", 0, 0, 500, 500, reference=ref)
        assert build_k_vectors(grid, [c], TAX).counts.sum() > 0

    def test_matches_brute_force(self):
        grid = one_ward_grid(1750, 1250)
        rng = random.Random(11)
        cs = []
        for i in range(30):
            x0 = rng.uniform(-200, 1600)
            y0 = rng.uniform(-200, 1100)
            cs.append(rect_catchment(f"a{i}", TAX.ids[i % 3], x0, y0,
                                     x0 + rng.uniform(50, 900),
                                     y0 + rng.uniform(50, 900)))
        # non-rectilinear parts too
        cs.append(Catchment("c1", "parks", (Polygon.regular(800, 600, 420),)))
        store = build_k_vectors(grid, cs, TAX)
        assert np.array_equal(store.counts, brute_force_counts(grid, cs, TAX))

    def test_store_write_protected(self):
        store = build_k_vectors(one_ward_grid(), [], TAX)
        with pytest.raises(ValueError):
            store.counts[0, 0] = 5

    def test_counts_shape_validated(self):
        grid = one_ward_grid()
        with pytest.raises(ValueError):
            KVectorStore(grid, TAX, np.zeros((3, 3), np.uint16))

    def test_saturation_clamp(self):
        grid = one_ward_grid(250, 250, 250)
        counts = np.full((grid.n_cells, len(TAX)), COUNT_SATURATION + 0,
                         np.uint16)
        store = KVectorStore(grid, TAX, counts)
        assert store.k_vector(0)["parks"] == COUNT_SATURATION


@pytest.fixture()
def built_store():
    grid = build_grid([("W1", Polygon.rect(0, 0, 1000, 1000)),
                       ("W2", Polygon.rect(1000, 0, 2000, 1000))], 250,
                      reference=LatLon(12.97, 77.6))
    cs = [rect_catchment("a", "parks", 0, 0, 900, 900),
          rect_catchment("b", "banks", 600, 0, 1700, 1000),
          rect_catchment("c", "parks", 200, 200, 1500, 800)]
    return build_k_vectors(grid, cs, TAX)


class TestStoreRoundtrip:
    def test_roundtrip_equality(self, built_store, tmp_path):
        path = str(tmp_path / "kv.bin")
        save_store(built_store, path)
        assert load_store(path) == built_store

    def test_sidecar_metadata(self, built_store, tmp_path):
        path = str(tmp_path / "kv.bin")
        save_store(built_store, path)
        with open(path + ".meta.json") as fh:
            meta = json.load(fh)
        assert meta["format"] == "walkgrid-kvector"
        assert meta["version"] == 1
        assert meta["n_cols"] == built_store.grid.n_cols
        assert meta["taxonomy_sha256"] == built_store.taxonomy_hash
        assert meta["ward_ids"] == ["W1", "W2"]

    def test_expected_taxonomy_accepted(self, built_store, tmp_path):
        path = str(tmp_path / "kv.bin")
        save_store(built_store, path)
        assert load_store(path, expected_taxonomy=TAX) == built_store

    def test_taxonomy_mismatch_rejected_then_forced(self, built_store,
                                                    tmp_path):
        path = str(tmp_path / "kv.bin")
        save_store(built_store, path)
        other = CategoryTaxonomy([("zoos", "Zoos")])
        with pytest.raises(TaxonomyMismatch):
            load_store(path, expected_taxonomy=other)
        forced = load_store(path, expected_taxonomy=other, force=True)
        assert forced == built_store

    def test_version_bump_rejected(self, built_store, tmp_path):
        path = str(tmp_path / "kv.bin")
        save_store(built_store, path)
        blob = bytearray(open(path, "rb").read())
        blob[4] = 99
        open(path, "wb").write(bytes(blob))
        with pytest.raises(VersionError, match="99"):
            load_store(path)

    def test_bad_magic_rejected(self, built_store, tmp_path):
        path = str(tmp_path / "kv.bin")
        save_store(built_store, path)
        blob = bytearray(open(path, "rb").read())
        blob[:4] = b"NOPE"
        open(path, "wb").write(bytes(blob))
        with pytest.raises(ParseError, match="magic"):
            load_store(path)

    def test_truncation_rejected(self, built_store, tmp_path):
        path = str(tmp_path / "kv.bin")
        save_store(built_store, path)
        blob = open(path, "rb").read()
        open(path, "wb").write(blob[:-8])
        with pytest.raises(ParseError, match="truncated"):
            load_store(path)

    def test_corrupt_metadata_rejected(self, built_store, tmp_path):
        path = str(tmp_path / "kv.bin")
        save_store(built_store, path)
        blob = bytearray(open(path, "rb").read())
        blob[12] = 0xFF
        open(path, "wb").write(bytes(blob))
        with pytest.raises((ParseError, TaxonomyMismatch)):
            load_store(path)

    def test_tampered_taxonomy_fails_integrity(self, built_store, tmp_path):
        path = str(tmp_path / "kv.bin")
        save_store(built_store, path)
        blob = open(path, "rb").read()
        patched = blob.replace(b'"banks"', b'"bonks"', 1)
        assert patched != blob
        open(path, "wb").write(patched)
        with pytest.raises((TaxonomyMismatch, ParseError)):
            load_store(path)

    def test_toy_store_roundtrip(self, toy_store, tmp_path):
        path = str(tmp_path / "toy.bin")
        save_store(toy_store, path)
        loaded = load_store(path, expected_taxonomy=toy_store.taxonomy)
        assert loaded == toy_store
        assert loaded.grid.reference is not None
