import json
import logging

import pytest
from fastapi.testclient import TestClient

from walkgrid.scoring import (config_fingerprint, grid_surface, parse_config,
                              ward_scores)
from walkgrid.service import create_app

CONFIG = {"entries": [
    {"members": ["restaurants"], "tier": "standard", "decay": "balanced"},
    {"members": ["metro_stations"], "tier": "preferred", "decay": "focused"},
    {"members": ["parks", "schools"], "tier": "standard",
     "decay": "expansive"}]}


@pytest.fixture(scope="module")
def client(toy_store):
    with TestClient(create_app(toy_store)) as c:
        yield c


def post_score(client, **overrides):
    body = {"config": CONFIG, "granularity": "ward"}
    body.update(overrides)
    return client.post("/score", json=body)


class TestStoreLifecycle:
    def test_503_before_store_loaded(self):
        with TestClient(create_app(None)) as c:
            assert c.get("/taxonomy").status_code == 503
            assert post_score(c).status_code == 503
            assert c.get("/geometry").status_code == 503


class TestTaxonomyEndpoint:
    def test_hash_and_categories(self, client, toy_store):
        doc = client.get("/taxonomy").json()
        assert doc["taxonomy_hash"] == toy_store.taxonomy_hash
        ids = [c["id"] for c in doc["categories"]]
        assert ids == list(toy_store.taxonomy.ids)
        assert len(ids) == 45


class TestScoreEndpoint:
    def test_ward_scores_match_library(self, client, toy_store):
        resp = post_score(client)
        assert resp.status_code == 200
        doc = resp.json()
        cfg = parse_config(CONFIG)
        want = ward_scores(toy_store, cfg)
        assert doc["granularity"] == "ward"
        assert doc["fingerprint"] == config_fingerprint(cfg)
        assert set(doc["scores"]) == {"W001", "W002"}
        for wid, val in doc["scores"].items():
            assert val == pytest.approx(want.values[wid], abs=5e-7)
            assert 0.0 <= val <= 1.0
        assert doc["compute_ms"] >= 0.0

    def test_grid_scores_match_library(self, client, toy_store):
        resp = post_score(client, granularity="grid")
        doc = resp.json()
        want = grid_surface(toy_store, parse_config(CONFIG))
        assert len(doc["scores"]) == toy_store.grid.n_cells
        for cid, val in doc["scores"].items():
            assert cid == str(int(cid))
            assert val == pytest.approx(want.values[int(cid)], abs=5e-7)

    def test_deterministic_and_memoized(self, client):
        a = post_score(client).json()
        b = post_score(client).json()
        assert a["scores"] == b["scores"]
        assert a["fingerprint"] == b["fingerprint"]

    def test_rounded_to_six_decimals(self, client):
        doc = post_score(client, granularity="grid").json()
        for val in doc["scores"].values():
            assert round(val, 6) == val

    def test_bad_granularity_400(self, client):
        assert post_score(client, granularity="block").status_code == 400

    def test_unknown_category_400_names_field(self, client):
        bad = {"entries": [{"members": ["unicorns"], "tier": "standard",
                            "decay": "balanced"}]}
        resp = post_score(client, config=bad)
        assert resp.status_code == 400
        assert "entries[0].members" in resp.json()["detail"]

    def test_bad_tier_400(self, client):
        bad = {"entries": [{"members": ["parks"], "tier": "vital",
                            "decay": "balanced"}]}
        resp = post_score(client, config=bad)
        assert resp.status_code == 400
        assert "entries[0].tier" in resp.json()["detail"]

    def test_taxonomy_hash_mismatch_422(self, client):
        resp = post_score(client, taxonomy_hash="0" * 64)
        assert resp.status_code == 422
        assert "mismatch" in resp.json()["detail"]

    def test_matching_taxonomy_hash_accepted(self, client, toy_store):
        resp = post_score(client, taxonomy_hash=toy_store.taxonomy_hash)
        assert resp.status_code == 200


class TestBbox:
    FULL = [77.58, 12.96, 77.62, 12.98]
    LEFT = [77.58, 12.96, 77.60, 12.98]

    def test_full_bbox_is_identity(self, client):
        full = post_score(client, granularity="grid").json()["scores"]
        boxed = post_score(client, granularity="grid",
                           bbox=self.FULL).json()["scores"]
        assert boxed == full

    def test_left_half_is_proper_subset(self, client):
        full = post_score(client, granularity="grid").json()["scores"]
        left = post_score(client, granularity="grid",
                          bbox=self.LEFT).json()["scores"]
        assert 0 < len(left) < len(full)
        assert all(left[k] == full[k] for k in left)

    def test_ward_bbox_restricts_mean(self, client):
        left = post_score(client, bbox=self.LEFT).json()["scores"]
        assert "W001" in left

    def test_disjoint_bbox_400(self, client):
        resp = post_score(client, bbox=[10.0, 10.0, 11.0, 11.0])
        assert resp.status_code == 400
        assert "does not intersect" in resp.json()["detail"]

    def test_malformed_bbox_400(self, client):
        assert post_score(client, bbox=[77.58, 12.96,
                                        77.60]).status_code == 400
        resp = post_score(client, bbox=[77.60, 12.96, 77.58, 12.98])
        assert resp.status_code == 400


class TestPointEndpoint:
    def test_matches_grid_surface(self, client, toy_store):
        grid = post_score(client, granularity="grid").json()["scores"]
        resp = client.get("/point", params={
            "lat": 12.9651, "lon": 77.5849, "config": json.dumps(CONFIG)})
        assert resp.status_code == 200
        doc = resp.json()
        assert doc["score"] == pytest.approx(grid[doc["cell_id"]], abs=5e-7)
        assert doc["ward_id"] == "W001"
        assert doc["fingerprint"] == config_fingerprint(parse_config(CONFIG))

    def test_entry_breakdown_ks(self, client, toy_store):
        resp = client.get("/point", params={
            "lat": 12.9651, "lon": 77.5849, "config": json.dumps(CONFIG)})
        doc = resp.json()
        kv = toy_store.k_vector(int(doc["cell_id"]))
        assert len(doc["entries"]) == 3
        for got, want in zip(doc["entries"], CONFIG["entries"]):
            assert got["members"] == want["members"]
            assert got["tier"] == want["tier"]
            assert got["decay"] == want["decay"]
            assert got["k"] == sum(kv[m] for m in want["members"]) >= 0

    def test_cached_fingerprint_lookup(self, client):
        fp = post_score(client).json()["fingerprint"]
        resp = client.get("/point", params={
            "lat": 12.9651, "lon": 77.5849, "fingerprint": fp})
        assert resp.status_code == 200
        assert resp.json()["fingerprint"] == fp

    def test_unknown_fingerprint_400(self, client):
        resp = client.get("/point", params={
            "lat": 12.9651, "lon": 77.5849, "fingerprint": "f" * 64})
        assert resp.status_code == 400
        assert "not cached" in resp.json()["detail"]

    def test_missing_config_400(self, client):
        resp = client.get("/point", params={"lat": 12.9651, "lon": 77.5849})
        assert resp.status_code == 400

    def test_out_of_bounds_404(self, client):
        resp = client.get("/point", params={
            "lat": 0.0, "lon": 0.0, "config": json.dumps(CONFIG)})
        assert resp.status_code == 404

    def test_invalid_config_json_400(self, client):
        resp = client.get("/point", params={
            "lat": 12.9651, "lon": 77.5849, "config": "{nope"})
        assert resp.status_code == 400


class TestGeometryEndpoint:
    def test_grid_features_join_scores(self, client, toy_store):
        geo = client.get("/geometry", params={"granularity": "grid"}).json()
        scores = post_score(client, granularity="grid").json()["scores"]
        assert geo["type"] == "FeatureCollection"
        assert len(geo["features"]) == toy_store.grid.n_cells
        ids = {f["id"] for f in geo["features"]}
        assert ids == set(scores)
        f0 = geo["features"][0]
        assert f0["geometry"]["type"] == "Polygon"
        assert len(f0["geometry"]["coordinates"][0]) == 5

    def test_ward_features_join_scores(self, client):
        geo = client.get("/geometry", params={"granularity": "ward"}).json()
        scores = post_score(client).json()["scores"]
        ids = {f["id"] for f in geo["features"]}
        assert ids == set(scores)
        for f in geo["features"]:
            assert f["properties"]["cells"] > 0
            assert f["geometry"]["type"] in ("Polygon", "MultiPolygon")

    def test_default_granularity_is_ward(self, client):
        geo = client.get("/geometry").json()
        assert {f["id"] for f in geo["features"]} == {"W001", "W002"}

    def test_bad_granularity_400(self, client):
        assert client.get("/geometry", params={
            "granularity": "cells"}).status_code == 400

    def test_cached_identical(self, client):
        a = client.get("/geometry").json()
        b = client.get("/geometry").json()
        assert a == b


class TestCrossCutting:
    def test_cors_header_present(self, client):
        resp = client.get("/taxonomy", headers={"Origin": "http://ui.test"})
        assert resp.headers.get("access-control-allow-origin") == "*"

    def test_custom_cors_origins(self, toy_store):
        app = create_app(toy_store, cors_origins=("http://ui.test",))
        with TestClient(app) as c:
            resp = c.get("/taxonomy", headers={"Origin": "http://ui.test"})
            assert resp.headers.get(
                "access-control-allow-origin") == "http://ui.test"

    def test_request_log_line(self, client, caplog):
        with caplog.at_level(logging.INFO, logger="walkgrid.service"):
            post_score(client)
        lines = [r.getMessage() for r in caplog.records
                 if r.name == "walkgrid.service"]
        assert any("route=/score" in ln and "fingerprint=" in ln
                   and "ms=" in ln for ln in lines)
        fp = config_fingerprint(parse_config(CONFIG))
        assert any(fp in ln for ln in lines)
