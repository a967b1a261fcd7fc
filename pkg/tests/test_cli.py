import json
import signal
import socket
import subprocess
import sys
import time
from importlib import resources

import pytest
import requests
from click.testing import CliRunner

from walkgrid.cli import cli


def run_cli(args, env=None):
    return CliRunner().invoke(cli, args, env=env, catch_exceptions=False,
                              auto_envvar_prefix="WALKGRID")


def all_output(result):
    return result.output + (result.stderr or "")


def config_path(name):
    return str(resources.files("walkgrid.data") / "configs" / f"{name}.json")


def scenario_path(name):
    return str(resources.files("walkgrid.data") / "scenarios" / f"{name}.json")


@pytest.fixture(scope="module")
def cli_store(tmp_path_factory, toy_wards_path, toy_amenities_path):
    out = tmp_path_factory.mktemp("cli") / "toy.wgkv"
    result = run_cli(["precompute", "--wards", toy_wards_path,
                      "--amenities", toy_amenities_path,
                      "--out", str(out), "--jobs", "2"])
    assert result.exit_code == 0, all_output(result)
    return str(out)


class TestPrecompute:
    def test_reports_store_shape(self, cli_store, tmp_path, toy_wards_path,
                                 toy_amenities_path):
        out = tmp_path / "again.wgkv"
        result = run_cli(["precompute", "--wards", toy_wards_path,
                          "--amenities", toy_amenities_path,
                          "--out", str(out), "--jobs", "2"])
        assert result.exit_code == 0
        assert "cells: 162 (18 x 9 at 250 m)" in result.output
        assert "wards: 2" in result.output
        assert "catchments: 5" in result.output
        assert "restaurants:" in result.output and "max k" in result.output

    def test_missing_wards_file_exit_3(self, tmp_path, toy_amenities_path):
        missing = str(tmp_path / "nope.geojson")
        result = run_cli(["precompute", "--wards", missing,
                          "--amenities", toy_amenities_path,
                          "--out", str(tmp_path / "s.wgkv")])
        assert result.exit_code == 3
        assert "nope.geojson" in all_output(result)

    def test_zero_cell_size_exit_2(self, tmp_path, toy_wards_path,
                                   toy_amenities_path):
        result = run_cli(["precompute", "--wards", toy_wards_path,
                          "--amenities", toy_amenities_path,
                          "--out", str(tmp_path / "s.wgkv"),
                          "--cell-size", "0"])
        assert result.exit_code == 2
        assert "cell-size" in all_output(result)

    def test_amenities_xor_catchments(self, tmp_path, toy_wards_path,
                                      toy_amenities_path):
        base = ["precompute", "--wards", toy_wards_path,
                "--out", str(tmp_path / "s.wgkv")]
        neither = run_cli(base)
        both = run_cli(base + ["--amenities", toy_amenities_path,
                               "--catchments-dir", str(tmp_path)])
        for result in (neither, both):
            assert result.exit_code == 2
            assert "exactly one" in all_output(result)

    def test_routing_requires_endpoint(self, tmp_path, toy_wards_path,
                                       toy_amenities_path):
        result = run_cli(["precompute", "--wards", toy_wards_path,
                          "--amenities", toy_amenities_path,
                          "--out", str(tmp_path / "s.wgkv"),
                          "--provider", "routing"])
        assert result.exit_code == 2
        assert "--endpoint" in all_output(result)

    def test_catchment_cache_rebuild_is_byte_identical(
            self, tmp_path, toy_wards_path, toy_amenities_path):
        cache = tmp_path / "catchments"
        first = tmp_path / "first.wgkv"
        result = run_cli(["precompute", "--wards", toy_wards_path,
                          "--amenities", toy_amenities_path,
                          "--out", str(first), "--jobs", "2",
                          "--save-catchments", str(cache)])
        assert result.exit_code == 0
        assert sorted(p.name for p in cache.iterdir()) == [
            "metro_stations.geojson", "parks.geojson", "restaurants.geojson",
            "schools.geojson"]
        second = tmp_path / "second.wgkv"
        result = run_cli(["precompute", "--wards", toy_wards_path,
                          "--catchments-dir", str(cache),
                          "--out", str(second)])
        assert result.exit_code == 0
        assert first.read_bytes() == second.read_bytes()

    def test_empty_catchments_dir_exit_2(self, tmp_path, toy_wards_path):
        empty = tmp_path / "empty"
        empty.mkdir()
        result = run_cli(["precompute", "--wards", toy_wards_path,
                          "--catchments-dir", str(empty),
                          "--out", str(tmp_path / "s.wgkv")])
        assert result.exit_code == 2


class TestScore:
    def test_ward_csv_bounded_and_reproducible(self, cli_store, tmp_path):
        paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
        for p in paths:
            result = run_cli(["score", "--store", cli_store,
                              "--config", config_path("senior"),
                              "--out", str(p)])
            assert result.exit_code == 0, all_output(result)
        body = paths[0].read_text()
        lines = body.strip().splitlines()
        assert lines[0] == "id,score"
        assert [ln.split(",")[0] for ln in lines[1:]] == ["W001", "W002"]
        for ln in lines[1:]:
            assert 0.0 <= float(ln.split(",")[1]) <= 1.0
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_grid_csv_numeric_sort(self, cli_store, tmp_path):
        out = tmp_path / "grid.csv"
        result = run_cli(["score", "--store", cli_store,
                          "--config", config_path("young_professional"),
                          "--granularity", "grid", "--out", str(out)])
        assert result.exit_code == 0
        ids = [ln.split(",")[0]
               for ln in out.read_text().strip().splitlines()[1:]]
        assert ids == [str(i) for i in range(162)]

    def test_geojson_scores_attached(self, cli_store, tmp_path):
        out = tmp_path / "wards.geojson"
        result = run_cli(["score", "--store", cli_store,
                          "--config", config_path("family"),
                          "--format", "geojson", "--out", str(out)])
        assert result.exit_code == 0
        doc = json.loads(out.read_text())
        assert doc["type"] == "FeatureCollection"
        assert {f["id"] for f in doc["features"]} == {"W001", "W002"}
        for f in doc["features"]:
            assert 0.0 <= f["properties"]["score"] <= 1.0

    def test_invalid_tier_exit_2_lists_allowed(self, cli_store, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"entries": [
            {"members": ["parks"], "tier": "vital", "decay": "balanced"}]}))
        result = run_cli(["score", "--store", cli_store,
                          "--config", str(bad),
                          "--out", str(tmp_path / "o.csv")])
        assert result.exit_code == 2
        msg = all_output(result)
        assert "entries[0].tier" in msg
        assert "standard" in msg and "preferred" in msg and "required" in msg

    def test_unknown_category_exit_2(self, cli_store, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"entries": [
            {"members": ["unicorns"], "tier": "standard",
             "decay": "balanced"}]}))
        result = run_cli(["score", "--store", cli_store,
                          "--config", str(bad),
                          "--out", str(tmp_path / "o.csv")])
        assert result.exit_code == 2

    def test_missing_store_exit_3(self, tmp_path):
        result = run_cli(["score", "--store", str(tmp_path / "no.wgkv"),
                          "--config", config_path("senior"),
                          "--out", str(tmp_path / "o.csv")])
        assert result.exit_code == 3

    def test_env_var_sets_granularity(self, cli_store, tmp_path):
        out = tmp_path / "env.csv"
        result = run_cli(["score", "--store", cli_store,
                          "--config", config_path("senior"),
                          "--out", str(out)],
                         env={"WALKGRID_SCORE_GRANULARITY": "grid"})
        assert result.exit_code == 0
        assert "(grid, 162 ids)" in result.output
        assert len(out.read_text().strip().splitlines()) == 163


class TestConverge:
    def test_multi_resolution_csv(self, tmp_path):
        out = tmp_path / "rows.csv"
        result = run_cli(["converge",
                          "--scenario", scenario_path("half_coverage_rect"),
                          "--resolutions", "500,250,125,62.5",
                          "--out", str(out)])
        assert result.exit_code == 0, all_output(result)
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "cell_size,grid_score,oracle_score,abs_error"
        assert len(lines) == 5
        assert lines[1].startswith("500,")
        assert lines[4] == "62.5,0.250000,0.250000,0.000000"

    def test_single_resolution_one_row(self, tmp_path):
        out = tmp_path / "one.csv"
        result = run_cli(["converge",
                          "--scenario", scenario_path("half_coverage_rect"),
                          "--resolutions", "250", "--out", str(out)])
        assert result.exit_code == 0
        assert len(out.read_text().strip().splitlines()) == 2

    def test_empty_resolutions_exit_2(self, tmp_path):
        result = run_cli(["converge",
                          "--scenario", scenario_path("half_coverage_rect"),
                          "--resolutions", ",", "--out",
                          str(tmp_path / "o.csv")])
        assert result.exit_code == 2

    def test_non_numeric_resolutions_exit_2(self, tmp_path):
        result = run_cli(["converge",
                          "--scenario", scenario_path("half_coverage_rect"),
                          "--resolutions", "250,fine", "--out",
                          str(tmp_path / "o.csv")])
        assert result.exit_code == 2

    def test_increasing_resolutions_exit_2(self, tmp_path):
        result = run_cli(["converge",
                          "--scenario", scenario_path("half_coverage_rect"),
                          "--resolutions", "125,250", "--out",
                          str(tmp_path / "o.csv")])
        assert result.exit_code == 2
        assert "decreasing" in all_output(result)

    def test_centroid_mode(self, tmp_path):
        out = tmp_path / "c.csv"
        result = run_cli(["converge",
                          "--scenario", scenario_path("half_coverage_rect"),
                          "--resolutions", "125", "--coverage", "centroid",
                          "--out", str(out)])
        assert result.exit_code == 0


class TestHelp:
    @pytest.mark.parametrize("args", [[], ["precompute"], ["score"],
                                      ["serve"], ["converge"]])
    def test_help_exits_zero(self, args):
        result = run_cli(args + ["--help"])
        assert result.exit_code == 0
        assert "Usage" in result.output


class TestServe:
    def test_serves_and_stops_on_sigint(self, cli_store):
        with socket.socket() as s:
            s.bind(("127.0.0.1", 0))
            port = s.getsockname()[1]
        proc = subprocess.Popen(
            [sys.executable, "-m", "walkgrid.cli", "serve",
             "--store", cli_store, "--port", str(port)],
            stdout=subprocess.PIPE, stderr=subprocess.STDOUT)
        try:
            base = f"http://127.0.0.1:{port}"
            deadline = time.monotonic() + 30
            doc = None
            while time.monotonic() < deadline:
                try:
                    doc = requests.get(f"{base}/taxonomy", timeout=1).json()
                    break
                except requests.RequestException:
                    if proc.poll() is not None:
                        out = proc.stdout.read().decode()
                        pytest.fail(f"serve exited early: {out}")
                    time.sleep(0.2)
            assert doc is not None, "server never came up"
            assert len(doc["categories"]) == 45
            resp = requests.post(f"{base}/score", json={
                "config": {"entries": [{"members": ["restaurants"],
                                        "tier": "standard",
                                        "decay": "balanced"}]},
                "granularity": "ward"}, timeout=5)
            assert resp.status_code == 200
            assert set(resp.json()["scores"]) == {"W001", "W002"}
        finally:
            proc.send_signal(signal.SIGINT)
            code = proc.wait(timeout=15)
        assert code == 0
