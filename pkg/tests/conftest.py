import json
import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from walkgrid.geo import build_grid
from walkgrid.ingest import default_taxonomy, load_amenities, load_wards
from walkgrid.isochrone import CatchmentSpec, buffer_provider, compute_catchments
from walkgrid.precompute import build_k_vectors

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")


@pytest.fixture(scope="session")
def taxonomy():
    return default_taxonomy()


@pytest.fixture(scope="session")
def toy_wards_path():
    return os.path.join(DATA_DIR, "toy_wards.geojson")


@pytest.fixture(scope="session")
def toy_amenities_path():
    return os.path.join(DATA_DIR, "toy_amenities.geojson")


@pytest.fixture(scope="session")
def toy_store(taxonomy, toy_wards_path, toy_amenities_path):
    """2 wards, 5 amenities, buffer provider, 250 m cells."""
    with open(toy_wards_path, "rb") as fh:
        wards = load_wards(fh.read())
    with open(toy_amenities_path, "rb") as fh:
        amenities = load_amenities(fh.read(), taxonomy)
    catchments = compute_catchments(amenities.features, CatchmentSpec(),
                                    buffer_provider(), wards.frame, jobs=4)
    grid = build_grid(wards.wards, 250.0, wards.reference)
    return build_k_vectors(grid, catchments, taxonomy)


@pytest.fixture(scope="session")
def profile_config_paths():
    from importlib import resources

    base = resources.files("walkgrid.data") / "configs"
    return {name: str(base / f"{name}.json")
            for name in ("young_professional", "family", "senior")}


@pytest.fixture(scope="session")
def profile_configs(profile_config_paths):
    out = {}
    for name, path in profile_config_paths.items():
        with open(path) as fh:
            out[name] = json.load(fh)
    return out
