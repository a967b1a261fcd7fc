"""Operator CLI: precompute stores, batch-score, serve, and run the
convergence harness.

Every flag can also come from the environment with the ``WALKGRID_``
prefix (e.g. ``WALKGRID_PRECOMPUTE_CELL_SIZE=100``). Exit codes: 0 ok,
2 validation, 3 I/O, 4 provider, 5 internal.
"""

from __future__ import annotations

import functools
import glob as globlib
import json
import os
import sys

import click
import numpy as np

from .errors import ProviderError, ValidationError, WalkgridError
from .geo import build_grid
from .ingest import default_taxonomy, load_amenities, load_taxonomy, load_wards
from .isochrone import (CatchmentSpec, buffer_provider, compute_catchments,
                        load_catchments, routing_client, save_catchments)
from .precompute import build_k_vectors, load_store, save_store
from .scoring import SCORE_DECIMALS, grid_surface, parse_config, ward_scores

EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_PROVIDER = 4
EXIT_INTERNAL = 5


def _fail(code: int, exc: Exception) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(code)


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ProviderError as exc:
            _fail(EXIT_PROVIDER, exc)
        except (ValidationError, WalkgridError) as exc:
            _fail(EXIT_VALIDATION, exc)
        except OSError as exc:
            _fail(EXIT_IO, exc)
        except click.ClickException:
            raise
        except Exception as exc:  # pragma: no cover - defensive
            _fail(EXIT_INTERNAL, exc)
    return wrapper


@click.group()
def cli():
    """Personalized walking-accessibility scoring."""


@cli.command("precompute")
@click.option("--wards", "wards_path", required=True, type=str,
              help="Ward boundary GeoJSON.")
@click.option("--amenities", "amenities_path", type=str, default=None,
              help="Amenity GeoJSON (mutually exclusive with --catchments-dir).")
@click.option("--catchments-dir", type=str, default=None,
              help="Directory of cached per-category catchment GeoJSON.")
@click.option("--out", "out_path", required=True, type=str,
              help="Output store path.")
@click.option("--cell-size", default=250.0, show_default=True,
              help="Grid cell edge, meters.")
@click.option("--provider", type=click.Choice(["buffer", "routing"]),
              default="buffer", show_default=True)
@click.option("--endpoint", default=None,
              help="Isochrone API endpoint (routing provider).")
@click.option("--walk-speed", default=80.0, show_default=True,
              help="Buffer provider walking speed, m/min.")
@click.option("--max-minutes", default=15.0, show_default=True,
              help="Catchment travel-time threshold.")
@click.option("--taxonomy", "taxonomy_path", default=None,
              help="Taxonomy JSON (defaults to the packaged registry).")
@click.option("--ward-id-property", default="ward_id", show_default=True)
@click.option("--amenity-id-property", default="id", show_default=True)
@click.option("--save-catchments", "save_catchments_dir", default=None,
              help="Also export computed catchments as GeoJSON here.")
@click.option("--jobs", default=lambda: os.cpu_count() or 1,
              help="Concurrent provider requests. [default: cores]")
@handle_errors
def cmd_precompute(wards_path, amenities_path, catchments_dir, out_path,
                   cell_size, provider, endpoint, walk_speed, max_minutes,
                   taxonomy_path, ward_id_property, amenity_id_property,
                   save_catchments_dir, jobs):
    """Build a k-vector store from ward and amenity GeoJSON."""
    if cell_size <= 0:
        raise ValidationError(f"cell-size must be positive, got {cell_size}")
    if (amenities_path is None) == (catchments_dir is None):
        raise ValidationError("exactly one of --amenities or --catchments-dir "
                              "is required")
    if taxonomy_path is not None:
        with open(taxonomy_path) as fh:
            taxonomy = load_taxonomy(fh.read())
    else:
        taxonomy = default_taxonomy()

    with open(wards_path, "rb") as fh:
        wards = load_wards(fh.read(), id_property=ward_id_property)
    spec = CatchmentSpec(max_minutes=float(max_minutes))

    if catchments_dir is not None:
        paths = sorted(globlib.glob(os.path.join(catchments_dir, "*.geojson")))
        if not paths:
            raise ValidationError(f"no *.geojson files in {catchments_dir}")
        catchments = load_catchments(paths, wards.frame)
    else:
        with open(amenities_path, "rb") as fh:
            amenities = load_amenities(fh.read(), taxonomy,
                                       id_property=amenity_id_property)
        if amenities.dropped:
            click.echo(f"dropped {amenities.dropped} features with unknown "
                       f"categories", err=True)
        if provider == "routing":
            if not endpoint:
                raise ValidationError("--endpoint is required with the "
                                      "routing provider")
            prov = routing_client(endpoint, wards.frame)
        else:
            prov = buffer_provider(float(walk_speed))
        catchments = compute_catchments(amenities.features, spec, prov,
                                        wards.frame, jobs=int(jobs))
        if save_catchments_dir:
            save_catchments(catchments, save_catchments_dir, wards.frame)

    grid = build_grid(wards.wards, float(cell_size), wards.reference)
    store = build_k_vectors(grid, catchments, taxonomy)
    save_store(store, out_path)

    click.echo(f"store: {out_path}")
    click.echo(f"cells: {grid.n_cells} ({grid.n_cols} x {grid.n_rows} at "
               f"{grid.cell_size:g} m)")
    click.echo(f"wards: {len(grid.ward_ids)}")
    click.echo(f"catchments: {len(catchments)}")
    click.echo("coverage per category (cells with k >= 1):")
    covered = (store.counts > 0).sum(axis=0)
    peak = store.counts.max(axis=0)
    for i, cat in enumerate(store.taxonomy.ids):
        if covered[i]:
            click.echo(f"  {cat}: {int(covered[i])} cells, max k {int(peak[i])}")


@cli.command("score")
@click.option("--store", "store_path", required=True, type=str)
@click.option("--config", "config_path", required=True, type=str)
@click.option("--granularity", type=click.Choice(["grid", "ward"]),
              default="ward", show_default=True)
@click.option("--out", "out_path", required=True, type=str)
@click.option("--format", "fmt", type=click.Choice(["csv", "geojson"]),
              default="csv", show_default=True)
@handle_errors
def cmd_score(store_path, config_path, granularity, out_path, fmt):
    """Score a store under a config and write CSV or GeoJSON."""
    store = load_store(store_path)
    with open(config_path) as fh:
        config = parse_config(fh.read())
    surface = (ward_scores(store, config) if granularity == "ward"
               else grid_surface(store, config))
    if fmt == "csv":
        if granularity == "grid":
            rows = sorted(surface.values.items(), key=lambda kv: int(kv[0]))
        else:
            rows = sorted(surface.values.items())
        body = "id,score\n" + "".join(
            f"{k},{v:.{SCORE_DECIMALS}f}\n" for k, v in rows)
        with open(out_path, "w", newline="") as fh:
            fh.write(body)
    else:
        from .service import _build_geometry
        fc = _build_geometry(store, granularity)
        for feat in fc["features"]:
            value = surface.values.get(
                int(feat["id"]) if granularity == "grid" else feat["id"])
            feat["properties"]["score"] = (round(value, SCORE_DECIMALS)
                                           if value is not None else None)
        with open(out_path, "w", newline="") as fh:
            json.dump(fc, fh, sort_keys=True, separators=(",", ":"))
            fh.write("\n")
    click.echo(f"wrote {out_path} ({granularity}, {len(surface.values)} ids)")


@cli.command("serve")
@click.option("--store", "store_path", required=True, type=str)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.option("--cors", default="*", show_default=True,
              help="Comma-separated allowed origins.")
@handle_errors
def cmd_serve(store_path, host, port, cors):
    """Serve the HTTP scoring API over a store."""
    import uvicorn

    from .service import create_app

    store = load_store(store_path)
    app = create_app(store, cors_origins=tuple(
        o.strip() for o in cors.split(",") if o.strip()))
    click.echo(f"serving {store_path} on {host}:{port}")
    uvicorn.run(app, host=host, port=int(port), log_level="warning")


@cli.command("converge")
@click.option("--scenario", "scenario_path", required=True, type=str)
@click.option("--resolutions", required=True,
              help="Comma-separated cell sizes in meters, decreasing.")
@click.option("--out", "out_path", required=True, type=str)
@click.option("--coverage", type=click.Choice(["area", "centroid"]),
              default="area", show_default=True)
@handle_errors
def cmd_converge(scenario_path, resolutions, out_path, coverage):
    """Run the refinement harness on a synthetic scenario."""
    from .convergence import load_scenario, run_refinement

    try:
        sizes = [float(tok) for tok in resolutions.split(",") if tok.strip()]
    except ValueError:
        raise ValidationError(f"resolutions: not a number list: {resolutions!r}")
    if not sizes:
        raise ValidationError("resolutions: at least one cell size required")
    scenario = load_scenario(scenario_path)
    try:
        rows = run_refinement(scenario, sizes, coverage=coverage)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    body = "cell_size,grid_score,oracle_score,abs_error\n" + "".join(
        f"{r.cell_size:g},{r.grid_score:.6f},{r.oracle_score:.6f},"
        f"{r.error:.6f}\n" for r in rows)
    with open(out_path, "w", newline="") as fh:
        fh.write(body)
    click.echo(f"wrote {out_path} ({len(rows)} resolutions)")
    for r in rows:
        click.echo(f"  {r.cell_size:g} m: grid {r.grid_score:.6f} vs oracle "
                   f"{r.oracle_score:.6f} (error {r.error:.6f})")


def main():
    cli(auto_envvar_prefix="WALKGRID")


if __name__ == "__main__":
    main()
