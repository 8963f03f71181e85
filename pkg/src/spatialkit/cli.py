"""Command-line entry points: fixture generation, batch runs, the API server."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .service.pipeline import PipelineError, run_pipeline
from .synthgen import make_demo_fixture


@click.group()
def main():
    """spatialkit: neighborhood-effect analysis workbench."""


@main.command()
@click.argument("outdir", type=click.Path(path_type=Path))
@click.option("--rows", default=12, show_default=True)
@click.option("--cols", default=12, show_default=True)
@click.option("--seed", default=7, show_default=True)
@click.option("--cell-m", default=500.0, show_default=True, help="cell size in meters")
def synth(outdir: Path, rows: int, cols: int, seed: int, cell_m: float):
    """Write a synthetic fixture (meta.geojson, census.csv, subgroups.csv)."""
    path = make_demo_fixture(outdir, rows=rows, cols=cols, seed=seed, cell_size_m=cell_m)
    click.echo(f"fixture written to {path}")


@main.command()
@click.argument("config_path", type=click.Path(exists=True, path_type=Path))
@click.option("--out", "outdir", type=click.Path(path_type=Path), default=None, help="bundle directory")
def run(config_path: Path, outdir: Path | None):
    """Run the full pipeline headlessly from a JSON config, writing a bundle."""
    config = json.loads(config_path.read_text())
    outdir = outdir or Path(config.get("out", "bundle"))
    try:
        out = run_pipeline(config, outdir)
    except PipelineError as exc:
        click.echo(f"error at stage {exc.stage}: {exc}", err=True)
        sys.exit(exc.exit_code)
    click.echo(f"bundle written to {out}")


@main.command()
@click.option("--data-root", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8800, show_default=True)
def serve(data_root: Path, host: str, port: int):
    """Serve the session API (datasets are subdirectories of --data-root)."""
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(data_root), host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
