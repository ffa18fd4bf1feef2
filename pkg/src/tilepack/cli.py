"""Command-line front-end: tile, filter, mix, pack, stats subcommands."""

from __future__ import annotations

import logging
import os
import sys

import click

from . import pipeline
from .errors import ConfigurationError, TilepackError


def _setup_logging() -> None:
    level = os.environ.get("TILEPACK_LOG", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )


def _load_config(config_path: str | None, seed: int | None) -> pipeline.PipelineConfig:
    if config_path is None:
        return pipeline.PipelineConfig(seed=seed or 0)
    return pipeline.load_pipeline_config(config_path, seed=seed)


config_opt = click.option("--config", "config_path", type=click.Path(exists=True))
input_opt = click.option("--input", "input_path", type=click.Path(exists=True), required=True)
output_opt = click.option("--output", "output_dir", type=click.Path(), required=True)
seed_opt = click.option("--seed", type=int, default=None)
workers_opt = click.option("--workers", type=int, default=1, show_default=True)


@click.group()
def main() -> None:
    """Multimodal training-data preprocessing pipeline."""
    _setup_logging()


def _run(fn, *args, **kwargs) -> None:
    try:
        sys.exit(fn(*args, **kwargs))
    except ConfigurationError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(pipeline.EXIT_CONFIG_ERROR)
    except TilepackError as exc:
        click.echo(f"error [{exc.code}]: {exc}", err=True)
        sys.exit(pipeline.EXIT_RECORD_ERRORS)


@main.command()
@config_opt
@input_opt
@output_opt
@seed_opt
@workers_opt
def tile(config_path, input_path, output_dir, seed, workers) -> None:
    """Tile media, render conversation text, annotate token counts."""
    cfg = _load_config(config_path, seed)
    _run(pipeline.run_tile, input_path, output_dir, cfg)


@main.command("filter")
@config_opt
@input_opt
@output_opt
@seed_opt
def filter_cmd(config_path, input_path, output_dir, seed) -> None:
    """Split a manifest into kept / dropped / review with a summary."""
    cfg = _load_config(config_path, seed)
    _run(pipeline.run_filter, input_path, output_dir, cfg)


@main.command()
@click.option("--config", "mixture_path", type=click.Path(exists=True), required=True,
              help="Mixture YAML listing the datasets.")
@output_opt
@seed_opt
def mix(mixture_path, output_dir, seed) -> None:
    """Build a shuffled epoch plan from the dataset mixture."""
    _run(pipeline.run_mix, mixture_path, output_dir, seed or 0)


@main.command()
@config_opt
@click.option("--input", "input_path", type=click.Path(exists=True))
@output_opt
@seed_opt
@click.option("--plan", "plan_path", type=click.Path(exists=True),
              help="Epoch plan JSONL; requires --mixture.")
@click.option("--mixture", "mixture_path", type=click.Path(exists=True))
def pack(config_path, input_path, output_dir, seed, plan_path, mixture_path) -> None:
    """Pack token-annotated records into training sequences."""
    if input_path is None and plan_path is None:
        click.echo("config error: pack needs --input or --plan", err=True)
        sys.exit(pipeline.EXIT_CONFIG_ERROR)
    cfg = _load_config(config_path, seed)
    _run(pipeline.run_pack, input_path, output_dir, cfg, plan_path, mixture_path)


@main.command()
@input_opt
@output_opt
def stats(input_path, output_dir) -> None:
    """Per-modality sample and token report."""
    _run(pipeline.run_stats, input_path, output_dir)


if __name__ == "__main__":
    main()
