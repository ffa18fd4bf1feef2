"""Batch orchestration of the manifest-in / manifest-out pipeline stages.

The CLI wraps these functions; they are importable directly so tests and
training-side callers can run stages in-process.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import yaml

from .errors import ConfigurationError, OversizeSampleError, TilepackError
from .filtering import RuleConfig, Thresholds, filter_corpus
from .geometry import (
    ImageDims,
    TileBudget,
    allocate_multi_image,
    plan_layout,
    plan_video_frames,
)
from .manifest import read_manifest, validate_record, write_manifest
from .mixing import DatasetConfig, build_epoch, load_mixture_config, mixture_stats
from .packing import PackerConfig, SampleUnit, SequencePacker, TokenBlock
from .raster import (
    JPEG_SUBSAMPLING,
    RESIZE_KERNEL,
    AugmentPolicy,
    jpeg_compress_augment,
    load_image,
    make_thumbnail,
    resize_image,
    save_image,
    split_tiles,
)
from .rendering import (
    Modality,
    TokenBudget,
    estimate_sample_tokens,
    render_multi_image,
    render_single_image,
    render_text,
    render_video,
)

logger = logging.getLogger(__name__)

CONFIG_SCHEMA_VERSION = 1

EXIT_CLEAN = 0
EXIT_RECORD_ERRORS = 1
EXIT_CONFIG_ERROR = 2


def stage_seed(global_seed: int, stage: str) -> int:
    """Derive an isolated per-stage seed from the single pipeline seed."""
    digest = hashlib.blake2b(
        f"{global_seed}:{stage}".encode("utf-8"), digest_size=8
    ).digest()
    return int.from_bytes(digest, "little")


def sample_key(record_id: str, index: int = 0) -> int:
    """Stable 64-bit augmentation key for one media item of one record."""
    digest = hashlib.blake2b(
        f"{record_id}:{index}".encode("utf-8"), digest_size=8
    ).digest()
    return int.from_bytes(digest, "little")


@dataclass(frozen=True)
class PipelineConfig:
    tile: TileBudget = TileBudget()
    thumbnail: bool = True
    token: TokenBudget = TokenBudget()
    packer: PackerConfig = PackerConfig()
    augment: AugmentPolicy = AugmentPolicy(enabled=False)
    rules: RuleConfig = RuleConfig()
    thresholds: Thresholds = Thresholds()
    mixture_path: str | None = None
    seed: int = 0


def load_pipeline_config(path: str | Path, seed: int | None = None) -> PipelineConfig:
    """Read the versioned pipeline YAML; CLI --seed overrides the file's seed."""
    with open(path, encoding="utf-8") as fh:
        raw = yaml.safe_load(fh) or {}
    version = raw.get("version", CONFIG_SCHEMA_VERSION)
    if version != CONFIG_SCHEMA_VERSION:
        raise ConfigurationError(f"unsupported config version {version}")
    global_seed = seed if seed is not None else int(raw.get("seed", 0))
    tile = raw.get("tile", {})
    token = raw.get("token", {})
    packer = raw.get("packer", {})
    augment = raw.get("augment", {})
    flt = raw.get("filter", {})
    try:
        return PipelineConfig(
            tile=TileBudget(
                n_min=int(tile.get("n_min", 1)),
                n_max=int(tile.get("n_max", 12)),
                tile_side=int(tile.get("tile_side", 448)),
            ),
            thumbnail=bool(tile.get("thumbnail", True)),
            token=TokenBudget(
                tokens_per_tile=int(token.get("tokens_per_tile", 256)),
                context_limit=int(token.get("context_limit", 16384)),
            ),
            packer=PackerConfig(
                l_max=int(packer.get("l_max", 16384)),
                t_max=int(packer.get("t_max", 48)),
                buffer_capacity=int(packer.get("buffer_capacity", 64)),
            ),
            augment=AugmentPolicy(
                enabled=bool(augment.get("enabled", False)),
                quality_min=int(augment.get("quality_min", 75)),
                quality_max=int(augment.get("quality_max", 100)),
                seed=stage_seed(global_seed, "augment"),
            ),
            rules=RuleConfig(
                max_line_length=int(flt.get("max_line_length", 8192)),
                min_line_length=int(flt.get("min_line_length", 1)),
                max_zero_run=int(flt.get("max_zero_run", 256)),
                max_duplicate_line_fraction=float(
                    flt.get("max_duplicate_line_fraction", 0.5)
                ),
                ngram_order=int(flt.get("ngram_order", 8)),
                max_ngram_repeat_fraction=float(
                    flt.get("max_ngram_repeat_fraction", 1.0)
                ),
            ),
            thresholds=Thresholds(
                quality=float(flt.get("quality_threshold", 7.0)),
                repetition=float(flt.get("repetition_threshold", 3.0)),
            ),
            mixture_path=raw.get("mixture"),
            seed=global_seed,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"bad pipeline config {path}: {exc}") from exc


def config_fingerprint(cfg: PipelineConfig) -> str:
    return hashlib.blake2b(repr(cfg).encode("utf-8"), digest_size=8).hexdigest()


def _layout_dict(layout) -> dict:
    return {
        "cols": layout.grid.cols,
        "rows": layout.grid.rows,
        "width": layout.resized.width,
        "height": layout.resized.height,
        "tile_count": layout.tile_count,
        "has_thumbnail": layout.has_thumbnail,
    }


def _tile_one_record(record: dict, cfg: PipelineConfig, tiles_dir: Path) -> dict:
    modality = Modality(record.get("modality", "text"))
    turns = record["conversations"]
    if modality == Modality.TEXT:
        rendered = render_text(turns)
        layouts = []
        tile_paths: list[str] = []
    else:
        media = record["media"]
        augment = cfg.augment if modality != Modality.VIDEO else AugmentPolicy(
            enabled=False, seed=cfg.augment.seed
        )
        if modality == Modality.SINGLE_IMAGE:
            budgets = [cfg.tile]
        elif modality == Modality.MULTI_IMAGE:
            per_image = allocate_multi_image(cfg.tile.n_max, len(media))
            budgets = [
                TileBudget(n_min=1, n_max=per_image, tile_side=cfg.tile.tile_side)
            ] * len(media)
        else:
            budgets = [
                TileBudget(n_min=1, n_max=1, tile_side=cfg.tile.tile_side)
            ] * len(media)

        layouts = []
        tile_paths = []
        for idx, (path, budget) in enumerate(zip(media, budgets)):
            img = load_image(path)
            layout = plan_layout(
                img.dims,
                budget,
                thumbnail_enabled=cfg.thumbnail and modality != Modality.VIDEO,
            )
            layouts.append(layout)
            crops = split_tiles(resize_image(img, layout.resized), layout)
            if layout.has_thumbnail:
                crops.append(make_thumbnail(img, budget.tile_side))
            for k, crop in enumerate(crops):
                if augment.enabled:
                    crop = jpeg_compress_augment(
                        crop, augment, sample_key(record["id"], idx * 10000 + k)
                    )
                out_path = tiles_dir / f"{record['id']}_{idx}_{k}.png"
                save_image(crop, out_path)
                # paths relative to the output dir keep reruns byte-identical
                tile_paths.append(str(out_path.relative_to(tiles_dir.parent)))

        if modality == Modality.SINGLE_IMAGE:
            rendered = render_single_image(layouts[0], turns, cfg.token)
        elif modality == Modality.MULTI_IMAGE:
            rendered = render_multi_image(layouts, turns, cfg.token)
        else:
            rendered = render_video(layouts, turns, cfg.token)

    unit = estimate_sample_tokens(
        rendered, budget=cfg.token, sample_id=record["id"]
    )
    out = dict(record)
    out["text"] = rendered.text
    out["token_length"] = unit.token_length
    out["tile_count"] = unit.tile_count
    out["blocks"] = [[b.tokens, b.tiles] for b in unit.blocks]
    out["layouts"] = [_layout_dict(l) for l in layouts]
    out["tiles"] = tile_paths
    out["provenance"] = {
        "resize_kernel": RESIZE_KERNEL,
        "jpeg_subsampling": JPEG_SUBSAMPLING,
        "augmented": cfg.augment.enabled and modality not in (Modality.TEXT, Modality.VIDEO),
    }
    return out


def run_tile(input_path: str, output_dir: str, cfg: PipelineConfig) -> int:
    """Tile every record's media, render its text, and annotate token counts.

    Per-record failures go to errors.jsonl; the run continues.
    """
    out_dir = Path(output_dir)
    tiles_dir = out_dir / "tiles"
    tiles_dir.mkdir(parents=True, exist_ok=True)
    tiled: list[dict] = []
    errors: list[dict] = []
    for record in read_manifest(input_path):
        try:
            validate_record(record)
            tiled.append(_tile_one_record(record, cfg, tiles_dir))
        except (TilepackError, OSError, KeyError, ValueError) as exc:
            errors.append(
                {
                    "id": record.get("id", "<missing>"),
                    "error": str(exc),
                    "code": getattr(exc, "code", "error"),
                }
            )
    write_manifest(out_dir / "tiled.jsonl", tiled)
    write_manifest(out_dir / "errors.jsonl", errors)
    return EXIT_RECORD_ERRORS if errors else EXIT_CLEAN


def run_filter(input_path: str, output_dir: str, cfg: PipelineConfig, scorer=None) -> int:
    """Partition a manifest into kept/dropped/review manifests plus a summary."""
    out_dir = Path(output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    kept, dropped, review, summary = filter_corpus(
        read_manifest(input_path), cfg.rules, scorer, cfg.thresholds
    )
    summary["config_fingerprint"] = config_fingerprint(cfg)
    write_manifest(out_dir / "kept.jsonl", kept)
    write_manifest(out_dir / "dropped.jsonl", dropped)
    write_manifest(out_dir / "review.jsonl", review)
    with open(out_dir / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return EXIT_CLEAN


def _dataset_sizes(configs: list[DatasetConfig], size_overrides: dict) -> dict:
    sizes = {}
    for ds in configs:
        if ds.name in size_overrides:
            sizes[ds.name] = int(size_overrides[ds.name])
        elif ds.path:
            sizes[ds.name] = sum(1 for _ in read_manifest(ds.path))
        else:
            raise ConfigurationError(f"dataset {ds.name}: needs a path or a size")
    return sizes


def run_mix(mixture_path: str, output_dir: str, seed: int) -> int:
    """Build one epoch plan from the mixture config and write it as JSONL."""
    with open(mixture_path, encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    configs = load_mixture_config(mixture_path)
    size_overrides = {
        entry["name"]: entry["size"]
        for entry in raw.get("datasets", [])
        if "size" in entry
    }
    sizes = _dataset_sizes(configs, size_overrides)
    plan = build_epoch(configs, sizes, seed)
    out_dir = Path(output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_manifest(
        out_dir / "plan.jsonl",
        (
            {"dataset": d.dataset, "index": d.index, "frames": d.frames}
            for d in plan.draws
        ),
    )
    return EXIT_CLEAN


def _record_to_unit(record: dict) -> SampleUnit:
    blocks = None
    if record.get("blocks"):
        blocks = tuple(TokenBlock(tokens=t, tiles=n) for t, n in record["blocks"])
    return SampleUnit(
        id=record["id"],
        token_length=int(record["token_length"]),
        tile_count=int(record.get("tile_count", 0)),
        blocks=blocks,
    )


def _plan_record_stream(plan_path: str, mixture_path: str):
    configs = {ds.name: ds for ds in load_mixture_config(mixture_path)}
    cache: dict[str, list[dict]] = {}
    for draw in read_manifest(plan_path):
        ds = configs[draw["dataset"]]
        if ds.path is None:
            raise ConfigurationError(f"dataset {ds.name}: plan packing needs a path")
        if ds.name not in cache:
            cache[ds.name] = list(read_manifest(ds.path))
        yield cache[ds.name][draw["index"]]


def run_pack(
    input_path: str,
    output_dir: str,
    cfg: PipelineConfig,
    plan_path: str | None = None,
    mixture_path: str | None = None,
) -> int:
    """Pack a token-annotated manifest (or an epoch plan) into sequences.

    Oversize samples are skipped and listed in the stats; the stats also
    report the packing efficiency against the pad-every-sample baseline.
    """
    out_dir = Path(output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if plan_path is not None:
        if mixture_path is None:
            raise ConfigurationError("--plan requires the mixture config")
        records = _plan_record_stream(plan_path, mixture_path)
    else:
        records = read_manifest(input_path)

    packer = SequencePacker(cfg.packer)
    sequences = []
    oversize: list[dict] = []
    token_sum = 0
    for record in records:
        try:
            unit = _record_to_unit(record)
        except (KeyError, ValueError, TypeError) as exc:
            oversize.append({"id": record.get("id", "<missing>"), "error": str(exc)})
            continue
        try:
            yielded = packer.push(unit)
        except OversizeSampleError as exc:
            oversize.append({"id": unit.id, "error": str(exc)})
            continue
        token_sum += unit.token_length  # pieces conserve the original token total
        sequences.extend(yielded)
    sequences.extend(packer.flush())

    write_manifest(
        out_dir / "packed.jsonl",
        (
            {
                "total_length": seq.total_length,
                "total_tiles": seq.total_tiles,
                "segments": seq.spans(),
            }
            for seq in sequences
        ),
    )
    n_pieces = sum(len(seq.segments) for seq in sequences)
    stats = {
        "sequences": len(sequences),
        "pieces": n_pieces,
        "token_sum": token_sum,
        "padding_ratio": 1.0 - token_sum / (len(sequences) * cfg.packer.l_max)
        if sequences
        else 0.0,
        "baseline_padding_ratio": 1.0 - token_sum / (n_pieces * cfg.packer.l_max)
        if n_pieces
        else 0.0,
        "mean_segments_per_sequence": n_pieces / len(sequences) if sequences else 0.0,
        "buffer_evictions": packer.evictions,
        "oversize_skipped": oversize,
    }
    with open(out_dir / "pack_stats.json", "w", encoding="utf-8") as fh:
        json.dump(stats, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return EXIT_RECORD_ERRORS if oversize else EXIT_CLEAN


def run_stats(input_path: str, output_dir: str) -> int:
    """Per-modality sample and token report over one manifest."""
    buckets: dict[str, dict] = {}
    for record in read_manifest(input_path):
        modality = record.get("modality", "text")
        bucket = buckets.setdefault(modality, {"modality": modality, "samples": 0, "tokens": 0})
        bucket["samples"] += 1
        bucket["tokens"] += int(record.get("token_length", 0))
    report = mixture_stats(list(buckets.values()))
    out_dir = Path(output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "stats.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return EXIT_CLEAN
