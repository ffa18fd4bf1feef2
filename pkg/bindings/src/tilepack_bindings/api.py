"""Binding surface: flat-argument mirrors of the core operations."""

from __future__ import annotations

import threading

from tilepack import (
    DatasetConfig,
    ImageDims,
    Modality,
    PackerConfig,
    ResponseSpan,
    RuleConfig,
    SampleUnit,
    SequencePacker,
    Thresholds,
    TileBudget,
    TokenBlock,
    WeightStrategy,
    build_epoch,
    filter_record,
    normalized_weights,
    plan_layout,
)


def bind_plan_layout(
    width: int,
    height: int,
    n_min: int,
    n_max: int,
    tile_side: int,
    thumbnail: bool,
) -> dict:
    layout = plan_layout(
        ImageDims(width=width, height=height),
        TileBudget(n_min=n_min, n_max=n_max, tile_side=tile_side),
        thumbnail_enabled=thumbnail,
    )
    return {
        "cols": layout.grid.cols,
        "rows": layout.grid.rows,
        "width": layout.resized.width,
        "height": layout.resized.height,
        "tile_count": layout.tile_count,
        "has_thumbnail": layout.has_thumbnail,
    }


def _sequence_dict(seq) -> dict:
    return {
        "total_length": seq.total_length,
        "total_tiles": seq.total_tiles,
        "segments": seq.spans(),
    }


class PackerHandle:
    """Single-owner packer handle with an explicit create/close lifecycle."""

    def __init__(self, l_max: int, t_max: int, buffer_capacity: int = 64):
        self._packer = SequencePacker(
            PackerConfig(l_max=l_max, t_max=t_max, buffer_capacity=buffer_capacity)
        )
        self._lock = threading.Lock()
        self._closed = False

    def _enter(self):
        if self._closed:
            raise RuntimeError("packer handle is closed")
        if not self._lock.acquire(blocking=False):
            raise RuntimeError("packer handle is single-owner; concurrent use detected")

    def push(
        self,
        sample_id: str,
        token_length: int,
        tile_count: int = 0,
        blocks: list[list[int]] | None = None,
    ) -> list[dict]:
        self._enter()
        try:
            unit = SampleUnit(
                id=sample_id,
                token_length=token_length,
                tile_count=tile_count,
                blocks=tuple(TokenBlock(tokens=t, tiles=n) for t, n in blocks)
                if blocks is not None
                else None,
            )
            return [_sequence_dict(s) for s in self._packer.push(unit)]
        finally:
            self._lock.release()

    def flush(self) -> list[dict]:
        self._enter()
        try:
            return [_sequence_dict(s) for s in self._packer.flush()]
        finally:
            self._lock.release()

    def close(self) -> None:
        self._closed = True

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()


def bind_push(handle: PackerHandle, sample_id, token_length, tile_count=0, blocks=None):
    return handle.push(sample_id, token_length, tile_count, blocks)


def bind_flush(handle: PackerHandle):
    return handle.flush()


def bind_build_epoch(datasets: list[dict], sizes: dict, seed: int) -> list[dict]:
    configs = [
        DatasetConfig(
            name=d["name"],
            modality=Modality(d["modality"]),
            augmentation=bool(d.get("augmentation", False)),
            n_max=int(d.get("n_max", 12)),
            repeat_factor=float(d.get("repeat_factor", 1.0)),
            frame_range=tuple(d["frame_range"]) if "frame_range" in d else None,
        )
        for d in datasets
    ]
    plan = build_epoch(configs, sizes, seed)
    return [
        {"dataset": d.dataset, "index": d.index, "frames": d.frames}
        for d in plan.draws
    ]


def bind_filter_record(
    record: dict, rules: dict | None = None, thresholds: dict | None = None
) -> dict:
    rule_cfg = RuleConfig(**rules) if rules else RuleConfig()
    thr = (
        Thresholds(
            quality=float(thresholds.get("quality", 7.0)),
            repetition=float(thresholds.get("repetition", 3.0)),
        )
        if thresholds
        else Thresholds()
    )
    verdict = filter_record(record, rule_cfg, scorer=None, thresholds=thr)
    return {
        "decision": verdict.decision.value,
        "rule_hits": [h.rule for h in verdict.rule_hits],
        "quality_score": verdict.quality_score,
        "repetition_score": verdict.repetition_score,
    }


def bind_normalized_weights(token_counts: list[int], exponent: float) -> list[float]:
    spans = [ResponseSpan(token_count=c) for c in token_counts]
    return [float(w) for w in normalized_weights(spans, WeightStrategy(exponent))]
