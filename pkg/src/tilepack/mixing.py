"""Dataset mixture configuration, repeat-factor expansion, and epoch planning."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
import yaml

from .errors import ConfigurationError
from .rendering import Modality

_U64 = (1 << 64) - 1

DEFAULT_FRAME_RANGE = (8, 32)
MAX_REPEAT_FACTOR = 4.0


def _seed_words(*parts: int | str) -> list[int]:
    """Stable 64-bit seed material from mixed int/str parts."""
    words = []
    for part in parts:
        if isinstance(part, int):
            words.append(part & _U64)
        else:
            digest = hashlib.blake2b(part.encode("utf-8"), digest_size=8).digest()
            words.append(int.from_bytes(digest, "little"))
    return words


@dataclass(frozen=True)
class DatasetConfig:
    name: str
    modality: Modality
    augmentation: bool = False
    n_max: int = 12
    repeat_factor: float = 1.0
    frame_range: tuple[int, int] | None = None
    path: str | None = None

    def __post_init__(self) -> None:
        validate_config(self)

    @property
    def frames(self) -> tuple[int, int]:
        return self.frame_range or DEFAULT_FRAME_RANGE


def validate_config(cfg: DatasetConfig) -> DatasetConfig:
    """Check every invariant; each violation maps to a distinct message."""
    r = cfg.repeat_factor
    if not (0 < r <= MAX_REPEAT_FACTOR) or not math.isfinite(r):
        raise ConfigurationError(
            f"dataset {cfg.name}: repeat_factor must be in (0, {MAX_REPEAT_FACTOR}], got {r}"
        )
    if cfg.n_max < 1:
        raise ConfigurationError(f"dataset {cfg.name}: n_max must be >= 1, got {cfg.n_max}")
    if cfg.modality == Modality.VIDEO:
        if cfg.augmentation:
            raise ConfigurationError(
                f"dataset {cfg.name}: augmentation must stay off for video "
                "(frames must share one image quality)"
            )
        if cfg.n_max != 1:
            raise ConfigurationError(
                f"dataset {cfg.name}: video requires n_max = 1, got {cfg.n_max}"
            )
    if cfg.frame_range is not None:
        lo, hi = cfg.frame_range
        if not (1 <= lo <= hi):
            raise ConfigurationError(
                f"dataset {cfg.name}: bad frame_range [{lo}, {hi}]"
            )
    return cfg


@dataclass(frozen=True)
class Draw:
    dataset: str
    index: int
    frames: int | None = None


@dataclass(frozen=True)
class MixturePlan:
    draws: tuple[Draw, ...]
    seed: int

    def __len__(self) -> int:
        return len(self.draws)


def expand_repeats(cfg: DatasetConfig, dataset_size: int, seed: int) -> list[int]:
    """Indices for one epoch under the repeat factor.

    Each index appears floor(r) times plus once more with probability
    frac(r), via a deterministic per-index draw; r < 1 down-samples, r > 1
    up-samples.
    """
    if dataset_size < 1:
        raise ConfigurationError(f"dataset {cfg.name}: size must be >= 1")
    whole = int(cfg.repeat_factor)
    frac = cfg.repeat_factor - whole
    rng = np.random.default_rng(_seed_words(seed, cfg.name, "repeats"))
    extra = rng.random(dataset_size) < frac if frac > 0 else np.zeros(dataset_size, bool)
    out: list[int] = []
    for index in range(dataset_size):
        out.extend([index] * (whole + int(extra[index])))
    return out


def build_epoch(
    configs: Sequence[DatasetConfig], sizes: Mapping[str, int], seed: int
) -> MixturePlan:
    """One epoch of draws: per-dataset expansion, then a global shuffle.

    Video draws carry a frame count sampled uniformly from the dataset's
    frame range. Fully determined by (configs, sizes, seed).
    """
    draws: list[Draw] = []
    for cfg in configs:
        indices = expand_repeats(cfg, sizes[cfg.name], seed)
        if cfg.modality == Modality.VIDEO:
            lo, hi = cfg.frames
            rng = np.random.default_rng(_seed_words(seed, cfg.name, "frames"))
            counts = rng.integers(lo, hi + 1, size=len(indices))
            draws.extend(
                Draw(dataset=cfg.name, index=i, frames=int(f))
                for i, f in zip(indices, counts)
            )
        else:
            draws.extend(Draw(dataset=cfg.name, index=i) for i in indices)
    rng = np.random.default_rng(_seed_words(seed, "shuffle"))
    order = rng.permutation(len(draws))
    return MixturePlan(draws=tuple(draws[i] for i in order), seed=seed)


def mixture_stats(entries: Sequence[Mapping[str, object]]) -> dict:
    """Per-modality sample and token totals with percentage shares.

    ``entries`` carry {modality, samples, tokens}; an empty mixture yields a
    zero report instead of dividing by zero.
    """
    by_modality: dict[str, dict[str, float]] = {
        m.value: {"samples": 0, "tokens": 0} for m in Modality
    }
    for entry in entries:
        modality = Modality(entry["modality"]).value
        by_modality[modality]["samples"] += int(entry["samples"])
        by_modality[modality]["tokens"] += int(entry["tokens"])
    total_samples = sum(v["samples"] for v in by_modality.values())
    total_tokens = sum(v["tokens"] for v in by_modality.values())
    for v in by_modality.values():
        v["sample_pct"] = 100.0 * v["samples"] / total_samples if total_samples else 0.0
        v["token_pct"] = 100.0 * v["tokens"] / total_tokens if total_tokens else 0.0
    return {
        "total_samples": total_samples,
        "total_tokens": total_tokens,
        "modalities": by_modality,
    }


def load_mixture_config(path: str) -> list[DatasetConfig]:
    """Read the mixture YAML: a ``datasets`` list of per-dataset settings.

    Schema per dataset: name, modality, augmentation, n_max, repeat_factor,
    optional frame_range ([lo, hi], video only), optional path (JSONL
    manifest), optional size (overrides counting the manifest).
    """
    with open(path, encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict) or "datasets" not in raw:
        raise ConfigurationError(f"mixture config {path} needs a 'datasets' list")
    configs = []
    for entry in raw["datasets"]:
        try:
            configs.append(
                DatasetConfig(
                    name=entry["name"],
                    modality=Modality(entry["modality"]),
                    augmentation=bool(entry.get("augmentation", False)),
                    n_max=int(entry.get("n_max", 12)),
                    repeat_factor=float(entry.get("repeat_factor", 1.0)),
                    frame_range=tuple(entry["frame_range"])
                    if "frame_range" in entry
                    else None,
                    path=entry.get("path"),
                )
            )
        except (KeyError, ValueError) as exc:
            raise ConfigurationError(f"bad dataset entry in {path}: {exc}") from exc
    return configs
