"""Streaming two-dimensional sequence packing.

Samples are concatenated into longer sequences under two resource limits at
once: token count (language model context) and image-tile count (vision
encoder batch). The packer cycles through four phases per incoming sample:
truncate to fit the limits, search the buffer for the best host, pack, then
either yield or keep buffering.
"""

from __future__ import annotations

import bisect
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, OversizeSampleError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TokenBlock:
    """A run of tokens that is either divisible text or an indivisible visual run."""

    tokens: int
    tiles: int = 0

    @property
    def divisible(self) -> bool:
        return self.tiles == 0


@dataclass(frozen=True)
class SampleUnit:
    """One training sample as the packer sees it: a length, a tile count, a payload.

    ``blocks`` optionally describes the internal token structure so truncation
    can avoid cutting through a visual run. Without it, pure-text samples are
    divisible anywhere and samples with tiles are treated as one indivisible
    block.
    """

    id: str
    token_length: int
    tile_count: int = 0
    payload: object = None
    blocks: tuple[TokenBlock, ...] | None = None

    def __post_init__(self) -> None:
        if self.token_length < 1:
            raise ConfigurationError(f"token_length must be >= 1, got {self.token_length}")
        if self.tile_count < 0:
            raise ConfigurationError(f"tile_count must be >= 0, got {self.tile_count}")
        if self.blocks is not None:
            if sum(b.tokens for b in self.blocks) != self.token_length:
                raise ConfigurationError("block token sum does not match token_length")
            if sum(b.tiles for b in self.blocks) != self.tile_count:
                raise ConfigurationError("block tile sum does not match tile_count")

    def _structure(self) -> tuple[TokenBlock, ...]:
        if self.blocks is not None:
            return self.blocks
        if self.tile_count == 0:
            return (TokenBlock(tokens=self.token_length),)
        return (TokenBlock(tokens=self.token_length, tiles=self.tile_count),)


@dataclass(frozen=True)
class PackerConfig:
    l_max: int = 16384
    t_max: int = 48
    buffer_capacity: int = 64

    def __post_init__(self) -> None:
        if self.l_max < 1:
            raise ConfigurationError(f"l_max must be >= 1, got {self.l_max}")
        if self.t_max < 0:
            raise ConfigurationError(f"t_max must be >= 0, got {self.t_max}")
        if self.buffer_capacity < 1:
            raise ConfigurationError(
                f"buffer_capacity must be >= 1, got {self.buffer_capacity}"
            )


@dataclass
class PackedSequence:
    """Concatenated samples with per-segment attention isolation.

    Each member sample occupies one segment. Segment ids label tokens by
    segment and define a block-diagonal attention pattern; position ids
    restart at zero at every segment boundary.
    """

    segments: list[SampleUnit] = field(default_factory=list)

    @property
    def total_length(self) -> int:
        return sum(s.token_length for s in self.segments)

    @property
    def total_tiles(self) -> int:
        return sum(s.tile_count for s in self.segments)

    @property
    def sort_key(self) -> tuple[int, int]:
        return (self.total_length, self.total_tiles)

    def segment_ids(self) -> np.ndarray:
        lengths = [s.token_length for s in self.segments]
        return np.repeat(np.arange(len(lengths)), lengths)

    def position_ids(self) -> np.ndarray:
        if not self.segments:
            return np.zeros(0, dtype=np.int64)
        return np.concatenate([np.arange(s.token_length) for s in self.segments])

    def attention_mask(self) -> np.ndarray:
        """Boolean mask allowing exactly intra-segment attention."""
        seg = self.segment_ids()
        return seg[:, None] == seg[None, :]

    def spans(self) -> list[dict]:
        """Segment spans for manifest emission: offsets instead of a mask."""
        out = []
        offset = 0
        for seg_id, s in enumerate(self.segments):
            out.append(
                {
                    "segment_id": seg_id,
                    "sample_id": s.id,
                    "start": offset,
                    "length": s.token_length,
                    "tile_count": s.tile_count,
                }
            )
            offset += s.token_length
        return out


def select_truncate(raw: SampleUnit, cfg: PackerConfig) -> list[SampleUnit]:
    """Cut an oversized sample into pieces that each fit (l_max, t_max).

    Cuts are greedy at l_max token boundaries and never land inside a visual
    run; a single visual run that alone exceeds the limits cannot be placed
    at all and is rejected.
    """
    if raw.token_length <= cfg.l_max and raw.tile_count <= cfg.t_max:
        return [raw]

    pieces: list[SampleUnit] = []
    cur: list[TokenBlock] = []
    cur_tokens = cur_tiles = 0

    def close_piece() -> None:
        nonlocal cur, cur_tokens, cur_tiles
        if not cur:
            return
        pieces.append(
            SampleUnit(
                id=f"{raw.id}#{len(pieces)}",
                token_length=cur_tokens,
                tile_count=cur_tiles,
                payload=raw.payload,
                blocks=tuple(cur),
            )
        )
        cur, cur_tokens, cur_tiles = [], 0, 0

    for block in raw._structure():
        if block.divisible:
            remaining = block.tokens
            while remaining > 0:
                room = cfg.l_max - cur_tokens
                if room == 0:
                    close_piece()
                    room = cfg.l_max
                take = min(remaining, room)
                cur.append(TokenBlock(tokens=take))
                cur_tokens += take
                remaining -= take
        else:
            if block.tokens > cfg.l_max or block.tiles > cfg.t_max:
                raise OversizeSampleError(
                    f"sample {raw.id}: indivisible visual block of {block.tokens} tokens"
                    f" / {block.tiles} tiles exceeds limits ({cfg.l_max}, {cfg.t_max})"
                )
            if cur_tokens + block.tokens > cfg.l_max or cur_tiles + block.tiles > cfg.t_max:
                close_piece()
            cur.append(block)
            cur_tokens += block.tokens
            cur_tiles += block.tiles
    close_piece()
    return pieces


def search_buffer(
    buffer: list[PackedSequence], unit: SampleUnit, cfg: PackerConfig
) -> int | None:
    """Index of the best host for ``unit``, or None.

    The buffer is sorted descending by (total_length, total_tiles), so the
    first feasible entry is the maximal one. A binary search finds where
    entries become short enough (combined length strictly below l_max); from
    there a linear scan applies the strict tile constraint.
    """
    # First index whose total_length satisfies the strict length bound.
    lo, hi = 0, len(buffer)
    while lo < hi:
        mid = (lo + hi) // 2
        if buffer[mid].total_length + unit.token_length < cfg.l_max:
            hi = mid
        else:
            lo = mid + 1
    for idx in range(lo, len(buffer)):
        if buffer[idx].total_tiles + unit.tile_count < cfg.t_max:
            return idx
    return None


def pack_pair(host: PackedSequence, unit: SampleUnit) -> PackedSequence:
    """Append ``unit`` as a new segment; existing segments are untouched."""
    return PackedSequence(segments=[*host.segments, unit])


class SequencePacker:
    """Single-owner streaming packer.

    ``push`` runs one full truncate/search/pack/maintain cycle per incoming
    sample and returns whatever sequences became ready; ``flush`` drains the
    buffer at end of stream. Not safe for concurrent use; run one packer per
    shard for parallelism.
    """

    def __init__(self, cfg: PackerConfig | None = None):
        self.cfg = cfg or PackerConfig()
        self._buffer: list[PackedSequence] = []
        self.evictions = 0

    @property
    def buffer(self) -> list[PackedSequence]:
        return self._buffer

    def push(self, raw: SampleUnit) -> list[PackedSequence]:
        yielded: list[PackedSequence] = []
        for piece in select_truncate(raw, self.cfg):
            idx = search_buffer(self._buffer, piece, self.cfg)
            if idx is None:
                packed = PackedSequence(segments=[piece])
            else:
                packed = pack_pair(self._buffer.pop(idx), piece)
            yielded.extend(self._maintain(packed))
        return yielded

    def _maintain(self, packed: PackedSequence) -> list[PackedSequence]:
        # A sequence at exactly l_max can never host another sample under the
        # strict search inequality, so it is yielded rather than buffered.
        if packed.total_length >= self.cfg.l_max or packed.total_tiles > self.cfg.t_max:
            return [packed]
        self._insert(packed)
        if len(self._buffer) > self.cfg.buffer_capacity:
            self.evictions += 1
            return [self._buffer.pop(0)]
        return []

    def _insert(self, packed: PackedSequence) -> None:
        # Descending (total_length, total_tiles): bisect on the negated key.
        keys = [(-s.total_length, -s.total_tiles) for s in self._buffer]
        pos = bisect.bisect_left(keys, (-packed.total_length, -packed.total_tiles))
        self._buffer.insert(pos, packed)

    def flush(self) -> list[PackedSequence]:
        out = list(self._buffer)
        self._buffer = []
        return out
