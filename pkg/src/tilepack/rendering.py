"""Visual-token accounting and conversation text rendering.

Visual positions are rendered as a repeated reserved marker inside
``<img>``/``</img>`` tags, so token accounting stays exact without a real
tokenizer. The rendered text is parseable back to its placeholder structure.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Mapping, Sequence

from .errors import ConfigurationError, FormatError, ValidationError
from .geometry import TileLayout
from .packing import SampleUnit, TokenBlock

IMG_OPEN = "<img>"
IMG_CLOSE = "</img>"
VISUAL_MARKER = "<tile_token>"

# Versioned plain-text chat framing: one "role: content" block per turn.
CHAT_FRAMING_VERSION = 1

_IMG_RUN_RE = re.compile(
    rf"(?:(?P<prefix>(?:Image|Frame)-(?P<index>\d+)): )?"
    rf"{re.escape(IMG_OPEN)}(?P<markers>(?:{re.escape(VISUAL_MARKER)})*){re.escape(IMG_CLOSE)}"
)


class Modality(str, Enum):
    SINGLE_IMAGE = "single_image"
    MULTI_IMAGE = "multi_image"
    VIDEO = "video"
    TEXT = "text"


@dataclass(frozen=True)
class TokenBudget:
    tokens_per_tile: int = 256
    context_limit: int = 16384

    def __post_init__(self) -> None:
        if self.tokens_per_tile < 1:
            raise ConfigurationError(
                f"tokens_per_tile must be >= 1, got {self.tokens_per_tile}"
            )
        if self.context_limit < self.tokens_per_tile:
            raise ConfigurationError(
                f"context_limit {self.context_limit} below tokens_per_tile"
            )


@dataclass(frozen=True)
class RenderedSample:
    text: str
    token_length: int
    tile_count: int
    modality: Modality

    def exceeds_context(self, budget: TokenBudget) -> bool:
        return self.token_length >= budget.context_limit


def whitespace_tokenizer(text: str) -> int:
    """Default desk-scale token counter: whitespace-separated pieces."""
    return len(text.split())


def visual_tokens_for(layout: TileLayout, budget: TokenBudget) -> int:
    """Token cost of one laid-out image: every crop, thumbnail included."""
    return layout.crop_count * budget.tokens_per_tile


def _image_run(n_tokens: int, prefix: str = "") -> str:
    return f"{prefix}{IMG_OPEN}{VISUAL_MARKER * n_tokens}{IMG_CLOSE}"


def _frame_turns(turns: Sequence[Mapping[str, str]], image_text: str) -> str:
    """Join role-tagged turns, injecting the placeholder block before the
    first user turn's text."""
    if not turns:
        raise FormatError("conversation turns must be nonempty")
    lines = []
    injected = False
    for turn in turns:
        role, content = turn["role"], turn["text"]
        if role == "user" and not injected and image_text:
            content = f"{image_text}\n{content}"
            injected = True
        lines.append(f"{role}: {content}")
    if image_text and not injected:
        raise FormatError("no user turn to attach the image placeholder to")
    return "\n".join(lines)


def _count(text: str, tokenizer: Callable[[str], int]) -> tuple[int, int]:
    """(text token count, visual marker count) of rendered text."""
    markers = 0
    stripped = []
    last = 0
    for m in _IMG_RUN_RE.finditer(text):
        markers += len(m.group("markers")) // len(VISUAL_MARKER)
        stripped.append(text[last : m.start()])
        if m.group("prefix"):
            stripped.append(m.group("prefix"))  # Image-k / Frame-k labels stay text
        last = m.end()
    stripped.append(text[last:])
    return tokenizer("".join(stripped)), markers


def render_single_image(
    layout: TileLayout,
    turns: Sequence[Mapping[str, str]],
    budget: TokenBudget = TokenBudget(),
) -> RenderedSample:
    """Single-image format: bare ``<img>`` run, no auxiliary label."""
    text = _frame_turns(turns, _image_run(visual_tokens_for(layout, budget)))
    text_tokens, markers = _count(text, whitespace_tokenizer)
    return RenderedSample(
        text=text,
        token_length=text_tokens + markers,
        tile_count=layout.crop_count,
        modality=Modality.SINGLE_IMAGE,
    )


def render_multi_image(
    layouts: Sequence[TileLayout],
    turns: Sequence[Mapping[str, str]],
    budget: TokenBudget = TokenBudget(),
) -> RenderedSample:
    """Multi-image format: images labeled ``Image-1:``, ``Image-2:``, ..."""
    if len(layouts) < 2:
        raise FormatError("multi-image rendering needs >= 2 images; use single-image")
    runs = "\n".join(
        _image_run(visual_tokens_for(layout, budget), prefix=f"Image-{k}: ")
        for k, layout in enumerate(layouts, start=1)
    )
    text = _frame_turns(turns, runs)
    text_tokens, markers = _count(text, whitespace_tokenizer)
    return RenderedSample(
        text=text,
        token_length=text_tokens + markers,
        tile_count=sum(layout.crop_count for layout in layouts),
        modality=Modality.MULTI_IMAGE,
    )


def render_video(
    frames: Sequence[TileLayout],
    turns: Sequence[Mapping[str, str]],
    budget: TokenBudget = TokenBudget(),
) -> RenderedSample:
    """Video format: single-tile frames labeled ``Frame-1:``, ``Frame-2:``, ..."""
    if not frames:
        raise FormatError("video rendering needs >= 1 frame")
    for k, frame in enumerate(frames, start=1):
        if frame.tile_count != 1 or frame.has_thumbnail:
            raise FormatError(f"video frame {k} must be a single tile, no thumbnail")
    runs = "\n".join(
        _image_run(visual_tokens_for(frame, budget), prefix=f"Frame-{k}: ")
        for k, frame in enumerate(frames, start=1)
    )
    text = _frame_turns(turns, runs)
    text_tokens, markers = _count(text, whitespace_tokenizer)
    return RenderedSample(
        text=text,
        token_length=text_tokens + markers,
        tile_count=len(frames),
        modality=Modality.VIDEO,
    )


def render_text(
    turns: Sequence[Mapping[str, str]],
    tokenizer: Callable[[str], int] = whitespace_tokenizer,
) -> RenderedSample:
    text = _frame_turns(turns, "")
    return RenderedSample(
        text=text,
        token_length=tokenizer(text),
        tile_count=0,
        modality=Modality.TEXT,
    )


def parse_rendered(text: str) -> list[dict]:
    """Recover the placeholder structure: one entry per ``<img>`` run.

    Inverse of the render functions on the visual structure: each entry
    reports the label kind (image/frame/None), its 1-based index, and the
    marker count inside the run.
    """
    runs = []
    for m in _IMG_RUN_RE.finditer(text):
        prefix = m.group("prefix")
        runs.append(
            {
                "label": None if prefix is None else prefix.split("-")[0].lower(),
                "index": None if prefix is None else int(m.group("index")),
                "visual_tokens": len(m.group("markers")) // len(VISUAL_MARKER),
            }
        )
    return runs


def estimate_sample_tokens(
    rendered: RenderedSample,
    text_tokenizer: Callable[[str], int] | None = None,
    budget: TokenBudget = TokenBudget(),
    sample_id: str = "",
    payload: object = None,
) -> SampleUnit:
    """Turn a rendered sample into the packer's unit of accounting.

    Visual runs become indivisible token blocks; the surrounding text stays
    divisible so truncation can cut it.
    """
    tokenizer = text_tokenizer or whitespace_tokenizer
    try:
        markers_total = 0
        blocks: list[TokenBlock] = []
        last = 0
        for m in _IMG_RUN_RE.finditer(rendered.text):
            n_markers = len(m.group("markers")) // len(VISUAL_MARKER)
            markers_total += n_markers
            head = rendered.text[last : m.start()] + (m.group("prefix") or "")
            head_tokens = tokenizer(head)
            if head_tokens:
                blocks.append(TokenBlock(tokens=head_tokens))
            blocks.append(
                TokenBlock(tokens=n_markers, tiles=n_markers // budget.tokens_per_tile)
            )
            last = m.end()
        tail_tokens = tokenizer(rendered.text[last:])
        if tail_tokens:
            blocks.append(TokenBlock(tokens=tail_tokens))
    except Exception as exc:
        raise ValidationError(f"token counting failed: {exc}") from exc
    total = sum(b.tokens for b in blocks)
    return SampleUnit(
        id=sample_id,
        token_length=total,
        tile_count=rendered.tile_count,
        payload=payload,
        blocks=tuple(blocks),
    )
