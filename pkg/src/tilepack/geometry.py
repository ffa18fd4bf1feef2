"""Grid selection for aspect-preserving high-resolution tiling.

Everything in this module is exact integer arithmetic: ratio distances are
compared by cross-multiplication so ties are decided deterministically
instead of depending on float rounding.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigurationError

DEFAULT_TILE_SIDE = 448


@dataclass(frozen=True)
class ImageDims:
    width: int
    height: int

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ConfigurationError(
                f"image dims must be positive, got {self.width}x{self.height}"
            )

    @property
    def aspect_ratio(self) -> float:
        return self.width / self.height

    @property
    def area(self) -> int:
        return self.width * self.height


@dataclass(frozen=True)
class TileBudget:
    n_min: int = 1
    n_max: int = 12
    tile_side: int = DEFAULT_TILE_SIDE

    def __post_init__(self) -> None:
        if not (1 <= self.n_min <= self.n_max):
            raise ConfigurationError(
                f"need 1 <= n_min <= n_max, got n_min={self.n_min} n_max={self.n_max}"
            )
        if self.tile_side < 1:
            raise ConfigurationError(f"tile_side must be positive, got {self.tile_side}")


@dataclass(frozen=True)
class GridRatio:
    cols: int
    rows: int

    @property
    def tile_count(self) -> int:
        return self.cols * self.rows

    @property
    def ratio(self) -> float:
        return self.cols / self.rows


@dataclass(frozen=True)
class TileLayout:
    grid: GridRatio
    resized: ImageDims
    tile_count: int
    has_thumbnail: bool

    @property
    def crop_count(self) -> int:
        """Number of images fed to the vision encoder (tiles + thumbnail)."""
        return self.tile_count + (1 if self.has_thumbnail else 0)


def enumerate_target_ratios(budget: TileBudget) -> list[GridRatio]:
    """All candidate grids (cols, rows) whose product lies in [n_min, n_max].

    Ordered ascending by (cols * rows, cols); this scan order is what the
    tie-breaking in :func:`select_closest_ratio` is defined against.
    Distinct pairs with the same ratio value (e.g. 1x2 and 2x4) are both kept.
    """
    pairs = [
        (i, j)
        for i in range(1, budget.n_max + 1)
        for j in range(1, budget.n_max + 1)
        if budget.n_min <= i * j <= budget.n_max
    ]
    pairs.sort(key=lambda p: (p[0] * p[1], p[0]))
    return [GridRatio(cols=i, rows=j) for i, j in pairs]


def select_closest_ratio(dims: ImageDims, budget: TileBudget) -> GridRatio:
    """Pick the candidate grid whose cols/rows ratio is closest to width/height.

    Scans candidates in the canonical order from :func:`enumerate_target_ratios`.
    On an exact distance tie the later (larger-product) candidate replaces the
    incumbent only when the original image area exceeds half the candidate's
    resized area (2*W*H > S^2*i*j), so low-resolution images are not blown up
    to more than twice their size.
    """
    w, h = dims.width, dims.height
    s2 = budget.tile_side * budget.tile_side
    best: GridRatio | None = None
    best_num = best_den = 0
    for cand in enumerate_target_ratios(budget):
        # |W/H - i/j| == |W*j - i*H| / (H*j); H cancels in comparisons.
        num = abs(w * cand.rows - cand.cols * h)
        den = cand.rows
        if best is None or num * best_den < best_num * den:
            best, best_num, best_den = cand, num, den
        elif num * best_den == best_num * den:
            if 2 * w * h > s2 * cand.cols * cand.rows:
                best, best_num, best_den = cand, num, den
    assert best is not None
    return best


def plan_layout(
    dims: ImageDims, budget: TileBudget, thumbnail_enabled: bool = True
) -> TileLayout:
    """Full layout plan: grid choice, resize target, tile count, thumbnail flag.

    The thumbnail is skipped whenever the image fits in a single tile.
    """
    grid = select_closest_ratio(dims, budget)
    s = budget.tile_side
    tile_count = grid.tile_count
    return TileLayout(
        grid=grid,
        resized=ImageDims(width=grid.cols * s, height=grid.rows * s),
        tile_count=tile_count,
        has_thumbnail=thumbnail_enabled and tile_count > 1,
    )


def allocate_multi_image(n_max: int, image_count: int) -> int:
    """Per-image tile budget when one sample carries several images.

    The total budget is split evenly, flooring, and never drops below one
    tile per image.
    """
    if n_max < 1 or image_count < 1:
        raise ConfigurationError(
            f"n_max and image_count must be positive, got {n_max}, {image_count}"
        )
    return max(1, n_max // image_count)


def plan_video_frames(
    frame_count: int, tile_side: int = DEFAULT_TILE_SIDE
) -> list[TileLayout]:
    """Layouts for video frames: every frame is a single fixed-size tile.

    No tiling and no thumbnails; videos rely on frame count, not resolution.
    """
    if frame_count < 1:
        raise ConfigurationError(f"frame_count must be positive, got {frame_count}")
    frame = TileLayout(
        grid=GridRatio(cols=1, rows=1),
        resized=ImageDims(width=tile_side, height=tile_side),
        tile_count=1,
        has_thumbnail=False,
    )
    return [frame] * frame_count
