import random
from fractions import Fraction

import pytest

from tilepack import (
    ConfigurationError,
    GridRatio,
    ImageDims,
    TileBudget,
    allocate_multi_image,
    enumerate_target_ratios,
    plan_layout,
    plan_video_frames,
    select_closest_ratio,
)


def oracle_closest_ratio(w, h, n_min, n_max, side):
    """Exhaustive scan with exact Fraction arithmetic, independent of the
    library's cross-multiplication path."""
    candidates = sorted(
        (
            (i, j)
            for i in range(1, n_max + 1)
            for j in range(1, n_max + 1)
            if n_min <= i * j <= n_max
        ),
        key=lambda p: (p[0] * p[1], p[0]),
    )
    target = Fraction(w, h)
    best = None
    best_diff = None
    for i, j in candidates:
        diff = abs(target - Fraction(i, j))
        if best is None or diff < best_diff:
            best, best_diff = (i, j), diff
        elif diff == best_diff and 2 * w * h > side * side * i * j:
            best = (i, j)
    return best


class TestEnumerateTargetRatios:
    def test_small_budget(self):
        grids = enumerate_target_ratios(TileBudget(1, 2, 448))
        assert [(g.cols, g.rows) for g in grids] == [(1, 1), (1, 2), (2, 1)]

    def test_single_grid(self):
        assert enumerate_target_ratios(TileBudget(1, 1, 448)) == [GridRatio(1, 1)]

    def test_default_budget_grid_count_with_equal_ratio_pairs(self):
        grids = enumerate_target_ratios(TileBudget(1, 12, 448))
        # sum over i of min(12, floor(12/i)) = 35 pairs with product <= 12
        brute = {
            (i, j)
            for i in range(1, 13)
            for j in range(1, 13)
            if 1 <= i * j <= 12
        }
        assert len(grids) == len(brute) == 35
        pairs = {(g.cols, g.rows) for g in grids}
        assert (1, 2) in pairs and (2, 4) in pairs

    def test_monotone_in_n_max(self):
        for n_max in range(1, 10):
            smaller = {(g.cols, g.rows) for g in enumerate_target_ratios(TileBudget(1, n_max))}
            larger = {(g.cols, g.rows) for g in enumerate_target_ratios(TileBudget(1, n_max + 1))}
            assert smaller <= larger

    def test_invalid_budget(self):
        with pytest.raises(ConfigurationError):
            TileBudget(n_min=5, n_max=2)


class TestSelectClosestRatio:
    def test_exact_match(self):
        grid = select_closest_ratio(ImageDims(800, 600), TileBudget(1, 12, 448))
        assert (grid.cols, grid.rows) == (4, 3)

    def test_square_picks_smallest(self):
        grid = select_closest_ratio(ImageDims(448, 448), TileBudget(1, 12, 448))
        assert (grid.cols, grid.rows) == (1, 1)

    def test_tie_keeps_small_grid_for_small_image(self):
        # 1:2 and 2:4 tie at zero distance; a 100x200 image is far below half
        # the 2x4 resize area, so the smaller grid wins.
        grid = select_closest_ratio(ImageDims(100, 200), TileBudget(1, 12, 448))
        assert (grid.cols, grid.rows) == (1, 2)

    def test_tie_prefers_larger_grid_for_large_image(self):
        grid = select_closest_ratio(ImageDims(1000, 2000), TileBudget(1, 12, 448))
        assert (grid.cols, grid.rows) == (2, 4)

    def test_matches_oracle_randomized(self):
        rng = random.Random(20260823)
        for _ in range(500):
            w = rng.randint(1, 8192)
            h = rng.randint(1, 8192)
            n_max = rng.randint(1, 48)
            n_min = rng.randint(1, n_max)
            grid = select_closest_ratio(ImageDims(w, h), TileBudget(n_min, n_max, 448))
            assert (grid.cols, grid.rows) == oracle_closest_ratio(w, h, n_min, n_max, 448)


class TestPlanLayout:
    def test_wide_image(self):
        layout = plan_layout(ImageDims(800, 600), TileBudget(1, 12, 448), True)
        assert (layout.grid.cols, layout.grid.rows) == (4, 3)
        assert (layout.resized.width, layout.resized.height) == (1792, 1344)
        assert layout.tile_count == 12
        assert layout.has_thumbnail

    def test_single_tile_skips_thumbnail(self):
        layout = plan_layout(ImageDims(448, 448), TileBudget(1, 12, 448), True)
        assert layout.tile_count == 1
        assert not layout.has_thumbnail

    def test_panorama_small_budget(self):
        layout = plan_layout(ImageDims(2000, 500), TileBudget(1, 6, 448), False)
        assert (layout.grid.cols, layout.grid.rows) == (4, 1)
        assert (layout.resized.width, layout.resized.height) == (1792, 448)
        assert layout.tile_count == 4
        assert not layout.has_thumbnail

    def test_bounds_and_multiples_randomized(self):
        rng = random.Random(7)
        for _ in range(300):
            budget = TileBudget(1, rng.randint(1, 48), 448)
            dims = ImageDims(rng.randint(1, 8192), rng.randint(1, 8192))
            layout = plan_layout(dims, budget)
            assert budget.n_min <= layout.tile_count <= budget.n_max
            assert layout.resized.width % budget.tile_side == 0
            assert layout.resized.height % budget.tile_side == 0

    def test_deterministic(self):
        args = (ImageDims(1023, 771), TileBudget(1, 24, 448), True)
        assert plan_layout(*args) == plan_layout(*args)

    def test_upscaling_small_images_allowed(self):
        layout = plan_layout(ImageDims(10, 10), TileBudget(1, 12, 448))
        assert layout.tile_count == 1

    def test_zero_dims_rejected(self):
        with pytest.raises(ConfigurationError):
            ImageDims(0, 100)


class TestAllocateMultiImage:
    def test_even_split(self):
        assert allocate_multi_image(12, 5) == 2
        assert allocate_multi_image(24, 2) == 12

    def test_clamped_to_one(self):
        assert allocate_multi_image(6, 12) == 1

    def test_budget_bound_randomized(self):
        rng = random.Random(11)
        for _ in range(200):
            n = rng.randint(1, 64)
            k = rng.randint(1, 64)
            per = allocate_multi_image(n, k)
            assert per >= 1
            assert per * k <= max(n, k)


class TestPlanVideoFrames:
    def test_many_frames(self):
        frames = plan_video_frames(32, 448)
        assert len(frames) == 32
        assert all(
            f.tile_count == 1
            and not f.has_thumbnail
            and (f.resized.width, f.resized.height) == (448, 448)
            for f in frames
        )

    def test_single_frame(self):
        assert len(plan_video_frames(1)) == 1

    def test_64_frames_token_total(self):
        frames = plan_video_frames(64, 448)
        assert sum(f.tile_count for f in frames) * 256 == 16384
