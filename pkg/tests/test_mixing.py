import math
from collections import Counter

import pytest

from tilepack import (
    ConfigurationError,
    DatasetConfig,
    Modality,
    build_epoch,
    expand_repeats,
    mixture_stats,
)


def ds(name="d", modality=Modality.TEXT, r=1.0, **kw):
    return DatasetConfig(name=name, modality=modality, repeat_factor=r, **kw)


class TestValidateConfig:
    def test_upper_bound_closed(self):
        assert ds(r=4.0).repeat_factor == 4.0

    def test_zero_rejected(self):
        with pytest.raises(ConfigurationError):
            ds(r=0.0)

    def test_above_four_rejected(self):
        with pytest.raises(ConfigurationError):
            ds(r=4.01)

    def test_video_augmentation_rejected(self):
        with pytest.raises(ConfigurationError):
            DatasetConfig(name="v", modality=Modality.VIDEO, augmentation=True, n_max=1)

    def test_video_n_max_must_be_one(self):
        with pytest.raises(ConfigurationError):
            DatasetConfig(name="v", modality=Modality.VIDEO, n_max=2)

    def test_video_defaults(self):
        cfg = DatasetConfig(name="v", modality=Modality.VIDEO, n_max=1)
        assert cfg.frames == (8, 32)


class TestExpandRepeats:
    def test_integer_repeat(self):
        out = expand_repeats(ds(r=2.0), 10, seed=1)
        assert len(out) == 20
        assert Counter(out) == Counter({i: 2 for i in range(10)})

    def test_identity(self):
        assert sorted(expand_repeats(ds(r=1.0), 50, seed=3)) == list(range(50))

    def test_binomial_bound_half(self):
        # np = 5000, sigma = 50; 3-sigma band
        out = expand_repeats(ds(r=0.5), 10000, seed=17)
        assert abs(len(out) - 5000) <= 150

    def test_deterministic_per_seed(self):
        assert expand_repeats(ds(r=0.7), 1000, 5) == expand_repeats(ds(r=0.7), 1000, 5)

    def test_expected_count_across_seeds(self):
        n, r = 2000, 2.3
        sigma = math.sqrt(n * 0.3 * 0.7)
        for seed in range(10):
            count = len(expand_repeats(ds(r=r), n, seed))
            assert abs(count - r * n) <= 4 * sigma


class TestBuildEpoch:
    def test_plain_concatenation(self):
        configs = [ds("a"), ds("b")]
        plan = build_epoch(configs, {"a": 10, "b": 20}, seed=1)
        assert len(plan) == 30
        per = Counter(d.dataset for d in plan.draws)
        assert per == {"a": 10, "b": 20}
        assert Counter((d.dataset, d.index) for d in plan.draws) == Counter(
            [("a", i) for i in range(10)] + [("b", i) for i in range(20)]
        )

    def test_determinism(self):
        configs = [ds("a", r=1.5), ds("v", Modality.VIDEO, 0.8, n_max=1)]
        sizes = {"a": 100, "v": 40}
        assert build_epoch(configs, sizes, 9) == build_epoch(configs, sizes, 9)

    def test_seed_changes_plan(self):
        configs = [ds("a")]
        assert build_epoch(configs, {"a": 100}, 1) != build_epoch(configs, {"a": 100}, 2)

    def test_video_frame_counts(self):
        cfg = DatasetConfig(
            name="v", modality=Modality.VIDEO, n_max=1, frame_range=(8, 32)
        )
        plan = build_epoch([cfg], {"v": 10000}, seed=4)
        frames = [d.frames for d in plan.draws]
        assert min(frames) >= 8 and max(frames) <= 32
        assert abs(sum(frames) / len(frames) - 20) < 0.5

    def test_non_video_draws_have_no_frames(self):
        plan = build_epoch([ds("a")], {"a": 5}, seed=0)
        assert all(d.frames is None for d in plan.draws)


class TestMixtureStats:
    def test_single_dataset(self):
        report = mixture_stats(
            [{"modality": "single_image", "samples": 10, "tokens": 1000}]
        )
        assert report["modalities"]["single_image"]["token_pct"] == 100.0
        assert report["modalities"]["single_image"]["sample_pct"] == 100.0

    def test_reference_token_split(self):
        shares = {
            "single_image": 45.92,
            "multi_image": 9.37,
            "video": 39.79,
            "text": 4.92,
        }
        entries = [
            {"modality": m, "samples": 1, "tokens": round(share * 10**7)}
            for m, share in shares.items()
        ]
        report = mixture_stats(entries)
        for m, share in shares.items():
            assert abs(report["modalities"][m]["token_pct"] - share) < 0.01
        total_pct = sum(v["token_pct"] for v in report["modalities"].values())
        assert abs(total_pct - 100.0) < 0.1

    def test_empty_mixture(self):
        report = mixture_stats([])
        assert report["total_samples"] == 0
        assert all(v["token_pct"] == 0.0 for v in report["modalities"].values())
