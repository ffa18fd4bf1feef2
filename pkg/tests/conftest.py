import json
import random

import numpy as np
import pytest
from PIL import Image


def write_png(path, width, height, seed):
    rng = np.random.default_rng(seed)
    arr = rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8)
    Image.fromarray(arr).save(path, format="PNG")
    return str(path)


def make_corpus(root, n_records, seed=0):
    """Small mixed-modality manifest with on-disk media, for pipeline tests."""
    rng = random.Random(seed)
    media_dir = root / "media"
    media_dir.mkdir(parents=True, exist_ok=True)
    records = []
    for k in range(n_records):
        kind = rng.choice(["text", "text", "single_image", "single_image", "multi_image", "video"])
        rec = {
            "id": f"rec{k:04d}",
            "conversations": [
                {"role": "user", "text": f"question number {k} with token salt {rng.randint(0, 10**6)}"},
                {"role": "assistant", "text": f"answer text {k} " + " ".join(f"w{rng.randint(0, 10**6)}" for _ in range(rng.randint(3, 12)))},
            ],
        }
        if kind == "text":
            rec["modality"] = "text"
            rec["media"] = []
        elif kind == "single_image":
            rec["modality"] = "single_image"
            w, h = rng.choice([(64, 48), (48, 64), (80, 40), (56, 56)])
            rec["media"] = [write_png(media_dir / f"{rec['id']}_0.png", w, h, seed=k)]
        elif kind == "multi_image":
            rec["modality"] = "multi_image"
            rec["media"] = [
                write_png(media_dir / f"{rec['id']}_{i}.png", 40, 40, seed=100 * k + i)
                for i in range(2)
            ]
        else:
            rec["modality"] = "video"
            rec["media"] = [
                write_png(media_dir / f"{rec['id']}_f{i}.png", 32, 32, seed=200 * k + i)
                for i in range(rng.randint(2, 4))
            ]
        records.append(rec)
    manifest = root / "input.jsonl"
    with open(manifest, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
    return manifest, records


SMALL_CONFIG = """\
version: 1
seed: 7
tile:
  n_min: 1
  n_max: 4
  tile_side: 32
  thumbnail: true
token:
  tokens_per_tile: 16
  context_limit: 512
packer:
  l_max: 512
  t_max: 12
  buffer_capacity: 8
augment:
  enabled: true
  quality_min: 75
  quality_max: 100
filter:
  max_line_length: 8192
  min_line_length: 1
  max_zero_run: 256
  max_duplicate_line_fraction: 0.5
  ngram_order: 8
"""


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "pipeline.yaml"
    path.write_text(SMALL_CONFIG)
    return path
