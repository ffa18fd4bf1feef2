"""Pixel-level realization of tile layouts plus JPEG-compression augmentation."""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import AugmentationError, ConfigurationError, DecodeError, LayoutError
from .geometry import ImageDims, TileLayout

logger = logging.getLogger(__name__)

RESIZE_KERNEL = "bilinear"  # recorded in manifests; fixed toolkit-wide
JPEG_SUBSAMPLING = "4:2:0"
_PIL_SUBSAMPLING = 2

_U64 = (1 << 64) - 1


@dataclass(frozen=True)
class RasterImage:
    """Row-major RGB pixel buffer."""

    dims: ImageDims
    data: bytes
    channels: int = 3

    def __post_init__(self) -> None:
        if self.channels != 3:
            raise DecodeError(f"only 3-channel RGB supported, got {self.channels}")
        expected = self.dims.width * self.dims.height * self.channels
        if len(self.data) != expected:
            raise DecodeError(
                f"buffer length {len(self.data)} does not match "
                f"{self.dims.width}x{self.dims.height}x{self.channels}"
            )

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "RasterImage":
        if arr.ndim != 3 or arr.shape[2] != 3 or arr.dtype != np.uint8:
            raise DecodeError(f"expected uint8 HxWx3 array, got {arr.shape} {arr.dtype}")
        h, w = arr.shape[:2]
        return cls(dims=ImageDims(width=w, height=h), data=arr.tobytes())

    def to_array(self) -> np.ndarray:
        return np.frombuffer(self.data, dtype=np.uint8).reshape(
            self.dims.height, self.dims.width, self.channels
        )

    def to_pil(self) -> Image.Image:
        return Image.fromarray(self.to_array(), mode="RGB")


@dataclass(frozen=True)
class AugmentPolicy:
    enabled: bool = True
    quality_min: int = 75
    quality_max: int = 100
    seed: int = 0

    def __post_init__(self) -> None:
        if not (1 <= self.quality_min <= self.quality_max <= 100):
            raise ConfigurationError(
                f"need 1 <= quality_min <= quality_max <= 100, got "
                f"[{self.quality_min}, {self.quality_max}]"
            )


def resize_image(img: RasterImage, target: ImageDims) -> RasterImage:
    """Bilinear resize; identity targets return the input untouched."""
    if target == img.dims:
        return img
    resized = img.to_pil().resize(
        (target.width, target.height), resample=Image.Resampling.BILINEAR
    )
    return RasterImage.from_array(np.asarray(resized))


def split_tiles(img: RasterImage, layout: TileLayout) -> list[RasterImage]:
    """Cut the resized image into the layout's grid, row-major order.

    Tiles are exact non-overlapping crops; pasting them back in the same
    order reproduces the input byte for byte.
    """
    if img.dims != layout.resized:
        raise LayoutError(
            f"image dims {img.dims} do not match layout resize target {layout.resized}"
        )
    side = layout.resized.width // layout.grid.cols
    arr = img.to_array()
    tiles = []
    for row in range(layout.grid.rows):
        for col in range(layout.grid.cols):
            crop = arr[row * side : (row + 1) * side, col * side : (col + 1) * side]
            tiles.append(RasterImage.from_array(np.ascontiguousarray(crop)))
    return tiles


def make_thumbnail(original: RasterImage, tile_side: int) -> RasterImage:
    """Square global-view resize of the ORIGINAL image, not the fitted one."""
    return resize_image(original, ImageDims(width=tile_side, height=tile_side))


def draw_quality(policy: AugmentPolicy, sample_key: int) -> int:
    """Deterministic per-sample quality draw, uniform on [quality_min, quality_max]."""
    rng = np.random.default_rng([policy.seed & _U64, sample_key & _U64])
    return int(rng.integers(policy.quality_min, policy.quality_max + 1))


def jpeg_compress_augment(
    img: RasterImage, policy: AugmentPolicy, sample_key: int
) -> RasterImage:
    """JPEG encode/decode round trip at a per-sample random quality.

    Dimensions are always preserved. Encode/decode failures pass the image
    through unmodified with a warning: this is a robustness augmentation,
    not validation, so a failed draw must not drop the sample.
    """
    if not policy.enabled:
        return img
    quality = draw_quality(policy, sample_key)
    try:
        buf = io.BytesIO()
        img.to_pil().save(
            buf, format="JPEG", quality=quality, subsampling=_PIL_SUBSAMPLING
        )
        buf.seek(0)
        degraded = Image.open(buf).convert("RGB")
    except Exception as exc:  # noqa: BLE001 - pass-through policy
        logger.warning(
            "JPEG augmentation failed for sample_key=%s (%s: %s); passing through",
            sample_key,
            AugmentationError.code,
            exc,
        )
        return img
    return RasterImage.from_array(np.asarray(degraded))


def load_image(path: str | Path) -> RasterImage:
    """Read a PNG/JPEG file into an RGB raster."""
    try:
        with Image.open(path) as im:
            return RasterImage.from_array(np.asarray(im.convert("RGB")))
    except (OSError, ValueError) as exc:
        raise DecodeError(f"cannot read image {path}: {exc}") from exc


def save_image(img: RasterImage, path: str | Path, quality: int | None = None) -> None:
    """Write PNG or JPEG based on the file extension.

    For JPEG the integer quality is passed straight to the encoder.
    """
    path = Path(path)
    suffix = path.suffix.lower()
    pil = img.to_pil()
    if suffix in (".jpg", ".jpeg"):
        pil.save(path, format="JPEG", quality=95 if quality is None else int(quality))
    elif suffix == ".png":
        pil.save(path, format="PNG")
    else:
        raise ConfigurationError(f"unsupported image extension: {path.suffix}")
