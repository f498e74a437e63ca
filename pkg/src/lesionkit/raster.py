"""Raster image model: RGB images, scalar planes, binary masks, PNG/JPEG I/O.

All pixel data is held in numpy arrays indexed [row, col] (y first). Public
coordinates are (x, y) pairs with x = column, y = row, matching the usual
image convention. Arrays are marked read-only after construction; every
operation returns new objects.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError


class DecodeError(ValueError):
    """Raised when an encoded image stream cannot be decoded."""


class UnsupportedFormatError(ValueError):
    """Raised for streams that decode to a color model we do not handle."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class RasterImage:
    """8-bit RGB raster, shape (h, w, 3), dtype uint8."""

    pixels: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.pixels, dtype=np.uint8)
        if p.ndim != 3 or p.shape[2] != 3 or p.shape[0] < 1 or p.shape[1] < 1:
            raise ValueError(f"expected (h, w, 3) uint8 array, got shape {p.shape}")
        object.__setattr__(self, "pixels", _readonly(p))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class PlaneMap:
    """Single-channel scalar map, shape (h, w), dtype float64."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError(f"expected (h, w) array, got shape {v.shape}")
        object.__setattr__(self, "values", _readonly(v))

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class BinaryMask:
    """Boolean raster, shape (h, w)."""

    bits: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bits, dtype=bool)
        if b.ndim != 2 or b.shape[0] < 1 or b.shape[1] < 1:
            raise ValueError(f"expected (h, w) bool array, got shape {b.shape}")
        object.__setattr__(self, "bits", _readonly(b))

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    def count(self) -> int:
        return int(self.bits.sum())

    def to_plane(self) -> PlaneMap:
        return PlaneMap(self.bits.astype(np.float64))


def decode_image(data: bytes) -> RasterImage:
    """Decode a PNG or JPEG byte stream into an 8-bit RGB image.

    Palette, grayscale and alpha variants are converted to RGB; anything
    that cannot be expressed as 8-bit RGB raises UnsupportedFormatError.
    """
    stream = io.BytesIO(data)
    try:
        with Image.open(stream) as im:
            if im.format not in ("PNG", "JPEG"):
                raise UnsupportedFormatError(f"unsupported format: {im.format}")
            if im.mode not in ("RGB", "L", "P", "RGBA", "LA", "I", "I;16"):
                raise UnsupportedFormatError(f"unsupported color model: {im.mode}")
            rgb = im.convert("RGB")
            arr = np.asarray(rgb, dtype=np.uint8)
    except UnsupportedFormatError:
        raise
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise DecodeError(
            f"cannot decode image stream (near byte {stream.tell()} of {len(data)}): {exc}"
        ) from exc
    return RasterImage(arr)


def encode_mask_png(mask: BinaryMask) -> bytes:
    """Encode a mask as an 8-bit grayscale PNG with values 0/255."""
    gray = np.where(mask.bits, 255, 0).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(gray, mode="L").save(buf, format="PNG")
    return buf.getvalue()


def decode_mask_png(data: bytes) -> BinaryMask:
    """Decode a PNG into a mask; any value above 127 counts as set."""
    img = decode_image(data)
    gray = img.pixels.mean(axis=2)
    return BinaryMask(gray > 127.0)


def encode_image_png(img: RasterImage) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(img.pixels, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def to_planes(img: RasterImage, gray_mode: str = "mean") -> tuple[PlaneMap, PlaneMap, PlaneMap, PlaneMap]:
    """Split an image into (gray, r, g, b) scalar planes.

    gray_mode "mean" is the unweighted (r+g+b)/3, which keeps the gray plane
    on the same scale as the chromatic planes; "luma" uses Rec.601 weights.
    """
    rgb = img.pixels.astype(np.float64)
    r, g, b = rgb[:, :, 0], rgb[:, :, 1], rgb[:, :, 2]
    if gray_mode == "mean":
        gray = (r + g + b) / 3.0
    elif gray_mode == "luma":
        gray = 0.299 * r + 0.587 * g + 0.114 * b
    else:
        raise ValueError(f"unknown gray_mode: {gray_mode!r}")
    return PlaneMap(gray), PlaneMap(r), PlaneMap(g), PlaneMap(b)


def downsample(img: RasterImage, max_dim: int) -> RasterImage:
    """Shrink so that max(width, height) <= max_dim, preserving aspect ratio.

    Returns the input unchanged when already small enough. Resampling policy
    beyond this single knob is the caller's concern.
    """
    if max_dim < 1:
        raise ValueError("max_dim must be >= 1")
    w, h = img.width, img.height
    longest = max(w, h)
    if longest <= max_dim:
        return img
    scale = max_dim / longest
    nw, nh = max(1, round(w * scale)), max(1, round(h * scale))
    im = Image.fromarray(img.pixels, mode="RGB").resize((nw, nh), Image.BILINEAR)
    return RasterImage(np.asarray(im, dtype=np.uint8))
