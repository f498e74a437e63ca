import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from lesionkit.raster import BinaryMask, RasterImage


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def disk_mask(w: int, h: int, cx: int, cy: int, r: float) -> BinaryMask:
    yy, xx = np.mgrid[0:h, 0:w]
    return BinaryMask((xx - cx) ** 2 + (yy - cy) ** 2 <= r * r)


def annulus_mask(w: int, h: int, cx: int, cy: int, r_in: float, r_out: float) -> BinaryMask:
    yy, xx = np.mgrid[0:h, 0:w]
    d2 = (xx - cx) ** 2 + (yy - cy) ** 2
    return BinaryMask((d2 <= r_out * r_out) & (d2 > r_in * r_in))


def flat_image(w: int, h: int, color) -> RasterImage:
    px = np.zeros((h, w, 3), dtype=np.uint8)
    px[:, :] = color
    return RasterImage(px)


def paint(img: RasterImage, mask: BinaryMask, color) -> RasterImage:
    px = img.pixels.copy()
    px[mask.bits] = color
    return RasterImage(px)
