"""Synthetic dermoscopy-like images with known truth masks.

Generates skin-toned backgrounds with a darker central lesion (disk, blob
with a wavy outline, or ring with a lighter core) plus the usual nuisance
structure of dermoscopy photographs: corner vignetting, freckle-like
distractor spots, soft lesion borders, interior blotches and hair-like
occluder curves. Used by the desk-scale evaluation suite and the tests;
everything is deterministic in the seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pipeline import derive_seed
from .raster import BinaryMask, RasterImage

KINDS = ("disk", "blob", "annulus")


@dataclass(frozen=True)
class SyntheticSample:
    image_id: str
    image: RasterImage
    truth: BinaryMask
    kind: str


def _radius_profile(rng: np.random.Generator, kind: str, base_r: float, theta: np.ndarray):
    if kind == "disk":
        return np.full_like(theta, base_r)
    r = np.full_like(theta, base_r)
    for harmonic in (2, 3, 5):
        amp = rng.uniform(0.03, 0.12) * base_r
        phase = rng.uniform(0, 2 * np.pi)
        r += amp * np.cos(harmonic * theta + phase)
    return r


def _draw_hair(px: np.ndarray, rng: np.random.Generator, color: np.ndarray) -> None:
    h, w = px.shape[:2]
    p0 = rng.uniform([0, 0], [w - 1, h - 1])
    p1 = rng.uniform([0, 0], [w - 1, h - 1])
    ctrl = rng.uniform([0, 0], [w - 1, h - 1])
    t = np.linspace(0.0, 1.0, 4 * max(w, h))[:, None]
    pts = (1 - t) ** 2 * p0 + 2 * (1 - t) * t * ctrl + t**2 * p1
    xs = np.clip(np.round(pts[:, 0]).astype(int), 0, w - 1)
    ys = np.clip(np.round(pts[:, 1]).astype(int), 0, h - 1)
    px[ys, xs] = color
    if rng.random() < 0.5:  # occasionally 2 px wide
        px[np.clip(ys + 1, 0, h - 1), xs] = color


def make_sample(
    image_id: str,
    seed: int,
    width: int = 96,
    height: int = 96,
    kinds=KINDS,
    distractors: bool = True,
) -> SyntheticSample:
    """One synthetic lesion image with its ground-truth mask.

    ``distractors`` adds the confusing nuisance structure (vignette and
    lesion-colored freckle spots); turn it off for the plain
    disk-on-skin scenario.
    """
    rng = np.random.default_rng(seed)
    kind = kinds[int(rng.integers(len(kinds)))]

    skin = np.array(
        [rng.uniform(190, 232), rng.uniform(150, 198), rng.uniform(130, 180)], dtype=np.float64
    )
    # wide melanoma palette: browns through nearly black, occasional red/blue cast
    lesion = np.array(
        [rng.uniform(40, 160), rng.uniform(25, 115), rng.uniform(20, 105)], dtype=np.float64
    )
    if np.all(skin - lesion < 40):  # keep some contrast to the skin
        lesion *= 0.6

    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    gradient = (yy / height - 0.5) * rng.uniform(0, 14)
    noise = rng.normal(0, 3.0, size=(height, width, 3))
    px = skin[None, None, :] + gradient[:, :, None] + noise

    # corner vignette, as dermoscopes produce
    if distractors and rng.random() < 0.35:
        cdist = np.hypot(xx - width / 2, yy - height / 2) / (0.5 * np.hypot(width, height))
        px -= (rng.uniform(12, 35) * np.clip(cdist - 0.72, 0, None) / 0.28)[:, :, None]

    # freckle-like distractor spots with lesion-like colors, off center
    for _ in range(int(rng.integers(0, 3)) if distractors else 0):
        ang = rng.uniform(0, 2 * np.pi)
        rad = rng.uniform(0.33, 0.45) * min(width, height)
        fx, fy = width / 2 + rad * np.cos(ang), height / 2 + rad * np.sin(ang)
        fr = rng.uniform(0.03, 0.07) * min(width, height)
        spot = np.hypot(xx - fx, yy - fy) <= fr
        f_color = lesion + rng.normal(0, 12, size=3)
        px[spot] = f_color[None, :] + noise[spot] * 0.6

    cx = width / 2 + rng.uniform(-0.09, 0.09) * width
    cy = height / 2 + rng.uniform(-0.09, 0.09) * height
    base_r = rng.uniform(0.16, 0.30) * min(width, height)
    theta = np.arctan2(yy - cy, xx - cx)
    dist = np.hypot(xx - cx, yy - cy)
    r_at = _radius_profile(rng, kind, base_r, theta)
    truth = dist <= r_at

    # radial shading inside the lesion plus a soft 2 px border
    inner = lesion * rng.uniform(0.78, 0.95)
    t_r = np.clip(dist / np.maximum(r_at, 1e-9), 0, 1)[:, :, None]
    lesion_px = inner[None, None, :] + (lesion - inner)[None, None, :] * t_r
    soft = np.clip((dist - r_at) / 2.0 + 0.5, 0.0, 1.0)[:, :, None]  # 0 inside, 1 outside
    if kind == "annulus":
        core = dist <= 0.55 * r_at
        mid = 0.5 * (skin + lesion) + rng.uniform(-10, 10, size=3)
        lesion_px = np.where(core[:, :, None], mid[None, None, :], lesion_px)
    blend_zone = dist <= r_at + 2.0
    px = np.where(blend_zone[:, :, None], soft * px + (1 - soft) * (lesion_px + noise * 0.5), px)

    # darker blotches inside the lesion
    for _ in range(int(rng.integers(0, 3))):
        ang = rng.uniform(0, 2 * np.pi)
        rad = rng.uniform(0, 0.5) * base_r
        bx, by = cx + rad * np.cos(ang), cy + rad * np.sin(ang)
        br = rng.uniform(0.15, 0.35) * base_r
        blotch = (np.hypot(xx - bx, yy - by) <= br) & truth
        px[blotch] = (lesion * rng.uniform(0.6, 0.85))[None, :] + noise[blotch] * 0.5

    hair_color = np.array([rng.uniform(25, 60)] * 3) + rng.uniform(-5, 5, size=3)
    for _ in range(int(rng.integers(0, 5))):
        _draw_hair(px, rng, hair_color)

    img = RasterImage(np.clip(px, 0, 255).astype(np.uint8))
    return SyntheticSample(image_id=image_id, image=img, truth=BinaryMask(truth), kind=kind)


def make_dataset(
    n: int,
    root_seed: int = 0,
    width: int = 96,
    height: int = 96,
    kinds=KINDS,
    distractors: bool = True,
) -> list[SyntheticSample]:
    return [
        make_sample(
            f"synthetic_{i:04d}",
            derive_seed(root_seed, f"synthetic_{i:04d}"),
            width,
            height,
            kinds,
            distractors,
        )
        for i in range(n)
    ]
