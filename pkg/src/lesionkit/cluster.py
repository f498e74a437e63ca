"""Candidate regions from K-Means clustering of pixels in RGB space.

Pixels are clustered for every k in a small range (2..8 by default) and the
connected components of each cluster label become candidate regions. Three
confidence scorings pick lesion-like regions: color resemblance to learned
melanoma prototypes (s_RGB), interiority (solid, centrally compact, not a
ring), and the nested-hull preference for regions that contain high-s_RGB
subregions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .raster import RasterImage
from .regions import Region, RegionStats, connected_regions
from .raster import BinaryMask

K_RANGE = (2, 3, 4, 5, 6, 7, 8)

_CONVERGE_SHIFT = 0.5  # RGB units of center movement considered converged
_MAX_ITER = 100


class EmptyStoreError(ValueError):
    """Raised when prototype matching is attempted with no prototypes."""


@dataclass(frozen=True)
class ClusterLabeling:
    """Result of one K-Means run: per-pixel labels plus center colors."""

    k: int
    labels: np.ndarray  # (h, w) int, each in [0, k)
    centers: np.ndarray  # (k, 3) float
    wcss_history: tuple  # within-cluster sum of squares per iteration

    @property
    def empty_clusters(self) -> tuple:
        present = np.bincount(self.labels.ravel(), minlength=self.k)
        return tuple(int(i) for i in np.nonzero(present == 0)[0])


def _subsample(flat: np.ndarray, rng: np.random.Generator, target: int = 262144) -> np.ndarray:
    if len(flat) <= target:
        return flat
    stride = int(math.ceil(len(flat) / target))
    return flat[::stride]


def kmeans_rgb(img: RasterImage, k: int, seed: int = 0) -> ClusterLabeling:
    """Lloyd's algorithm over pixel RGB values, deterministic for a seed.

    Seeding picks a random first center, then repeatedly the pixel farthest
    from its nearest chosen center (ties to the lowest pixel index). Runs to
    convergence (< 0.5 RGB units center movement) or 100 iterations. Images
    above 512x512 are clustered on a uniform pixel subsample and labels are
    assigned to all pixels from the final centers.
    """
    if not 2 <= k <= 8:
        raise ValueError("k must be in [2, 8]")
    h, w = img.height, img.width
    flat_all = img.pixels.reshape(-1, 3).astype(np.float64)
    rng = np.random.default_rng(seed)
    flat = _subsample(flat_all, rng) if h * w > 512 * 512 else flat_all

    centers = np.empty((k, 3), dtype=np.float64)
    centers[0] = flat[int(rng.integers(len(flat)))]
    d2 = np.sum((flat - centers[0]) ** 2, axis=1)
    for i in range(1, k):
        centers[i] = flat[int(np.argmax(d2))]
        d2 = np.minimum(d2, np.sum((flat - centers[i]) ** 2, axis=1))

    wcss_history = []
    labels = None
    for _ in range(_MAX_ITER):
        dists = np.sum((flat[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        labels = np.argmin(dists, axis=1)
        wcss_history.append(float(dists[np.arange(len(flat)), labels].sum()))
        new_centers = centers.copy()
        for j in range(k):
            members = flat[labels == j]
            if len(members):
                new_centers[j] = members.mean(axis=0)
        shift = float(np.max(np.linalg.norm(new_centers - centers, axis=1)))
        centers = new_centers
        if shift < _CONVERGE_SHIFT:
            break

    full_d = np.sum((flat_all[:, None, :] - centers[None, :, :]) ** 2, axis=2)
    full_labels = np.argmin(full_d, axis=1).reshape(h, w)
    return ClusterLabeling(k=k, labels=full_labels, centers=centers, wcss_history=tuple(wcss_history))


def labeling_regions(cl: ClusterLabeling, min_area: int = 1) -> list[Region]:
    """Connected components of every cluster label, pooled into one list."""
    out: list[Region] = []
    for j in range(cl.k):
        mask = BinaryMask(cl.labels == j)
        if mask.bits.any():
            out.extend(connected_regions(mask, min_area=min_area))
    return out


def pooled_regions(img: RasterImage, k_range=K_RANGE, min_area: int = 1, seed: int = 0) -> list[Region]:
    """Cluster regions pooled over every k in the range."""
    pool: list[Region] = []
    for k in k_range:
        pool.extend(labeling_regions(kmeans_rgb(img, k, seed=seed), min_area=min_area))
    return pool


def region_mean_rgb(rg: Region, img: RasterImage) -> np.ndarray:
    px = rg.pixels
    return img.pixels[px[:, 1], px[:, 0]].astype(np.float64).mean(axis=0)


@dataclass
class PrototypeStore:
    """Learned melanoma-RGB prototype colors with a match bandwidth.

    Set semantics: prototypes are deduplicated and kept sorted, so stores
    learned from reordered training data serialize identically.
    """

    sigma_rgb: float = 30.0
    prototypes: list = field(default_factory=list)

    def __post_init__(self):
        if self.sigma_rgb <= 0:
            raise ValueError("sigma_rgb must be > 0")
        self.prototypes = sorted({tuple(round(float(c), 4) for c in p) for p in self.prototypes})

    def add(self, rgb) -> None:
        p = tuple(round(float(c), 4) for c in rgb)
        if any(not 0 <= c <= 255 for c in p):
            raise ValueError(f"prototype out of RGB range: {p}")
        if p not in self.prototypes:
            self.prototypes.append(p)
            self.prototypes.sort()

    def __len__(self) -> int:
        return len(self.prototypes)

    def nearest_distance(self, rgb) -> float:
        if not self.prototypes:
            raise EmptyStoreError("prototype store is empty")
        arr = np.asarray(self.prototypes, dtype=np.float64)
        return float(np.sqrt(np.min(np.sum((arr - np.asarray(rgb, dtype=np.float64)) ** 2, axis=1))))

    def to_json(self) -> str:
        return json.dumps(
            {"sigma_rgb": self.sigma_rgb, "prototypes": [list(p) for p in self.prototypes]},
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "PrototypeStore":
        data = json.loads(text)
        return cls(sigma_rgb=float(data["sigma_rgb"]), prototypes=[tuple(p) for p in data["prototypes"]])


def learn_prototypes(
    training: list[tuple[RasterImage, BinaryMask]],
    sigma_rgb: float = 30.0,
    min_area: int = 9,
    seed: int = 0,
    k_range=K_RANGE,
) -> PrototypeStore:
    """Harvest mean region colors from regions fully inside the truth masks."""
    if not training:
        raise ValueError("training list must not be empty")
    store = PrototypeStore(sigma_rgb=sigma_rgb)
    for img, truth in training:
        if not truth.bits.any():
            raise ValueError("truth mask must not be empty")
        for k in k_range:
            cl = kmeans_rgb(img, k, seed=seed)
            for rg in labeling_regions(cl, min_area=min_area):
                px = rg.pixels
                if truth.bits[px[:, 1], px[:, 0]].all():
                    store.add(region_mean_rgb(rg, img))
    if not len(store):
        raise EmptyStoreError("no cluster region fell inside any truth mask")
    return store


def rgb_melanomaty(rg: Region, img: RasterImage, store: PrototypeStore) -> float:
    """Degree of color match to the nearest prototype: exp(-d^2 / 2 sigma^2)."""
    d = store.nearest_distance(region_mean_rgb(rg, img))
    return math.exp(-(d * d) / (2.0 * store.sigma_rgb**2))


@dataclass(frozen=True)
class InteriorityStats:
    """Factors describing how much a region looks like a lesion interior."""

    solidity: float
    central_compactness: float  # pixel density near the centroid vs. a solid disk
    hole_fraction: float
    ringness: float  # 1 - coverage of the region's own hull core

    def __post_init__(self):
        for name in ("solidity", "central_compactness", "hole_fraction", "ringness"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} out of [0,1]: {v}")


def interiority_stats(rg: Region) -> InteriorityStats:
    """Compute the interiority factors from region geometry alone.

    central_compactness counts region pixels within half the equivalent
    radius of the centroid, normalized by the count a solid disk would
    produce there (a/4), so a filled disk scores 1 and a thin ring 0.
    ringness looks at the core of the region's convex hull: the fraction of
    hull pixels within half the hull's equivalent radius that are NOT
    region pixels.
    """
    a = rg.area
    cx, cy = rg.centroid
    px = rg.pixels
    r_eq = math.sqrt(a / math.pi)
    d2 = (px[:, 0] - cx) ** 2 + (px[:, 1] - cy) ** 2
    inside = int((d2 <= (r_eq / 2.0) ** 2).sum())
    central = min(1.0, inside / max(a / 4.0, 1.0))

    hull = rg.hull_local_mask
    ys, xs = np.nonzero(hull)
    hx = xs + rg.x0
    hy = ys + rg.y0
    hull_area = len(xs)
    hcx, hcy = float(hx.mean()), float(hy.mean())
    hr_eq = math.sqrt(hull_area / math.pi)
    core = (hx - hcx) ** 2 + (hy - hcy) ** 2 <= (hr_eq / 2.0) ** 2
    n_core = int(core.sum())
    if n_core == 0:
        ringness = 0.0
    else:
        covered = int((core & rg.local_mask[ys, xs]).sum())
        ringness = 1.0 - covered / n_core

    hole_frac = rg.hole_area / (a + rg.hole_area) if rg.hole_area else 0.0
    return InteriorityStats(
        solidity=min(1.0, rg.solidity),
        central_compactness=central,
        hole_fraction=hole_frac,
        ringness=min(1.0, max(0.0, ringness)),
    )


def score_cra(stats: RegionStats, s_rgb: float) -> float:
    """Color-resemblance confidence: L = c * a * s_RGB."""
    return stats.centrality * stats.norm_area * s_rgb


def score_ity(stats: RegionStats, ity: InteriorityStats) -> float:
    """Interiority confidence: basic L times the interior factors."""
    return (
        stats.centrality
        * stats.norm_area
        * ity.solidity
        * ity.central_compactness
        * (1.0 - ity.ringness)
    )


class NestedPool:
    """Precomputed bbox/area/s_RGB arrays over candidate subregions.

    Lets score_hull reject non-overlapping pairs with one vectorized pass
    instead of a Python loop per region pair.
    """

    def __init__(self, pairs: list[tuple[Region, float]]):
        self.regions = [rg for rg, _ in pairs]
        self.s_rgb = np.array([s for _, s in pairs], dtype=np.float64)
        bboxes = np.array([rg.bbox for rg in self.regions], dtype=np.int64).reshape(-1, 4)
        self.x0 = bboxes[:, 0] if len(pairs) else np.empty(0, dtype=np.int64)
        self.y0 = bboxes[:, 1] if len(pairs) else np.empty(0, dtype=np.int64)
        self.x1 = self.x0 + (bboxes[:, 2] if len(pairs) else 0)
        self.y1 = self.y0 + (bboxes[:, 3] if len(pairs) else 0)
        self.areas = np.array([rg.area for rg in self.regions], dtype=np.float64)


def score_hull(
    rg: Region,
    stats: RegionStats,
    nested,
    containment: float = 0.95,
) -> float:
    """Nested-color confidence: rewards containing high-s_RGB subregions.

    A nested region counts when at least ``containment`` of its pixels lie
    inside ``rg``; its contribution is s_RGB weighted by its area relative
    to ``rg``. ``nested`` is a list of (Region, s_RGB) pairs or a NestedPool.
    """
    pool = nested if isinstance(nested, NestedPool) else NestedPool(list(nested))
    if not pool.regions:
        return 0.0
    lh, lw = rg.local_mask.shape
    # bbox prefilter: bounding-box overlap bounds the true pixel overlap
    ox = np.minimum(pool.x1, rg.x0 + lw) - np.maximum(pool.x0, rg.x0)
    oy = np.minimum(pool.y1, rg.y0 + lh) - np.maximum(pool.y0, rg.y0)
    viable = (
        (ox > 0) & (oy > 0) & (ox * oy >= containment * pool.areas) & (pool.areas < rg.area)
    )
    total = 0.0
    for i in np.nonzero(viable)[0]:
        sub = pool.regions[i]
        if sub is rg:
            continue
        px = sub.pixels
        xs = px[:, 0] - rg.x0
        ys = px[:, 1] - rg.y0
        ok = (xs >= 0) & (xs < lw) & (ys >= 0) & (ys < lh)
        inside = int(rg.local_mask[ys[ok], xs[ok]].sum()) if ok.any() else 0
        if inside / sub.area >= containment:
            total += float(pool.s_rgb[i]) * (sub.area / rg.area)
    return stats.centrality * stats.norm_area * total
