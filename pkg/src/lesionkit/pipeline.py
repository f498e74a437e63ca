"""Per-image orchestration: one clustering pass feeds both the candidate
scoring and the structural descriptor extraction."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np


def derive_seed(root_seed: int, image_id: str) -> int:
    """Stable per-image seed so results do not depend on batch composition."""
    digest = hashlib.sha256(f"{root_seed}:{image_id}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


from .cluster import PrototypeStore, pooled_regions
from .ensemble import (
    ClusterConfig,
    EnsembleConfig,
    SegmentationResult,
    segment_image,
)
from .features import DescriptorBundle
from .raster import RasterImage, to_planes
from .regions import DegenerateRegionError, Region, connected_regions
from .shapedesc import (
    boundary_descriptor,
    distribution_descriptor,
    radial_signature,
    sym_axis_descriptors,
)
from .threshold import ThresholdConfig
from .topology import (
    _ImageContext,
    describe_all_contours,
    dog_regions,
    extract_contours,
    find_bundles,
    find_clots,
    scale_pair,
)


@dataclass(frozen=True)
class FeatureConfig:
    """Knobs for descriptor extraction and classification."""

    p_components: int = 0  # 0 = automatic (min(64, n - classes))
    folds: int = 5
    desc_max_regions: int = 40  # largest cluster regions to describe
    sym_min_area: int = 25

    @property
    def p_or_none(self):
        return self.p_components if self.p_components > 0 else None


def _appearance_row(rg: Region, ctx: _ImageContext) -> np.ndarray:
    px = rg.pixels
    xs, ys = px[:, 0], px[:, 1]
    r = ctx.r[ys, xs]
    g = ctx.g[ys, xs]
    b = ctx.b[ys, xs]
    gray = ctx.gray[ys, xs]
    return np.array(
        [
            r.mean(), g.mean(), b.mean(),
            r.std(), g.std(), b.std(),
            gray.mean(), gray.std(),
            ctx.local_range[ys, xs].mean(),
        ]
    )


def _region_rows(rg: Region, gray_plane, ctx: _ImageContext, w: int, h: int, sym_min_area: int):
    """(boundary, distribution, appearance, short, long, fork, peak) rows."""
    try:
        brow = [boundary_descriptor(radial_signature(rg)).as_row()]
    except DegenerateRegionError:
        brow = []
    drow = [distribution_descriptor(rg, w, h).as_row()]
    arow = [_appearance_row(rg, ctx)]
    sym = sym_axis_descriptors(rg, gray=gray_plane, min_area=sym_min_area)
    return brow, drow, arow, list(sym.short), list(sym.long), list(sym.fork), list(sym.peak)


def extract_bundle(
    img: RasterImage,
    store: PrototypeStore | None = None,
    threshold_cfg: ThresholdConfig = ThresholdConfig(),
    cluster_cfg: ClusterConfig = ClusterConfig(),
    ensemble_cfg: EnsembleConfig = EnsembleConfig(),
    feature_cfg: FeatureConfig = FeatureConfig(),
    seed: int = 0,
) -> tuple[DescriptorBundle, SegmentationResult]:
    """All descriptor lists for one image plus its segmentation result."""
    w, h = img.width, img.height
    gray = to_planes(img)[0]
    ctx = _ImageContext(img)

    pool = pooled_regions(img, cluster_cfg.k_range, cluster_cfg.min_area(w * h), seed=seed)
    seg = segment_image(img, store, threshold_cfg, cluster_cfg, ensemble_cfg, seed=seed, pool=pool)

    lists: dict = {k: [] for k in (
        "region-boundary", "region-distribution", "region-appearance",
        "region-sym-short", "region-sym-long", "region-sym-fork", "region-sym-peak",
    )}
    described = sorted(pool, key=lambda r: -r.area)[: feature_cfg.desc_max_regions]
    for rg in described:
        brow, drow, arow, s_short, s_long, s_fork, s_peak = _region_rows(
            rg, gray, ctx, w, h, feature_cfg.sym_min_area
        )
        lists["region-boundary"] += brow
        lists["region-distribution"] += drow
        lists["region-appearance"] += arow
        lists["region-sym-short"] += s_short
        lists["region-sym-long"] += s_long
        lists["region-sym-fork"] += s_fork
        lists["region-sym-peak"] += s_peak

    sp = scale_pair(gray)
    contours = extract_contours(sp)
    segments = describe_all_contours(contours, img)
    for kind in ("ridge", "river", "edge"):
        for scale in (1, 2):
            rows = [s.attributes for s in segments if s.kind == kind and s.scale == scale]
            lists[f"contour-{kind}-s{scale}"] = rows
    lists["group-clot"] = [g.attributes for g in find_clots(segments)]
    bundles = find_bundles(segments)
    lists["group-bundle-tight"] = [g.attributes for g in bundles if g.strategy == "tight"]
    lists["group-bundle-loose"] = [g.attributes for g in bundles if g.strategy == "loose"]

    e1 = [c for c in contours if c.kind == "edge" and c.scale == 1]
    e2 = [c for c in contours if c.kind == "edge" and c.scale == 2]
    for key in ("dog", "edgeband"):
        for suffix in ("distribution", "sym-short", "sym-long", "sym-fork", "sym-peak"):
            lists[f"{key}-{suffix}"] = []
    for dr in dog_regions(sp, e1, e2):
        key = "dog" if dr.source == "dog" else "edgeband"
        lists[f"{key}-distribution"].append(dr.distribution.as_row())
        lists[f"{key}-sym-short"] += list(dr.sym_axes.short)
        lists[f"{key}-sym-long"] += list(dr.sym_axes.long)
        lists[f"{key}-sym-fork"] += list(dr.sym_axes.fork)
        lists[f"{key}-sym-peak"] += list(dr.sym_axes.peak)

    for key in (
        "lesion-boundary", "lesion-distribution",
        "lesion-sym-short", "lesion-sym-long", "lesion-sym-fork", "lesion-sym-peak",
    ):
        lists[key] = []
    lesion_regions = (
        connected_regions(seg.final_mask, min_area=1) if seg.final_mask.bits.any() else []
    )
    if lesion_regions:
        lesion = max(lesion_regions, key=lambda r: r.area)
        brow, drow, _, s_short, s_long, s_fork, s_peak = _region_rows(
            lesion, gray, ctx, w, h, feature_cfg.sym_min_area
        )
        lists["lesion-boundary"] = brow
        lists["lesion-distribution"] = drow
        lists["lesion-sym-short"] = s_short
        lists["lesion-sym-long"] = s_long
        lists["lesion-sym-fork"] = s_fork
        lists["lesion-sym-peak"] = s_peak

    return DescriptorBundle(lists=lists), seg
