"""Fusion of the seven candidate types into one lesion mask, plus evaluation.

Each source type contributes a binary map of its best candidates; the maps
are summed into a confidence map, thresholded at a fixed vote count, and
the convex hull is taken when several regions survive. Accuracy against a
truth mask is sensitivity times specificity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .candidates import CandidateRegion, SOURCE_ORDER
from .cluster import (
    NestedPool,
    PrototypeStore,
    interiority_stats,
    pooled_regions,
    rgb_melanomaty,
    score_cra,
    score_hull,
    score_ity,
    K_RANGE,
)
from .raster import BinaryMask, PlaneMap, RasterImage
from .regions import connected_regions, convex_hull_mask, region_stats
from .threshold import ThresholdConfig, threshold_candidates


class UndefinedMetricError(ValueError):
    """Raised when accuracy is requested against an empty or full truth mask."""


@dataclass(frozen=True)
class ClusterConfig:
    """Knobs for the pixel-clustering candidate stage."""

    k_range: tuple = K_RANGE
    min_area_frac: float = 5e-4
    max_area_frac: float = 0.60
    border_penalty: float = 0.5
    border_fraction_limit: float = 0.2
    drop_border_fraction: float = 0.5
    drop_border_area: float = 0.30
    containment: float = 0.95

    def min_area(self, total_pixels: int) -> int:
        return max(1, round(self.min_area_frac * total_pixels))

    def is_background_like(self, stats) -> bool:
        return (
            stats.norm_area >= self.max_area_frac
            or (
                stats.border_fraction > self.drop_border_fraction
                and stats.norm_area > self.drop_border_area
            )
        )


@dataclass(frozen=True)
class EnsembleConfig:
    # vote_threshold 2 keeps the fused mask's sensitivity high enough to
    # beat every single type on the bundled suite; sweep 2..5 when tuning
    vote_threshold: int = 2
    top_n: int = 2

    def __post_init__(self):
        if not 1 <= self.vote_threshold <= 7:
            raise ValueError("vote_threshold must be in [1, 7]")
        if self.top_n < 1:
            raise ValueError("top_n must be >= 1")


@dataclass(frozen=True)
class TypeMap:
    source: str
    mask: BinaryMask


@dataclass(frozen=True)
class ConfidenceMap:
    """Per-pixel count of type maps voting for that pixel, in [0, 7]."""

    map: PlaneMap

    @property
    def values(self) -> np.ndarray:
        return self.map.values


def select_type_map(
    candidates: list[CandidateRegion], source: str, top_n: int, w: int, h: int
) -> TypeMap:
    """Union of the top_n highest-confidence candidates of one source."""
    if top_n < 1:
        raise ValueError("top_n must be >= 1")
    mine = [c for c in candidates if c.source == source]
    mine.sort(key=lambda c: (-c.confidence, c.region.y0, c.region.x0, c.region.area))
    bits = np.zeros((h, w), dtype=bool)
    for c in mine[:top_n]:
        bits |= c.region.to_mask().bits
    return TypeMap(source=source, mask=BinaryMask(bits))


def fuse(maps: list[TypeMap]) -> ConfidenceMap:
    """Pixel-wise sum of the type masks, each voting 0 or 1."""
    if not maps:
        raise ValueError("fuse needs at least one type map")
    shape = maps[0].mask.bits.shape
    for m in maps[1:]:
        if m.mask.bits.shape != shape:
            raise ValueError("type maps must share dimensions")
    total = np.zeros(shape, dtype=np.float64)
    for m in maps:
        total += m.mask.bits
    return ConfidenceMap(map=PlaneMap(total))


def finalize(cm: ConfidenceMap, vote_threshold: int) -> BinaryMask:
    """Threshold the confidence map and merge survivors into one region.

    Falls back to a single-vote threshold when nothing reaches the vote
    threshold, so an empty answer only occurs for an all-zero map. When
    two or more regions survive, the convex hull of their union replaces
    them.
    """
    if not 1 <= vote_threshold <= 7:
        raise ValueError("vote_threshold must be in [1, 7]")
    v = cm.values
    h, w = v.shape
    bits = v >= vote_threshold
    if not bits.any():
        bits = v >= 1
    if not bits.any():
        return BinaryMask(np.zeros_like(bits))
    regions = connected_regions(BinaryMask(bits), min_area=1)
    if len(regions) >= 2:
        return convex_hull_mask(regions, w, h)
    return BinaryMask(bits)


def evaluate_mask(pred: BinaryMask, truth: BinaryMask) -> float:
    """Segmentation accuracy: sensitivity times specificity."""
    if pred.bits.shape != truth.bits.shape:
        raise ValueError("prediction and truth dimensions differ")
    t = truth.bits
    if not t.any() or t.all():
        raise UndefinedMetricError("truth mask must be non-empty and not cover the frame")
    p = pred.bits
    tp = float(np.count_nonzero(p & t))
    fn = float(np.count_nonzero(~p & t))
    fp = float(np.count_nonzero(p & ~t))
    tn = float(np.count_nonzero(~p & ~t))
    sensitivity = tp / (tp + fn)
    specificity = tn / (tn + fp)
    return sensitivity * specificity


def cluster_candidates(
    img: RasterImage,
    store: PrototypeStore | None = None,
    cfg: ClusterConfig = ClusterConfig(),
    seed: int = 0,
    pool: list | None = None,
) -> list[CandidateRegion]:
    """Score the pooled cluster regions of every k with the three measures.

    The color-based measures (kmeans-cra, kmeans-hull) need a prototype
    store; without one only interiority candidates are produced. A
    precomputed region pool avoids re-clustering when the caller already
    has one.
    """
    w, h = img.width, img.height
    if pool is None:
        pool = pooled_regions(img, cfg.k_range, cfg.min_area(w * h), seed=seed)

    scored = []
    for rg in pool:
        stats = region_stats(rg, w, h)
        if cfg.is_background_like(stats):
            continue
        penalty = cfg.border_penalty if stats.border_fraction > cfg.border_fraction_limit else 1.0
        s_rgb = rgb_melanomaty(rg, img, store) if store is not None and len(store) else None
        scored.append((rg, stats, penalty, s_rgb))

    pool = NestedPool([(rg, sr) for rg, _, _, sr in scored if sr is not None])
    out: list[CandidateRegion] = []
    for rg, stats, penalty, s_rgb in scored:
        ity = interiority_stats(rg)
        out.append(
            CandidateRegion(
                region=rg,
                source="kmeans-ity",
                confidence=penalty * score_ity(stats, ity),
                aux={"solidity": ity.solidity, "ringness": ity.ringness},
            )
        )
        if s_rgb is None:
            continue
        out.append(
            CandidateRegion(
                region=rg,
                source="kmeans-cra",
                confidence=penalty * score_cra(stats, s_rgb),
                aux={"s_rgb": s_rgb},
            )
        )
        out.append(
            CandidateRegion(
                region=rg,
                source="kmeans-hull",
                confidence=penalty * score_hull(rg, stats, pool, cfg.containment),
                aux={"s_rgb": s_rgb},
            )
        )
    return out


@dataclass(frozen=True)
class SegmentationResult:
    """Everything the per-image pipeline produces, keyed by source order."""

    candidates: list
    type_maps: dict  # source -> TypeMap
    confidence_map: ConfidenceMap
    final_mask: BinaryMask

    def maps_in_order(self) -> list[TypeMap]:
        return [self.type_maps[s] for s in SOURCE_ORDER]


def segment_image(
    img: RasterImage,
    store: PrototypeStore | None = None,
    threshold_cfg: ThresholdConfig = ThresholdConfig(),
    cluster_cfg: ClusterConfig = ClusterConfig(),
    ensemble_cfg: EnsembleConfig = EnsembleConfig(),
    seed: int = 0,
    pool: list | None = None,
) -> SegmentationResult:
    """Run all seven candidate sources on one image and fuse them."""
    cands = threshold_candidates(img, threshold_cfg)
    cands += cluster_candidates(img, store, cluster_cfg, seed=seed, pool=pool)
    maps = {
        s: select_type_map(cands, s, ensemble_cfg.top_n, img.width, img.height)
        for s in SOURCE_ORDER
    }
    cm = fuse([maps[s] for s in SOURCE_ORDER])
    final = finalize(cm, ensemble_cfg.vote_threshold)
    return SegmentationResult(candidates=cands, type_maps=maps, confidence_map=cm, final_mask=final)


@dataclass
class SegmentationReport:
    """Dataset-level accuracy summary mirroring the per-type analysis."""

    per_type: dict  # source -> mean accuracy
    ensemble_accuracy: float
    max_per_image_accuracy: float
    dominating_counts: dict  # source -> images where it had the max accuracy
    per_image: list = field(default_factory=list)  # rows of per-image numbers
    errors: list = field(default_factory=list)  # (image_id, message)

    def to_dict(self) -> dict:
        return {
            "per_type": {s: self.per_type[s] for s in SOURCE_ORDER},
            "ensemble": self.ensemble_accuracy,
            "max_per_image": self.max_per_image_accuracy,
            "dominating_counts": {s: self.dominating_counts[s] for s in SOURCE_ORDER},
            "images": self.per_image,
            "errors": [{"image": i, "message": m} for i, m in self.errors],
        }


def segmentation_report(
    dataset: list,
    store: PrototypeStore | None = None,
    threshold_cfg: ThresholdConfig = ThresholdConfig(),
    cluster_cfg: ClusterConfig = ClusterConfig(),
    ensemble_cfg: EnsembleConfig = EnsembleConfig(),
    seed: int = 0,
) -> SegmentationReport:
    """Per-type, ensemble and best-type-per-image accuracy over a dataset.

    ``dataset`` holds (image_id, RasterImage, truth BinaryMask) triples.
    A failing image is recorded under errors and skipped; the run continues.
    """
    if not dataset:
        raise ValueError("dataset must not be empty")
    type_acc: dict = {s: [] for s in SOURCE_ORDER}
    ens_acc: list = []
    max_acc: list = []
    dom: dict = {s: 0 for s in SOURCE_ORDER}
    rows = []
    errors = []
    for image_id, img, truth in dataset:
        try:
            res = segment_image(img, store, threshold_cfg, cluster_cfg, ensemble_cfg, seed=seed)
            accs = {s: evaluate_mask(res.type_maps[s].mask, truth) for s in SOURCE_ORDER}
            e = evaluate_mask(res.final_mask, truth)
        except Exception as exc:  # isolate per-image failures
            errors.append((image_id, str(exc)))
            continue
        for s in SOURCE_ORDER:
            type_acc[s].append(accs[s])
        ens_acc.append(e)
        max_acc.append(max(e, max(accs.values())))
        best = max(SOURCE_ORDER, key=lambda s: (accs[s], -SOURCE_ORDER.index(s)))
        dom[best] += 1
        rows.append({"image": image_id, "ensemble": e, **{s: accs[s] for s in SOURCE_ORDER}})
    if not ens_acc:
        raise RuntimeError(f"every image failed; first error: {errors[0]}")
    return SegmentationReport(
        per_type={s: float(np.mean(type_acc[s])) for s in SOURCE_ORDER},
        ensemble_accuracy=float(np.mean(ens_acc)),
        max_per_image_accuracy=float(np.mean(max_acc)),
        dominating_counts=dom,
        per_image=rows,
        errors=errors,
    )
