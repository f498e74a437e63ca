"""Candidate regions from multi-level global thresholding of intensity planes.

For each of the four planes (gray + three chromatic), the intensity
histogram is built, its major peaks are found, and a band threshold around
each peak produces a binary map whose connected components become candidate
regions scored with the basic lesion confidence L = centrality * area.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal

from .candidates import CandidateRegion, PLANE_SOURCES
from .raster import BinaryMask, PlaneMap, RasterImage, to_planes
from .regions import connected_regions, region_stats


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray  # bin_count + 1, strictly increasing
    counts: np.ndarray  # bin_count, non-negative ints

    @property
    def bin_count(self) -> int:
        return len(self.counts)

    @property
    def bin_width(self) -> float:
        return float(self.edges[1] - self.edges[0])


@dataclass(frozen=True)
class Peak:
    center: float  # intensity value
    width: float  # intensity span at half prominence
    prominence: float  # count units

    def __post_init__(self):
        if self.width <= 0:
            raise ValueError("peak width must be > 0")


@dataclass(frozen=True)
class ThresholdConfig:
    """Knobs for the per-plane thresholding stage.

    min_area_frac drops speckle components; max_area_frac drops components
    that swallow essentially the whole frame (a lesion never does).
    border_penalty multiplies the confidence of candidates where more than
    border_fraction_limit of the boundary lies on the image border.
    """

    bins: int = 64
    smoothing: int = 3
    min_prominence_frac: float = 0.05
    min_confidence: float = 1e-5
    min_area_frac: float = 5e-4
    max_area_frac: float = 0.60
    border_penalty: float = 0.5
    border_fraction_limit: float = 0.2
    drop_border_fraction: float = 0.5
    drop_border_area: float = 0.30
    darkness_weight: float = 1.0
    gray_mode: str = "mean"

    def min_area(self, total_pixels: int) -> int:
        return max(1, round(self.min_area_frac * total_pixels))

    def is_background_like(self, stats) -> bool:
        """Large candidates hugging the frame border are surrounding skin,
        not a photographed lesion."""
        return (
            stats.norm_area >= self.max_area_frac
            or (
                stats.border_fraction > self.drop_border_fraction
                and stats.norm_area > self.drop_border_area
            )
        )


def build_histogram(plane: PlaneMap, bins: int) -> Histogram:
    """Equal-width histogram spanning [min, max] of the plane values."""
    if bins < 2:
        raise ValueError("bins must be >= 2")
    v = plane.values
    lo, hi = float(v.min()), float(v.max())
    if hi - lo < 1e-12:  # constant plane: one populated bin in a synthetic span
        lo, hi = lo - 0.5, hi + 0.5
    edges = np.linspace(lo, hi, bins + 1)
    counts, _ = np.histogram(v, bins=edges)
    return Histogram(edges=edges, counts=counts.astype(np.int64))


def find_peaks(h: Histogram, smoothing: int = 3, min_prominence_frac: float = 0.05) -> list[Peak]:
    """Major histogram peaks with their width at half prominence.

    Counts are moving-average smoothed, then local maxima whose prominence
    reaches min_prominence_frac of the maximum smoothed count are kept.
    Widths are measured at half prominence and clipped at the neighboring
    valleys; peaks at the histogram ends are detectable. Result is sorted
    by prominence, largest first.
    """
    if smoothing < 0:
        raise ValueError("smoothing must be >= 0")
    if not 0 <= min_prominence_frac < 1:
        raise ValueError("min_prominence_frac must be in [0, 1)")
    if np.all(h.counts == h.counts[0]):
        return []
    counts = h.counts.astype(np.float64)
    if smoothing > 1:
        kernel = np.ones(smoothing) / smoothing
        padded_counts = np.pad(counts, smoothing, mode="edge")
        counts = np.convolve(padded_counts, kernel, mode="same")[smoothing:-smoothing]
    floor = min_prominence_frac * counts.max()
    padded = np.concatenate([[0.0], counts, [0.0]])
    idx, props = signal.find_peaks(padded, prominence=max(floor, 1e-12))
    widths = signal.peak_widths(padded, idx, rel_height=0.5)[0]
    peaks = []
    for i, prom, wbins in zip(idx, props["prominences"], widths):
        bin_i = int(i) - 1
        bin_i = min(max(bin_i, 0), h.bin_count - 1)
        center = float((h.edges[bin_i] + h.edges[bin_i + 1]) / 2.0)
        width = max(float(wbins), 1.0) * h.bin_width
        peaks.append(Peak(center=center, width=width, prominence=float(prom)))
    peaks.sort(key=lambda p: (-p.prominence, p.center))
    return peaks


def band_threshold(plane: PlaneMap, p: Peak) -> BinaryMask:
    """Pixels whose value lies within half the peak width of the peak center."""
    lo = p.center - p.width / 2.0
    hi = p.center + p.width / 2.0
    return BinaryMask((plane.values >= lo) & (plane.values <= hi))


def threshold_candidates(img: RasterImage, cfg: ThresholdConfig = ThresholdConfig()) -> list[CandidateRegion]:
    """All band-threshold candidates from the four planes, scored with L = c*a.

    The confidence is weighted by how much darker than the surrounding
    skin a candidate is (lesions absorb light; the brightest dominant mode
    is skin), which keeps skin-complement bands from outranking the
    lesion. Set darkness_weight to 0 to recover the bare c*a score.
    """
    w, h = img.width, img.height
    planes = to_planes(img, cfg.gray_mode)
    min_area = cfg.min_area(w * h)
    out: list[CandidateRegion] = []
    for source, plane in zip(PLANE_SOURCES, planes):
        hist = build_histogram(plane, cfg.bins)
        median = float(np.median(plane.values))
        dark_ref = float(np.percentile(plane.values, 5))
        span = max(median - dark_ref, 1e-9)
        for peak in find_peaks(hist, cfg.smoothing, cfg.min_prominence_frac):
            mask = band_threshold(plane, peak)
            for rg in connected_regions(mask, min_area=min_area):
                stats = region_stats(rg, w, h)
                if cfg.is_background_like(stats):
                    continue
                conf = stats.centrality * stats.norm_area
                if cfg.darkness_weight > 0:
                    px = rg.pixels
                    mean_val = float(plane.values[px[:, 1], px[:, 0]].mean())
                    darkness = min(1.0, max(0.0, (median - mean_val) / span))
                    conf *= darkness**cfg.darkness_weight
                if stats.border_fraction > cfg.border_fraction_limit:
                    conf *= cfg.border_penalty
                if conf >= cfg.min_confidence:
                    out.append(CandidateRegion(region=rg, source=source, confidence=conf))
    return out
