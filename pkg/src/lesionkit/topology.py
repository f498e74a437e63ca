"""Two-scale topology of the gray image: curvilinear contours and their
groups, plus regions from the difference-of-Gaussians map.

Ridges are intensity crest lines, rivers are the crests of the inverted
image, edges are gradient-magnitude maxima linked with hysteresis. Chains
are partitioned at shape transitions and every piece carries 15 attributes
(9 geometric, 6 appearance). Star-like groups of short segments (clots)
and near-parallel groups of longer segments (bundles, two cut-off
strategies) carry 19 attributes each.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .raster import PlaneMap, RasterImage, to_planes
from .regions import Region, connected_regions, hull_vertices
from .shapedesc import (
    DistributionDescriptor,
    SymAxisDescriptorSet,
    _run_maxima,
    _thin_to_unit_width,
    _components,
    _neighbors,
    _trace_path,
    distribution_descriptor,
    sym_axis_descriptors,
)
from .raster import BinaryMask

GEOMETRIC_ATTRS = 9
APPEARANCE_ATTRS = 6
SEGMENT_ATTRS = GEOMETRIC_ATTRS + APPEARANCE_ATTRS  # 15
GROUP_ATTRS = 19  # 12 geometric + 7 appearance


@dataclass(frozen=True)
class ScalePair:
    blur1: PlaneMap  # sigma = 1
    blur2: PlaneMap  # sigma = 2
    dog: PlaneMap


def gaussian_blur(plane: PlaneMap, sigma: float) -> PlaneMap:
    """Separable Gaussian, kernel radius ceil(3 sigma), reflected borders."""
    radius = math.ceil(3 * sigma)
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-(xs**2) / (2 * sigma * sigma))
    kernel /= kernel.sum()
    tmp = ndimage.correlate1d(plane.values, kernel, axis=0, mode="reflect")
    out = ndimage.correlate1d(tmp, kernel, axis=1, mode="reflect")
    return PlaneMap(out)


def scale_pair(gray: PlaneMap) -> ScalePair:
    b1 = gaussian_blur(gray, 1.0)
    b2 = gaussian_blur(gray, 2.0)
    return ScalePair(blur1=b1, blur2=b2, dog=PlaneMap(b1.values - b2.values))


@dataclass(frozen=True)
class RawContour:
    kind: str  # ridge | river | edge
    scale: int  # 1 | 2
    points: np.ndarray  # (n, 2) of (x, y), chain order


def _chains_from_marks(marked: np.ndarray, priority: np.ndarray, min_len: int = 4) -> list:
    """Thin a marked pixel set and split it into ordered chains."""
    thin = _thin_to_unit_width(marked, priority)
    skel = {(int(y), int(x)) for y, x in zip(*np.nonzero(thin))}
    if not skel:
        return []
    degs = {p: len(_neighbors(p, skel)) for p in skel}
    junctions = {p for p, d in degs.items() if d >= 3}
    chains = []
    for comp in _components(skel - junctions):
        path = _trace_path(comp, skel)
        if len(path) >= min_len:
            chains.append(np.array([(x, y) for y, x in path], dtype=np.int64))
    return chains


def _ridge_marks(values: np.ndarray, min_drop: float) -> np.ndarray:
    """Transverse intensity maxima with at least min_drop contrast."""
    shifted = values - values.min() + min_drop + 1.0
    marks = _run_maxima(shifted, max_run=2)
    # require the crest to beat its transverse flanks by min_drop
    if min_drop > 0:
        keep = np.zeros_like(marks)
        h, w = values.shape
        ys, xs = np.nonzero(marks)
        for y, x in zip(ys, xs):
            v = values[y, x]
            for d1, d2 in (((0, -1), (0, 1)), ((-1, 0), (1, 0))):
                n1y, n1x = y + d1[0], x + d1[1]
                n2y, n2x = y + d2[0], x + d2[1]
                v1 = values[n1y, n1x] if 0 <= n1y < h and 0 <= n1x < w else v - min_drop
                v2 = values[n2y, n2x] if 0 <= n2y < h and 0 <= n2x < w else v - min_drop
                if v - max(v1, v2) >= min_drop * 0.5 and v > min(v1, v2):
                    keep[y, x] = True
                    break
        marks = keep
    return marks


def _edge_marks(values: np.ndarray, high_pct: float = 80.0, low_pct: float = 40.0) -> tuple:
    """Canny-style gradient maxima with hysteresis linking."""
    gy, gx = np.gradient(values)
    mag = np.hypot(gx, gy)
    if mag.max() <= 1e-12:
        return np.zeros_like(values, dtype=bool), mag
    high = np.percentile(mag, high_pct)
    low = np.percentile(mag, low_pct)
    angle = np.arctan2(gy, gx)
    sector = (np.round(angle / (np.pi / 4)) % 4).astype(int)  # 0:E,1:NE,2:N,3:NW
    offs = {0: ((0, 1), (0, -1)), 1: ((1, 1), (-1, -1)), 2: ((1, 0), (-1, 0)), 3: ((1, -1), (-1, 1))}
    h, w = values.shape
    nms = np.zeros_like(values, dtype=bool)
    ys, xs = np.nonzero(mag > max(low, 1e-12))
    for y, x in zip(ys, xs):
        (d1y, d1x), (d2y, d2x) = offs[sector[y, x]]
        m = mag[y, x]
        n1 = mag[y + d1y, x + d1x] if 0 <= y + d1y < h and 0 <= x + d1x < w else 0.0
        n2 = mag[y + d2y, x + d2x] if 0 <= y + d2y < h and 0 <= x + d2x < w else 0.0
        if m >= n1 and m >= n2 and m > min(n1, n2):
            nms[y, x] = True
    strong = nms & (mag >= high)
    lab, n = ndimage.label(nms, structure=np.ones((3, 3), dtype=bool))
    keep_labels = np.unique(lab[strong])
    hooked = np.isin(lab, keep_labels[keep_labels > 0])
    return nms & hooked, mag


def extract_contours(sp: ScalePair, min_ridge_drop: float = 1.0, min_len: int = 4) -> list[RawContour]:
    """Ridge, river and edge chains from both blur scales."""
    out: list[RawContour] = []
    for scale, plane in ((1, sp.blur1), (2, sp.blur2)):
        v = plane.values
        ridge = _ridge_marks(v, min_ridge_drop)
        for pts in _chains_from_marks(ridge, v, min_len):
            out.append(RawContour(kind="ridge", scale=scale, points=pts))
        river = _ridge_marks(-v, min_ridge_drop)
        for pts in _chains_from_marks(river, -v, min_len):
            out.append(RawContour(kind="river", scale=scale, points=pts))
        edge, mag = _edge_marks(v)
        for pts in _chains_from_marks(edge, mag, min_len):
            out.append(RawContour(kind="edge", scale=scale, points=pts))
    return out


@dataclass(frozen=True)
class ContourSegment:
    kind: str
    scale: int
    points: np.ndarray
    attributes: np.ndarray  # exactly 15

    @property
    def arc_length(self) -> float:
        return float(self.attributes[0])

    @property
    def orientation(self) -> float:
        return float(self.attributes[5])

    @property
    def midpoint(self) -> np.ndarray:
        return self.points[len(self.points) // 2].astype(np.float64)

    @property
    def mean_intensity(self) -> float:
        return float(self.attributes[9])


class _ImageContext:
    """Per-image appearance layers sampled along contour chains."""

    def __init__(self, img: RasterImage):
        gray, r, g, b = to_planes(img)
        self.gray = gray.values
        self.r, self.g, self.b = r.values, g.values, b.values
        self.local_range = ndimage.maximum_filter(self.gray, size=3) - ndimage.minimum_filter(
            self.gray, size=3
        )


def _chord_split(points: np.ndarray, rel_tol: float = 0.10) -> list[np.ndarray]:
    """Recursively split where deviation from the chord exceeds rel_tol of
    the chord length (shape transitions)."""
    if len(points) < 8:
        return [points]
    p0 = points[0].astype(np.float64)
    p1 = points[-1].astype(np.float64)
    chord = p1 - p0
    clen = float(np.hypot(*chord))
    if clen < 1e-9:
        mid = len(points) // 2
        return _chord_split(points[: mid + 1], rel_tol) + _chord_split(points[mid:], rel_tol)
    rel = points.astype(np.float64) - p0
    dev = np.abs(rel[:, 0] * chord[1] - rel[:, 1] * chord[0]) / clen
    k = int(np.argmax(dev))
    if dev[k] <= rel_tol * clen or k in (0, len(points) - 1):
        return [points]
    return _chord_split(points[: k + 1], rel_tol) + _chord_split(points[k:], rel_tol)


def _describe_piece(kind: str, scale: int, pts: np.ndarray, ctx: _ImageContext) -> ContourSegment:
    p = pts.astype(np.float64)
    steps = np.diff(p, axis=0)
    step_len = np.hypot(steps[:, 0], steps[:, 1])
    arc = float(step_len.sum())
    angles = np.arctan2(steps[:, 1], steps[:, 0])
    turns = np.diff(angles)
    turns = (turns + np.pi) % (2 * np.pi) - np.pi  # wrap to (-pi, pi]
    curv_mean = float(np.mean(np.abs(turns))) if len(turns) else 0.0
    curv_std = float(np.std(turns)) if len(turns) else 0.0
    jagged = float(np.mean(np.abs(np.diff(turns)))) if len(turns) >= 2 else 0.0
    endpoint = float(np.hypot(*(p[-1] - p[0])))
    straight = min(1.0, endpoint / arc) if arc > 0 else 1.0
    chord = p[-1] - p[0]
    orientation = math.atan2(chord[1], chord[0]) % math.pi
    bw = p[:, 0].max() - p[:, 0].min() + 1
    bh = p[:, 1].max() - p[:, 1].min() + 1
    elongation = float(max(bw, bh) / min(bw, bh))
    signs = np.sign(turns[np.abs(turns) > 1e-9])
    turn_count = float(np.count_nonzero(np.diff(signs))) if len(signs) >= 2 else 0.0

    xs = pts[:, 0]
    ys = pts[:, 1]
    gray = ctx.gray[ys, xs]
    attrs = np.array(
        [
            arc,
            curv_mean,
            curv_std,
            jagged,
            straight,
            orientation,
            endpoint,
            elongation,
            turn_count,
            float(gray.mean()),
            float(ctx.local_range[ys, xs].mean()),
            float(gray.std()),
            float(ctx.r[ys, xs].mean()),
            float(ctx.g[ys, xs].mean()),
            float(ctx.b[ys, xs].mean()),
        ]
    )
    return ContourSegment(kind=kind, scale=scale, points=pts, attributes=attrs)


def partition_and_describe(
    contour: RawContour, img: RasterImage, _ctx: _ImageContext | None = None
) -> list[ContourSegment]:
    """Split a raw chain at shape transitions and describe each piece."""
    if len(contour.points) < 4:
        raise ValueError("chain must have at least 4 points")
    ctx = _ctx if _ctx is not None else _ImageContext(img)
    return [
        _describe_piece(contour.kind, contour.scale, piece, ctx)
        for piece in _chord_split(contour.points)
        if len(piece) >= 4
    ]


def describe_all_contours(contours: list[RawContour], img: RasterImage) -> list[ContourSegment]:
    ctx = _ImageContext(img)
    out: list[ContourSegment] = []
    for c in contours:
        if len(c.points) >= 4:
            out.extend(partition_and_describe(c, img, _ctx=ctx))
    return out


@dataclass(frozen=True)
class ContourGroup:
    kind: str  # clot | bundle
    strategy: str  # "" for clots, tight/loose for bundles
    member_ids: tuple
    attributes: np.ndarray  # exactly 19


def _orientation_scores(thetas: np.ndarray) -> tuple[float, float, float]:
    """(uni, null, cross) in [0,1] from undirected orientations.

    Doubled angles align for parallel segments; quadrupled angles align
    for perpendicular (T/X) patterns too, which separates cross from a
    full spread.
    """
    double = np.exp(2j * thetas)
    quad = np.exp(4j * thetas)
    r2 = float(np.abs(double.mean()))
    r4 = float(np.abs(quad.mean()))
    uni = r2
    cross = r4 * (1.0 - r2)
    null = (1.0 - r2) * (1.0 - r4)
    return uni, null, cross


def _group_attributes(members: list[ContourSegment]) -> np.ndarray:
    mids = np.array([m.midpoint for m in members])
    pole = mids.mean(axis=0)
    radii = np.hypot(mids[:, 0] - pole[0], mids[:, 1] - pole[1])
    lengths = np.array([m.arc_length for m in members])
    thetas = np.array([m.orientation for m in members])
    uni, null, cross = _orientation_scores(thetas)
    spread = float(np.sqrt(np.mean(radii**2)))
    if len(mids) >= 3:
        verts = hull_vertices(np.round(mids).astype(np.int64))
        if len(verts) >= 3:
            x = verts[:, 0]
            y = verts[:, 1]
            convex_spread = 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))
        else:
            convex_spread = 0.0
    else:
        convex_spread = 0.0
    intensities = np.array([m.mean_intensity for m in members])
    contrasts = np.array([m.attributes[10] for m in members])
    fuzz = np.array([m.attributes[11] for m in members])
    rg_chroma = np.array([m.attributes[12] - m.attributes[13] for m in members])
    return np.array(
        [
            float(radii.min()),
            float(radii.max()),
            float(radii.mean()),
            float(radii.std()),
            float(lengths.mean()),
            float(lengths.std()),
            float(len(members)),
            spread,
            uni,
            null,
            cross,
            convex_spread,
            float(intensities.mean()),
            float(intensities.std()),
            float(contrasts.mean()),
            float(contrasts.std()),
            float(fuzz.mean()),
            float(fuzz.std()),
            float(rg_chroma.mean()),
        ]
    )


def _single_linkage(n: int, link) -> list[set]:
    """Flat clusters from a pairwise link predicate (union-find)."""
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if link(i, j):
                parent[find(i)] = find(j)
    groups: dict = {}
    for i in range(n):
        groups.setdefault(find(i), set()).add(i)
    return sorted(groups.values(), key=lambda s: sorted(s))


def find_clots(segments: list[ContourSegment]) -> list[ContourGroup]:
    """Star-like groups of at least 3 short segments with nearby midpoints."""
    if not segments:
        return []
    lengths = np.array([s.arc_length for s in segments])
    median_len = float(np.median(lengths))
    short_ids = [i for i, s in enumerate(segments) if s.arc_length < median_len]
    if len(short_ids) < 3:
        return []
    short_lens = np.array([segments[i].arc_length for i in short_ids])
    cutoff = 2.0 * float(np.median(short_lens))
    mids = np.array([segments[i].midpoint for i in short_ids])

    def link(a, b):
        return float(np.hypot(*(mids[a] - mids[b]))) <= cutoff

    out = []
    for cluster in _single_linkage(len(short_ids), link):
        if len(cluster) < 3:
            continue
        ids = tuple(sorted(short_ids[i] for i in cluster))
        members = [segments[i] for i in ids]
        out.append(ContourGroup(kind="clot", strategy="", member_ids=ids, attributes=_group_attributes(members)))
    return out


_ORIENT_GATE = math.pi / 6  # 30 degrees


def _orient_diff(a: float, b: float) -> float:
    d = abs(a - b) % math.pi
    return min(d, math.pi - d)


def find_bundles(segments: list[ContourSegment]) -> list[ContourGroup]:
    """Groups of near-parallel longer segments, by two cut-off strategies.

    tight: single linkage at the largest drop in sorted nearest-neighbor
    midpoint distances. loose: link when the midpoint distance is within
    half the length of either segment under investigation. Both result
    lists are returned (strategies tagged), since using both descriptor
    lists together helps classification.
    """
    if not segments:
        return []
    lengths = np.array([s.arc_length for s in segments])
    median_len = float(np.median(lengths))
    long_ids = [i for i, s in enumerate(segments) if s.arc_length >= median_len]
    if len(long_ids) < 2:
        return []
    mids = np.array([segments[i].midpoint for i in long_ids])
    thetas = [segments[i].orientation for i in long_ids]
    llen = [segments[i].arc_length for i in long_ids]
    n = len(long_ids)
    dmat = np.hypot(mids[:, None, 0] - mids[None, :, 0], mids[:, None, 1] - mids[None, :, 1])

    nn = np.sort(dmat + np.where(np.eye(n, dtype=bool), np.inf, 0.0), axis=1)[:, 0]
    finite = np.sort(nn[np.isfinite(nn)])
    if len(finite) >= 2:
        gaps = np.diff(finite)
        k = int(np.argmax(gaps))
        tight_cut = float(finite[k]) + float(gaps[k]) / 2.0 if gaps[k] > 0 else float(finite[-1])
    else:
        tight_cut = float(finite[0]) if len(finite) else 0.0

    def gate(a, b):
        return _orient_diff(thetas[a], thetas[b]) < _ORIENT_GATE

    def make(strategy, link):
        groups = []
        for cluster in _single_linkage(n, link):
            if len(cluster) < 2:
                continue
            members_i = sorted(cluster)
            ok = all(
                gate(a, b) for ai, a in enumerate(members_i) for b in members_i[ai + 1 :]
            )
            if not ok:
                continue
            ids = tuple(sorted(long_ids[i] for i in members_i))
            members = [segments[i] for i in ids]
            groups.append(
                ContourGroup(kind="bundle", strategy=strategy, member_ids=ids, attributes=_group_attributes(members))
            )
        return groups

    tight = make("tight", lambda a, b: dmat[a, b] <= tight_cut and gate(a, b))
    loose = make("loose", lambda a, b: dmat[a, b] <= max(llen[a], llen[b]) / 2.0 and gate(a, b))
    return tight + loose


@dataclass(frozen=True)
class DogRegion:
    source: str  # dog | edge-band
    region: Region
    distribution: DistributionDescriptor
    sym_axes: SymAxisDescriptorSet


def dog_regions(
    sp: ScalePair,
    edges_scale1: list[RawContour],
    edges_scale2: list[RawContour],
    min_area: int = 9,
) -> list[DogRegion]:
    """Interior-described regions from the DOG map and the edge-band gap.

    Source A thresholds |DOG| at its 90th percentile; source B keeps the
    band around scale-1 edges not already covered by scale-2 edges
    (dilation radius 2 difference).
    """
    h, w = sp.dog.values.shape
    out: list[DogRegion] = []

    mag = np.abs(sp.dog.values)
    t = float(np.percentile(mag, 90.0))
    mask_a = mag > max(t, 1e-9)
    sources = [("dog", mask_a)]

    disk = np.hypot(*np.mgrid[-2:3, -2:3]) <= 2.0
    band1 = np.zeros((h, w), dtype=bool)
    for c in edges_scale1:
        band1[c.points[:, 1], c.points[:, 0]] = True
    band2 = np.zeros((h, w), dtype=bool)
    for c in edges_scale2:
        band2[c.points[:, 1], c.points[:, 0]] = True
    if band1.any():
        band1 = ndimage.binary_dilation(band1, structure=disk)
    if band2.any():
        band2 = ndimage.binary_dilation(band2, structure=disk)
    sources.append(("edge-band", band1 & ~band2))

    for tag, bits in sources:
        if not bits.any():
            continue
        for rg in connected_regions(BinaryMask(bits), min_area=min_area):
            out.append(
                DogRegion(
                    source=tag,
                    region=rg,
                    distribution=distribution_descriptor(rg, w, h),
                    sym_axes=sym_axis_descriptors(rg, gray=sp.blur1),
                )
            )
    return out
