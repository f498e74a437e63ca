"""Structural descriptors of a region: boundary signature, pixel
distribution, and the symmetric-axis (skeleton) decomposition.

The boundary is turned into a radial signature (centroid-to-boundary
distance over arc position) from which extrema and Fourier features come.
The interior is described statistically (solidity, hollowness, ringness,
...) and structurally through a skeleton extracted as run-maxima of the
Euclidean distance transform, partitioned at branch points into short and
long segments, forks and peaks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .raster import PlaneMap
from .regions import DegenerateRegionError, Region, centrality, trace_boundary

SIGNATURE_SAMPLES = 128

_SQRT2 = math.sqrt(2.0)


def path_length(points: np.ndarray, closed: bool = False) -> float:
    """Unweighted chain length: 1 per axial step, sqrt(2) per diagonal."""
    if len(points) < 2:
        return 0.0
    pts = np.vstack([points, points[:1]]) if closed else points
    steps = np.abs(np.diff(pts.astype(np.float64), axis=0))
    return float(np.where((steps[:, 0] == 1) & (steps[:, 1] == 1), _SQRT2, steps.max(axis=1)).sum())


@dataclass(frozen=True)
class RadialSignature:
    samples: np.ndarray  # SIGNATURE_SAMPLES distances, arc-uniform
    mean_radius: float


def radial_signature(rg: Region, n: int = SIGNATURE_SAMPLES) -> RadialSignature:
    """Centroid-to-boundary distance resampled uniformly over arc length.

    The chain starts at the boundary pixel whose direction from the
    centroid is closest to angle zero (+x), so equal shapes produce equal
    signatures regardless of where tracing happened to begin.
    """
    chain = rg.boundary.astype(np.float64)
    if len(chain) < 8:
        raise DegenerateRegionError("boundary too short for a radial signature")
    cx, cy = rg.centroid
    radii = np.hypot(chain[:, 0] - cx, chain[:, 1] - cy)
    if radii.min() < 0.75:
        raise DegenerateRegionError("centroid lies on the boundary (line-like region)")

    angles = np.arctan2(chain[:, 1] - cy, chain[:, 0] - cx)
    start = int(np.argmin(np.abs(angles)))
    chain = np.roll(chain, -start, axis=0)
    radii = np.roll(radii, -start)

    steps = np.abs(np.diff(np.vstack([chain, chain[:1]]), axis=0))
    lengths = np.where((steps[:, 0] == 1) & (steps[:, 1] == 1), _SQRT2, steps.max(axis=1))
    arc = np.concatenate([[0.0], np.cumsum(lengths)])  # len(chain) + 1 positions
    total = arc[-1]
    wrapped = np.concatenate([radii, radii[:1]])
    positions = np.linspace(0.0, total, n, endpoint=False)
    samples = np.interp(positions, arc, wrapped)
    return RadialSignature(samples=samples, mean_radius=float(samples.mean()))


@dataclass(frozen=True)
class BoundaryDescriptor:
    """8 boundary attributes: 3 from signature extrema, 5 Fourier magnitudes."""

    extrema_count: int
    extrema_mean_prominence: float
    extrema_spacing_std: float
    fourier: np.ndarray  # |F_1..5| / |F_0|

    def as_row(self) -> np.ndarray:
        return np.concatenate(
            [[self.extrema_count, self.extrema_mean_prominence, self.extrema_spacing_std], self.fourier]
        )


def _circular_maxima(x: np.ndarray, prominence: float) -> tuple[np.ndarray, np.ndarray]:
    """Peak indices and prominences of a circular signal."""
    n = len(x)
    tiled = np.concatenate([x, x, x])
    idx, props = signal.find_peaks(tiled, prominence=prominence)
    keep = (idx >= n) & (idx < 2 * n)
    return idx[keep] - n, props["prominences"][keep]


def boundary_descriptor(sig: RadialSignature) -> BoundaryDescriptor:
    """Extrema statistics and normalized Fourier magnitudes of a signature."""
    x = sig.samples
    n = len(x)
    kernel = np.ones(5) / 5.0
    smoothed = np.convolve(np.concatenate([x[-4:], x, x[:4]]), kernel, mode="same")[4:-4]
    floor = 0.05 * sig.mean_radius
    peaks, proms = _circular_maxima(smoothed, floor)

    if len(peaks) >= 2:
        pos = np.sort(peaks)
        gaps = np.diff(np.concatenate([pos, [pos[0] + n]]))
        spacing_std = float(np.std(gaps))
    else:
        spacing_std = 0.0
    mean_prom = float(np.mean(proms)) if len(proms) else 0.0

    spectrum = np.fft.rfft(x)
    dc = abs(spectrum[0])
    fourier = np.abs(spectrum[1:6]) / dc if dc > 0 else np.zeros(5)
    return BoundaryDescriptor(
        extrema_count=int(len(peaks)),
        extrema_mean_prominence=mean_prom,
        extrema_spacing_std=spacing_std,
        fourier=fourier,
    )


@dataclass(frozen=True)
class DistributionDescriptor:
    """8 pixel-distribution attributes, each in [0, 1]."""

    solidity: float
    compactness: float
    silhouetteness: float
    centrality: float
    peripherality: float
    coverage: float
    hollowness: float
    ringness: float

    def as_row(self) -> np.ndarray:
        return np.array(
            [
                self.solidity,
                self.compactness,
                self.silhouetteness,
                self.centrality,
                self.peripherality,
                self.coverage,
                self.hollowness,
                self.ringness,
            ]
        )


def _clip01(v: float) -> float:
    return min(1.0, max(0.0, v))


def distribution_descriptor(rg: Region, w: int, h: int) -> DistributionDescriptor:
    """Statistical description of how the region's pixels are spread out.

    silhouetteness compares the filled outline's perimeter to the full
    perimeter including hole boundaries, so holey regions score low.
    ringness measures missing mass near the centroid relative to a solid
    disk of the same area.
    """
    a = rg.area
    p = rg.perimeter
    compact = _clip01(4.0 * math.pi * a / (p * p)) if p > 0 else 1.0
    if rg.hole_area:
        from .regions import chain_length

        filled_perimeter = chain_length(trace_boundary(rg.filled_mask), closed=True)
        silhouette = _clip01(filled_perimeter / p)
    else:
        silhouette = 1.0
    c = centrality(rg.centroid, w, h)
    bx0, by0, bw, bh = rg.bbox
    cx, cy = rg.centroid
    px = rg.pixels
    r_eq = math.sqrt(a / math.pi)
    d2 = (px[:, 0] - cx) ** 2 + (px[:, 1] - cy) ** 2
    inside = int((d2 <= (r_eq / 2.0) ** 2).sum())
    ringness = _clip01(1.0 - inside / max(a / 4.0, 1.0))
    return DistributionDescriptor(
        solidity=_clip01(rg.solidity),
        compactness=compact,
        silhouetteness=silhouette,
        centrality=_clip01(c),
        peripherality=_clip01(1.0 - c),
        coverage=_clip01(a / (bw * bh)),
        hollowness=_clip01(rg.hole_area / (a + rg.hole_area)) if rg.hole_area else 0.0,
        ringness=ringness,
    )


# ---------------------------------------------------------------------------
# symmetric-axis transform


@dataclass
class SymAxisDescriptorSet:
    """Skeleton decomposition rows: short/long segments, forks, peaks.

    short/long rows: (length, mean_radius, radius_slope, straightness,
    mean_intensity, intensity_contrast). fork rows: (arm_count,
    arm_angle_spread, radius_at_branch, mean_intensity). peak rows:
    (peak_radius, local_isotropy, mean_intensity).
    """

    short: list = field(default_factory=list)
    long: list = field(default_factory=list)
    fork: list = field(default_factory=list)
    peak: list = field(default_factory=list)

    ARITIES = {"short": 6, "long": 6, "fork": 4, "peak": 3}

    def rows(self, kind: str) -> np.ndarray:
        data = getattr(self, kind)
        return np.array(data, dtype=np.float64).reshape(-1, self.ARITIES[kind])

    def total_rows(self) -> int:
        return len(self.short) + len(self.long) + len(self.fork) + len(self.peak)


def _run_maxima(values: np.ndarray, max_run: int = 2) -> np.ndarray:
    """Mark middles of short maximal runs that beat both flanking values.

    Scanning rows and columns of the distance map this way marks ridge
    crossings of any orientation while skipping long flat shelves, which
    keeps rectangle skeletons free of corner-bisector spurs. On shallow
    diagonal ridges both scans fire one pixel apart and would leave a
    two-pixel-thick staircase, so row marks adjacent to column marks are
    suppressed.
    """

    def scan_rows(v: np.ndarray) -> np.ndarray:
        marked = np.zeros_like(v, dtype=bool)
        h, w = v.shape
        for i in range(h):
            row = v[i]
            j = 0
            while j < w:
                k = j
                while k + 1 < w and row[k + 1] == row[j]:
                    k += 1
                val = row[j]
                if val > 0 and (k - j + 1) <= max_run:
                    left = row[j - 1] if j > 0 else 0.0
                    right = row[k + 1] if k + 1 < w else 0.0
                    if val > left and val > right:
                        marked[i, j + (k - j) // 2] = True
                j = k + 1
        return marked

    return scan_rows(values) | scan_rows(values.T).T


def _is_simple_point(mask: np.ndarray, y: int, x: int) -> bool:
    """True when removing (y, x) preserves local topology.

    8-connectivity for the foreground, 4-connectivity for the background:
    the set foreground neighbors must form one 8-connected component and
    the background must reach the pixel through one 4-connected side group.
    This component-based test (unlike the crossing number) also recognizes
    redundant staircase pixels as removable.
    """
    h, w = mask.shape
    ring = []
    for dy, dx in ((-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1)):
        yy, xx = y + dy, x + dx
        ring.append(((dy, dx), bool(0 <= yy < h and 0 <= xx < w and mask[yy, xx])))
    fg = [off for off, v in ring if v]
    if not fg:
        return False
    # count 8-connected components among the foreground ring cells
    comps = 0
    left = set(fg)
    while left:
        seed = left.pop()
        comps += 1
        frontier = [seed]
        while frontier:
            a = frontier.pop()
            for b in list(left):
                if abs(a[0] - b[0]) <= 1 and abs(a[1] - b[1]) <= 1:
                    left.discard(b)
                    frontier.append(b)
    if comps != 1:
        return False
    # at least one 4-neighbor must be background (otherwise deleting p
    # would open an interior hole)
    return any(not v for off, v in ring if off in ((-1, 0), (0, 1), (1, 0), (0, -1)))


def _thin_to_unit_width(mask: np.ndarray, priority: np.ndarray) -> np.ndarray:
    """Sequentially delete redundant pixels until the set is unit-wide.

    Non-endpoint simple points are removed in increasing priority order
    (the distance value), so doubled staircase marks disappear while the
    ridge crest and all connectivity survive.
    """
    out = mask.copy()
    changed = True
    while changed:
        changed = False
        ys, xs = np.nonzero(out)
        order = np.lexsort((xs, ys, priority[ys, xs]))
        for i in order:
            y, x = int(ys[i]), int(xs[i])
            if not out[y, x]:
                continue
            nb = out[max(0, y - 1) : y + 2, max(0, x - 1) : x + 2].sum() - 1
            if nb < 2:
                continue  # endpoint: keep
            if _is_simple_point(out, y, x):
                out[y, x] = False
                changed = True
    return out


_NBR8 = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]


def _neighbors(p, skel_set):
    y, x = p
    return [(y + dy, x + dx) for dy, dx in _NBR8 if (y + dy, x + dx) in skel_set]


def _trace_path(comp: set, skel_set: set) -> list:
    """Order a degree-<=2 component into a pixel path (cycles start anywhere)."""
    degs = {p: len([q for q in _neighbors(p, comp) if q in comp]) for p in comp}
    ends = sorted(p for p, d in degs.items() if d <= 1)
    start = ends[0] if ends else min(comp)
    path = [start]
    seen = {start}
    cur = start
    while True:
        nxt = [q for q in _neighbors(cur, comp) if q in comp and q not in seen]
        if not nxt:
            break
        cur = min(nxt)
        path.append(cur)
        seen.add(cur)
    return path


def _prune_spurs(skel: set, dist: np.ndarray, min_len: int = 3) -> set:
    """Iteratively drop insignificant leaf branches.

    A leaf branch goes when it is shorter than min_len pixels or shorter
    than its own mean radius: anything inside the inscribed circle of its
    attachment point is rasterization noise, not structure (rounded caps
    sprout such spurs).
    """
    skel = set(skel)
    for _ in range(16):
        degs = {p: len(_neighbors(p, skel)) for p in skel}
        junctions = {p for p, d in degs.items() if d >= 3}
        if not junctions:
            break
        removed = False
        for comp in _components(skel - junctions):
            touches = any(q in junctions for p in comp for q in _neighbors(p, skel))
            has_free_end = any(
                len([q for q in _neighbors(p, comp) if q in comp]) <= 1
                and not any(q in junctions for q in _neighbors(p, skel))
                for p in comp
            )
            if not (touches and has_free_end):
                continue
            if len(comp) < min_len:
                skel -= comp
                removed = True
                continue
            mean_rad = float(np.mean([dist[p] for p in comp]))
            if path_length(np.array([(x, y) for y, x in _trace_path(comp, skel)])) < mean_rad:
                skel -= comp
                removed = True
        if not removed:
            break
    return skel


def _components(pixels: set) -> list:
    comps = []
    left = set(pixels)
    while left:
        seed = left.pop()
        comp = {seed}
        frontier = [seed]
        while frontier:
            p = frontier.pop()
            for q in _neighbors(p, left):
                left.discard(q)
                comp.add(q)
                frontier.append(q)
        comps.append(comp)
    return comps


def _segment_rows(path, dist, gray_vals):
    pts = np.array([(x, y) for y, x in path], dtype=np.float64)
    length = path_length(pts)
    radii = np.array([dist[p] for p in path])
    mean_radius = float(radii.mean())
    if len(path) >= 2 and length > 0:
        steps = np.abs(np.diff(pts, axis=0))
        step_len = np.where((steps[:, 0] == 1) & (steps[:, 1] == 1), _SQRT2, steps.max(axis=1))
        arc = np.concatenate([[0.0], np.cumsum(step_len)])
        if len(path) >= 3:
            slope = float(np.polyfit(arc, radii, 1)[0])
        else:
            slope = float((radii[-1] - radii[0]) / max(length, 1e-9))
        straight = _clip01(float(np.hypot(*(pts[-1] - pts[0]))) / length)
    else:
        slope = 0.0
        straight = 1.0
    mean_int = float(np.mean(gray_vals)) if gray_vals is not None else 0.0
    contrast = float(np.max(gray_vals) - np.min(gray_vals)) if gray_vals is not None else 0.0
    return (length, mean_radius, slope, straight, mean_int, contrast)


def sym_axis_descriptors(
    rg: Region, gray: PlaneMap | None = None, min_area: int = 25, spur_len: int = 3
) -> SymAxisDescriptorSet:
    """Skeleton rows for one region; empty set for regions under min_area.

    The skeleton is the ridge of the region's distance transform (run
    maxima along rows and columns), pruned of short spurs and split at
    branch points. Segments shorter than twice their own mean radius are
    short rows, others long; junction nodes make fork rows; strict local
    maxima of the distance map on the skeleton make peak rows.
    """
    out = SymAxisDescriptorSet()
    if rg.area < min_area:
        return out
    dist = rg.distance_map()
    marked = _thin_to_unit_width(_run_maxima(dist), dist)
    skel = {(int(y), int(x)) for y, x in zip(*np.nonzero(marked))}
    skel = _prune_spurs(skel, dist, spur_len)
    if not skel:
        return out

    def gray_at(path):
        if gray is None:
            return None
        return np.array([gray.values[y + rg.y0, x + rg.x0] for y, x in path])

    degs = {p: len(_neighbors(p, skel)) for p in skel}
    junction_pixels = {p for p, d in degs.items() if d >= 3}
    junction_nodes = _components(junction_pixels) if junction_pixels else []
    paths = [_trace_path(comp, skel) for comp in _components(skel - junction_pixels)]

    def touched_nodes(path):
        found = []
        for endpoint in dict.fromkeys([path[0], path[-1]]):  # once per distinct end
            for ni, node in enumerate(junction_nodes):
                if any(q in node for q in _neighbors(endpoint, skel)):
                    found.append((endpoint, ni))
        return found

    # contract sub-spur-length connector segments between two junction nodes:
    # a branch point smeared over a few pixels is one fork, not several
    parent = list(range(len(junction_nodes)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    absorbed = set()
    touches = [touched_nodes(path) for path in paths]
    rows = [_segment_rows(path, dist, gray_at(path)) for path in paths]
    for pi, path in enumerate(paths):
        nodes_hit = {ni for _, ni in touches[pi]}
        length, mean_radius = rows[pi][0], rows[pi][1]
        # a connector shorter than the local width is a smeared branch
        # point, not a real segment between two forks
        if len(nodes_hit) >= 2 and (len(path) < spur_len or length < 2.0 * mean_radius):
            it = iter(nodes_hit)
            first = find(next(it))
            for ni in it:
                parent[find(ni)] = first
            absorbed.add(pi)

    for pi, row in enumerate(rows):
        if pi in absorbed:
            continue
        length, mean_radius = row[0], row[1]
        if length < 2.0 * mean_radius:
            out.short.append(row)
        else:
            out.long.append(row)

    merged: dict = {}
    for ni, node in enumerate(junction_nodes):
        merged.setdefault(find(ni), set()).update(node)
    for pi in absorbed:
        root = find(next(iter({ni for _, ni in touches[pi]})))
        merged[root].update(paths[pi])

    for root in sorted(merged):
        node = merged[root]
        node_pts = np.array([(x, y) for y, x in node], dtype=np.float64)
        ncx, ncy = node_pts[:, 0].mean(), node_pts[:, 1].mean()
        arms = []
        for pi, path in enumerate(paths):
            if pi in absorbed:
                continue
            for endpoint, ni in touches[pi]:
                if find(ni) == root:
                    arms.append(math.atan2(endpoint[0] - ncy, endpoint[1] - ncx))
        if len(arms) < 3:
            continue
        vx = float(np.mean(np.cos(arms)))
        vy = float(np.mean(np.sin(arms)))
        spread = _clip01(1.0 - math.hypot(vx, vy))
        radius_at = float(max(dist[p] for p in node))
        mean_int = float(np.mean(gray_at(sorted(node)))) if gray is not None else 0.0
        out.fork.append((float(len(arms)), spread, radius_at, mean_int))

    h, w = dist.shape
    for p in sorted(skel):
        nb = _neighbors(p, skel)
        vals = [dist[q] for q in nb]
        if nb and not (all(dist[p] >= v for v in vals) and any(dist[p] > v for v in vals)):
            continue
        y, x = p
        ring = [
            dist[y + dy, x + dx]
            for dy, dx in _NBR8
            if 0 <= y + dy < h and 0 <= x + dx < w
        ]
        iso = _clip01(1.0 - (max(ring) - min(ring)) / _SQRT2) if ring else 1.0
        mean_int = float(gray.values[y + rg.y0, x + rg.x0]) if gray is not None else 0.0
        out.peak.append((float(dist[p]), iso, mean_int))
    return out
