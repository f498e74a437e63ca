"""Connected regions and their geometry: boundary chain, hull, holes, stats.

A Region is a maximal 8-connected set of pixels extracted from a BinaryMask.
Geometry that several scoring and descriptor stages need (boundary chain,
convex hull, hole structure, solidity) is computed once and cached on the
region. Convex hull rasterization uses exact integer arithmetic so results
are reproducible bit-for-bit and match enumeration oracles.
"""

from __future__ import annotations

import math
from functools import cached_property

import numpy as np
from scipy import ndimage

from .raster import BinaryMask, PlaneMap

# 8-connectivity for foreground components
_STRUCT8 = np.ones((3, 3), dtype=bool)

# Kulpa chain-step weights: corrects the over-count of rasterized boundaries
# so circle perimeters come out near 2*pi*r.
_W_AXIAL = 0.9481
_W_DIAG = 1.3408

# Clockwise Moore neighborhood starting East, as (dy, dx)
_MOORE = [(0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1)]


class EmptyInputError(ValueError):
    """Raised when an operation requires at least one pixel and got none."""


class DegenerateRegionError(ValueError):
    """Raised when a region is too thin or small for the requested geometry."""


def trace_boundary(mask: np.ndarray) -> np.ndarray:
    """Trace the outer boundary of the first 8-connected blob in ``mask``.

    Moore-neighbor tracing from the uppermost-leftmost pixel, clockwise,
    with Jacob's stopping criterion. Returns an (n, 2) array of (y, x)
    pixels forming a closed chain; 1-pixel-wide protrusions appear twice
    (once per traversal direction), which keeps the chain closed.
    """
    ys, xs = np.nonzero(mask)
    if ys.size == 0:
        raise EmptyInputError("cannot trace boundary of an empty mask")
    h, w = mask.shape
    start = (int(ys[0]), int(xs[0]))

    def nbr_dir(p, d):
        yy, xx = p[0] + _MOORE[d][0], p[1] + _MOORE[d][1]
        if 0 <= yy < h and 0 <= xx < w and mask[yy, xx]:
            return (yy, xx)
        return None

    chain = [start]
    # entered the start pixel as if coming from the west
    backtrack = 4
    cur = start
    first_next = None
    while True:
        found = None
        d = (backtrack + 1) % 8
        for _ in range(8):
            nxt = nbr_dir(cur, d)
            if nxt is not None:
                found = (nxt, d)
                break
            d = (d + 1) % 8
        if found is None:
            return np.array(chain, dtype=np.int64)  # isolated pixel
        nxt, d = found
        if cur == start and first_next is None:
            first_next = nxt
        elif cur == start and nxt == first_next:
            chain.pop()  # returned to start heading the same way: done
            return np.array(chain, dtype=np.int64)
        chain.append(nxt)
        # next sweep starts just past the reverse of the arriving direction
        backtrack = (d + 4) % 8
        cur = nxt
        if len(chain) > 8 * mask.size:
            raise RuntimeError("boundary trace failed to close")


def chain_length(chain: np.ndarray, closed: bool = True) -> float:
    """Kulpa-weighted length of a pixel chain given as (n, 2) coordinates."""
    if len(chain) < 2:
        return float(_W_AXIAL) if closed and len(chain) == 1 else 0.0
    pts = np.vstack([chain, chain[:1]]) if closed else chain
    steps = np.abs(np.diff(pts, axis=0))
    diag = (steps[:, 0] == 1) & (steps[:, 1] == 1)
    return float(diag.sum() * _W_DIAG + (~diag).sum() * _W_AXIAL)


def hull_vertices(points: np.ndarray) -> np.ndarray:
    """Convex hull of integer points via Andrew's monotone chain.

    Returns vertices in counter-clockwise order (in x-right/y-down pixel
    coordinates) using exact integer cross products. Collinear inputs
    yield the two extreme points; a single point yields itself.
    """
    pts = np.unique(np.asarray(points, dtype=np.int64), axis=0)
    if len(pts) == 1:
        return pts
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list = []
    for p in map(tuple, pts):
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in map(tuple, pts[::-1]):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    verts = lower[:-1] + upper[:-1]
    if len(verts) < 2:  # all collinear
        verts = [tuple(pts[0]), tuple(pts[-1])]
    return np.array(verts, dtype=np.int64)


def rasterize_hull(verts: np.ndarray, width: int, height: int) -> np.ndarray:
    """Set every pixel whose center lies inside or on the hull polygon.

    Row-by-row half-plane intersection with integer ceil/floor division:
    exact, no floating point. ``verts`` must come from hull_vertices.
    """
    out = np.zeros((height, width), dtype=bool)
    v = [(int(p[0]), int(p[1])) for p in verts]
    if len(v) == 1:
        x, y = v[0]
        if 0 <= x < width and 0 <= y < height:
            out[y, x] = True
        return out
    if len(v) == 2:  # degenerate segment
        (x1, y1), (x2, y2) = v
        n = max(abs(x2 - x1), abs(y2 - y1))
        for y in range(min(y1, y2), max(y1, y2) + 1):
            for x in range(min(x1, x2), max(x1, x2) + 1):
                # exact on-segment test
                if (x2 - x1) * (y - y1) == (y2 - y1) * (x - x1):
                    if 0 <= x < width and 0 <= y < height:
                        out[y, x] = True
        return out

    ymin = max(0, min(p[1] for p in v))
    ymax = min(height - 1, max(p[1] for p in v))
    edges = [(v[i], v[(i + 1) % len(v)]) for i in range(len(v))]
    for y in range(ymin, ymax + 1):
        lo, hi = 0, width - 1
        empty = False
        for (x1, y1), (x2, y2) in edges:
            dy = y2 - y1
            k = (x2 - x1) * (y - y1) + dy * x1
            # interior condition: cross >= 0  <=>  dy * x <= k
            if dy > 0:
                hi = min(hi, k // dy)
            elif dy < 0:
                # x >= k/dy with dy < 0: exact integer ceil division
                lo = max(lo, -(k // (-dy)))
            else:
                if (x2 - x1) * (y - y1) < 0:
                    empty = True
                    break
        if not empty and lo <= hi:
            out[y, lo : hi + 1] = True
    return out


class Region:
    """One 8-connected pixel blob plus cached geometry.

    Stored as a boolean patch at offset (x0, y0) inside a (frame_w, frame_h)
    image frame. Immutable after construction; cached properties are pure
    functions of the pixel set, so regions are safe to share across threads.
    """

    def __init__(self, local_mask: np.ndarray, x0: int, y0: int, frame_w: int, frame_h: int):
        lm = np.asarray(local_mask, dtype=bool)
        if not lm.any():
            raise EmptyInputError("region must contain at least one pixel")
        self.local_mask = lm
        self.local_mask.flags.writeable = False
        self.x0 = int(x0)
        self.y0 = int(y0)
        self.frame_w = int(frame_w)
        self.frame_h = int(frame_h)

    @classmethod
    def from_pixels(cls, xs, ys, frame_w: int, frame_h: int) -> "Region":
        xs = np.asarray(xs, dtype=np.int64)
        ys = np.asarray(ys, dtype=np.int64)
        x0, y0 = int(xs.min()), int(ys.min())
        lm = np.zeros((int(ys.max()) - y0 + 1, int(xs.max()) - x0 + 1), dtype=bool)
        lm[ys - y0, xs - x0] = True
        return cls(lm, x0, y0, frame_w, frame_h)

    @cached_property
    def area(self) -> int:
        return int(self.local_mask.sum())

    @cached_property
    def pixels(self) -> np.ndarray:
        """(n, 2) global (x, y) coordinates, row-major order."""
        ys, xs = np.nonzero(self.local_mask)
        return np.column_stack([xs + self.x0, ys + self.y0]).astype(np.int64)

    @cached_property
    def centroid(self) -> tuple[float, float]:
        ys, xs = np.nonzero(self.local_mask)
        return (float(xs.mean()) + self.x0, float(ys.mean()) + self.y0)

    @cached_property
    def bbox(self) -> tuple[int, int, int, int]:
        """(x0, y0, width, height) of the tight bounding box."""
        return (self.x0, self.y0, self.local_mask.shape[1], self.local_mask.shape[0])

    @cached_property
    def touches_border(self) -> bool:
        lh, lw = self.local_mask.shape
        return (
            (self.y0 == 0 and self.local_mask[0].any())
            or (self.x0 == 0 and self.local_mask[:, 0].any())
            or (self.y0 + lh == self.frame_h and self.local_mask[-1].any())
            or (self.x0 + lw == self.frame_w and self.local_mask[:, -1].any())
        )

    @cached_property
    def boundary(self) -> np.ndarray:
        """Closed outer boundary chain, (n, 2) global (x, y)."""
        chain = trace_boundary(self.local_mask)
        return np.column_stack([chain[:, 1] + self.x0, chain[:, 0] + self.y0])

    @cached_property
    def _hole_labels(self) -> tuple[np.ndarray, int]:
        # Background components (4-connected) inside a 1-pixel pad; the pad
        # component is the exterior, everything else is a hole.
        padded = np.pad(self.local_mask, 1, constant_values=False)
        lab, n = ndimage.label(~padded, structure=ndimage.generate_binary_structure(2, 1))
        exterior = lab[0, 0]
        hole = (lab > 0) & (lab != exterior)
        return hole[1:-1, 1:-1], int(len(np.unique(lab[1:-1, 1:-1][hole[1:-1, 1:-1]])))

    @cached_property
    def holes(self) -> int:
        return self._hole_labels[1]

    @cached_property
    def hole_area(self) -> int:
        return int(self._hole_labels[0].sum())

    @cached_property
    def filled_mask(self) -> np.ndarray:
        return self.local_mask | self._hole_labels[0]

    @cached_property
    def edge_pixels(self) -> np.ndarray:
        """(n, 2) global (x, y) of region pixels with a non-region 8-neighbor."""
        interior = ndimage.binary_erosion(self.local_mask, structure=_STRUCT8, border_value=0)
        ys, xs = np.nonzero(self.local_mask & ~interior)
        return np.column_stack([xs + self.x0, ys + self.y0]).astype(np.int64)

    @cached_property
    def convex_hull(self) -> np.ndarray:
        """Hull vertex polygon over pixel centers, global integer (x, y).

        Hull extremes are always edge pixels, so only those are fed in.
        """
        return hull_vertices(self.edge_pixels)

    @cached_property
    def hull_local_mask(self) -> np.ndarray:
        local_verts = self.convex_hull - np.array([self.x0, self.y0])
        lh, lw = self.local_mask.shape
        return rasterize_hull(local_verts, lw, lh)

    @cached_property
    def hull_area(self) -> int:
        return int(self.hull_local_mask.sum())

    @cached_property
    def solidity(self) -> float:
        return self.area / self.hull_area

    @cached_property
    def outer_perimeter(self) -> float:
        chain = trace_boundary(self.local_mask)
        return chain_length(chain, closed=True)

    @cached_property
    def perimeter(self) -> float:
        """Outer boundary plus the boundary of every hole."""
        total = self.outer_perimeter
        hole_mask, n = self._hole_labels
        if n:
            lab, k = ndimage.label(hole_mask, structure=ndimage.generate_binary_structure(2, 1))
            for i in range(1, k + 1):
                total += chain_length(trace_boundary(lab == i), closed=True)
        return total

    def to_mask(self) -> BinaryMask:
        """Full-frame BinaryMask with exactly this region's pixels set."""
        full = np.zeros((self.frame_h, self.frame_w), dtype=bool)
        lh, lw = self.local_mask.shape
        full[self.y0 : self.y0 + lh, self.x0 : self.x0 + lw] = self.local_mask
        return BinaryMask(full)

    def distance_map(self) -> np.ndarray:
        """Euclidean distance to the nearest non-region pixel, local frame.

        Pixels just outside the patch count as background, matching the
        border-as-background convention of distance_transform.
        """
        padded = np.pad(self.local_mask, 1, constant_values=False)
        return ndimage.distance_transform_edt(padded)[1:-1, 1:-1]

    def pixel_set(self) -> frozenset:
        return frozenset(map(tuple, self.pixels))

    def __repr__(self) -> str:
        cx, cy = self.centroid
        return f"Region(area={self.area}, centroid=({cx:.1f}, {cy:.1f}))"


def connected_regions(mask: BinaryMask, min_area: int = 1) -> list[Region]:
    """Maximal 8-connected components of the set bits with area >= min_area.

    Components are returned in scan order of their first pixel, so the
    result is deterministic for a given mask.
    """
    if min_area < 1:
        raise ValueError("min_area must be >= 1")
    lab, n = ndimage.label(mask.bits, structure=_STRUCT8)
    if n == 0:
        return []
    regions = []
    for i, sl in enumerate(ndimage.find_objects(lab), start=1):
        local = lab[sl] == i
        if int(local.sum()) < min_area:
            continue
        regions.append(Region(local, sl[1].start, sl[0].start, mask.width, mask.height))
    return regions


class RegionStats:
    """Normalized per-region parameters shared by the confidence measures.

    The cheap fields are computed eagerly; solidity and compactness pull
    the region's cached hull and perimeter only when actually read, since
    many scored regions never need them.
    """

    def __init__(self, centrality, norm_area, coverage, border_fraction, region=None,
                 solidity=None, compactness=None):
        self.centrality = centrality
        self.norm_area = norm_area
        self.coverage = coverage
        self.border_fraction = border_fraction
        self._region = region
        self._solidity = solidity
        self._compactness = compactness

    @property
    def solidity(self) -> float:
        if self._solidity is None:
            self._solidity = min(1.0, self._region.solidity)
        return self._solidity

    @property
    def compactness(self) -> float:
        if self._compactness is None:
            rg = self._region
            p = rg.perimeter
            self._compactness = min(1.0, 4.0 * math.pi * rg.area / (p * p)) if p > 0 else 1.0
        return self._compactness


def centrality(centroid: tuple[float, float], w: int, h: int) -> float:
    """1 at the exact image center, 0 at the farthest corner, linear between."""
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    corners = [(0.0, 0.0), (w - 1.0, 0.0), (0.0, h - 1.0), (w - 1.0, h - 1.0)]
    dmax = max(math.hypot(px - cx, py - cy) for px, py in corners)
    if dmax == 0.0:
        return 1.0
    d = math.hypot(centroid[0] - cx, centroid[1] - cy)
    return 1.0 - d / dmax


def region_stats(rg: Region, w: int, h: int) -> RegionStats:
    """Centrality, normalized area and shape factors for one region."""
    bx0, by0, bw, bh = rg.bbox
    if bx0 < 0 or by0 < 0 or bx0 + bw > w or by0 + bh > h:
        raise ValueError("region pixels outside the stated frame")
    e = rg.edge_pixels
    on_border = ((e[:, 0] == 0) | (e[:, 0] == w - 1) | (e[:, 1] == 0) | (e[:, 1] == h - 1))
    return RegionStats(
        centrality=centrality(rg.centroid, w, h),
        norm_area=rg.area / (w * h),
        coverage=rg.area / (bw * bh),
        border_fraction=float(on_border.mean()),
        region=rg,
    )


def convex_hull_mask(regions: list[Region], w: int, h: int) -> BinaryMask:
    """Rasterized convex hull of the union of all region pixels."""
    if not regions:
        raise EmptyInputError("convex_hull_mask needs at least one region")
    pts = np.vstack([rg.pixels for rg in regions])
    verts = hull_vertices(pts)
    return BinaryMask(rasterize_hull(verts, w, h))


def distance_transform(mask: BinaryMask) -> PlaneMap:
    """Euclidean distance from each set pixel to the nearest unset pixel.

    The image border counts as background, so a fully set mask still gets
    finite distances. Unset pixels hold 0.
    """
    if not mask.bits.any():
        raise EmptyInputError("distance_transform needs at least one set pixel")
    padded = np.pad(mask.bits, 1, constant_values=False)
    d = ndimage.distance_transform_edt(padded)
    return PlaneMap(d[1:-1, 1:-1])
