"""Brute-force reference implementations used to check the fast paths.

Everything here is deliberately naive: BFS flood fill, gift wrapping,
exhaustive nearest-false scans. Keep these independent of lesionkit
internals; they are the ground truth the tests compare against.
"""

from __future__ import annotations

import math
from collections import deque

import numpy as np


def flood_fill_components(bits: np.ndarray) -> list[set]:
    """8-connected components of a boolean array via BFS. Returns pixel sets
    of (x, y) tuples."""
    h, w = bits.shape
    seen = np.zeros_like(bits, dtype=bool)
    comps = []
    for y in range(h):
        for x in range(w):
            if bits[y, x] and not seen[y, x]:
                comp = set()
                q = deque([(x, y)])
                seen[y, x] = True
                while q:
                    cx, cy = q.popleft()
                    comp.add((cx, cy))
                    for dy in (-1, 0, 1):
                        for dx in (-1, 0, 1):
                            nx, ny = cx + dx, cy + dy
                            if 0 <= nx < w and 0 <= ny < h and bits[ny, nx] and not seen[ny, nx]:
                                seen[ny, nx] = True
                                q.append((nx, ny))
                comps.append(comp)
    return comps


def gift_wrap_hull(points: list[tuple[int, int]]) -> list[tuple[int, int]]:
    """Jarvis march over integer points, exact arithmetic."""
    pts = sorted(set(map(tuple, points)))
    if len(pts) <= 2:
        return pts
    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    def dist2(a, b):
        return (a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2
    start = min(pts)
    hull = [start]
    cur = start
    while True:
        cand = pts[0] if pts[0] != cur else pts[1]
        for p in pts:
            if p == cur:
                continue
            c = cross(cur, cand, p)
            if c < 0 or (c == 0 and dist2(cur, p) > dist2(cur, cand)):
                cand = p
        if cand == start:
            break
        hull.append(cand)
        cur = cand
        if len(hull) > len(pts) + 1:
            raise RuntimeError("gift wrap failed")
    return hull


def point_in_hull(q: tuple[int, int], hull: list[tuple[int, int]]) -> bool:
    """Exact integer test: q inside or on the polygon from gift_wrap_hull."""
    if len(hull) == 1:
        return q == hull[0]
    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    if len(hull) == 2:
        a, b = hull
        if cross(a, b, q) != 0:
            return False
        return min(a[0], b[0]) <= q[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= q[1] <= max(a[1], b[1])
    n = len(hull)
    signs = [cross(hull[i], hull[(i + 1) % n], q) for i in range(n)]
    return all(s >= 0 for s in signs) or all(s <= 0 for s in signs)


def hull_mask_oracle(bits: np.ndarray) -> np.ndarray:
    """Rasterized convex hull of the set pixels: per-pixel exact membership."""
    h, w = bits.shape
    ys, xs = np.nonzero(bits)
    hull = gift_wrap_hull(list(zip(xs.tolist(), ys.tolist())))
    out = np.zeros_like(bits, dtype=bool)
    for y in range(h):
        for x in range(w):
            out[y, x] = point_in_hull((x, y), hull)
    return out


def distance_oracle(bits: np.ndarray) -> np.ndarray:
    """Exhaustive nearest-false-pixel scan; border counts as background."""
    h, w = bits.shape
    falses = [(x, y) for y in range(h) for x in range(w) if not bits[y, x]]
    out = np.zeros((h, w), dtype=np.float64)
    for y in range(h):
        for x in range(w):
            if not bits[y, x]:
                continue
            best = min(x + 1, y + 1, w - x, h - y) ** 2  # nearest out-of-frame pixel
            for fx, fy in falses:
                d2 = (fx - x) ** 2 + (fy - y) ** 2
                if d2 < best:
                    best = d2
            out[y, x] = math.sqrt(best)
    return out


def histogram_oracle(values: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """Per-bin counting with half-open bins, last bin closed."""
    counts = np.zeros(len(edges) - 1, dtype=np.int64)
    for v in np.ravel(values):
        for i in range(len(edges) - 1):
            last = i == len(edges) - 2
            if edges[i] <= v < edges[i + 1] or (last and v == edges[i + 1]):
                counts[i] += 1
                break
    return counts
