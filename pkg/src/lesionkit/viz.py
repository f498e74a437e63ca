"""Hand-rolled SVG renderers for the report artifacts.

Deterministic output (no timestamps, no library version strings), so two
runs with the same inputs produce identical files.
"""

from __future__ import annotations

import numpy as np


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def bar_chart_svg(labels: list[str], values: list[float], title: str = "") -> str:
    """Vertical bar chart with value captions, values expected in [0, 1]."""
    n = len(labels)
    bar_w, gap, left, top, plot_h = 52, 18, 50, 40, 220
    width = left + n * (bar_w + gap) + 20
    height = top + plot_h + 60
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif">',
        f'<text x="{width / 2:.0f}" y="22" text-anchor="middle" font-size="15">{_esc(title)}</text>',
    ]
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = top + plot_h * (1 - frac)
        parts.append(
            f'<line x1="{left}" y1="{y:.1f}" x2="{width - 15}" y2="{y:.1f}" stroke="#ddd"/>'
            f'<text x="{left - 6}" y="{y + 4:.1f}" text-anchor="end" font-size="11">{frac:.2f}</text>'
        )
    for i, (lab, val) in enumerate(zip(labels, values)):
        x = left + i * (bar_w + gap) + gap / 2
        bh = plot_h * max(0.0, min(1.0, val))
        y = top + plot_h - bh
        parts.append(f'<rect x="{x:.1f}" y="{y:.1f}" width="{bar_w}" height="{bh:.1f}" fill="#4878a8"/>')
        parts.append(
            f'<text x="{x + bar_w / 2:.1f}" y="{y - 5:.1f}" text-anchor="middle" font-size="11">{val:.3f}</text>'
        )
        parts.append(
            f'<text x="{x + bar_w / 2:.1f}" y="{top + plot_h + 16}" text-anchor="middle" '
            f'font-size="11">{_esc(lab)}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts)


def heatmap_svg(
    matrix: np.ndarray,
    labels: list[str],
    title: str = "",
    zero_diagonal: bool = False,
) -> str:
    """Square heatmap of a confusion matrix, optionally hiding the diagonal
    so the confusions stand out."""
    m = np.asarray(matrix, dtype=np.float64).copy()
    if zero_diagonal:
        np.fill_diagonal(m, 0)
    n = m.shape[0]
    cell, left, top = 46, 90, 60
    width = left + n * cell + 20
    height = top + n * cell + 40
    peak = m.max() if m.max() > 0 else 1.0
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif">',
        f'<text x="{width / 2:.0f}" y="24" text-anchor="middle" font-size="15">{_esc(title)}</text>',
    ]
    for i in range(n):
        parts.append(
            f'<text x="{left - 8}" y="{top + i * cell + cell / 2 + 4}" text-anchor="end" '
            f'font-size="11">{_esc(labels[i])}</text>'
        )
        parts.append(
            f'<text x="{left + i * cell + cell / 2}" y="{top - 8}" text-anchor="middle" '
            f'font-size="11">{_esc(labels[i])}</text>'
        )
        for j in range(n):
            v = m[i, j] / peak
            shade = int(round(255 - 200 * v))
            color = f"rgb({shade},{shade},255)" if v > 0 else "rgb(255,255,255)"
            x, y = left + j * cell, top + i * cell
            parts.append(
                f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="{color}" stroke="#999"/>'
            )
            parts.append(
                f'<text x="{x + cell / 2}" y="{y + cell / 2 + 4}" text-anchor="middle" '
                f'font-size="11">{int(m[i, j])}</text>'
            )
    parts.append("</svg>")
    return "\n".join(parts)
