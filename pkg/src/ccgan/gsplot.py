"""CSV and SVG renderings of a pair of mrlt distributions."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

SVG_W, SVG_H = 900, 420
MARGIN_L, MARGIN_B, MARGIN_T = 60, 40, 20
COLOR_REAL, COLOR_FAKE = "#4878a8", "#c05040"


def mrlt_csv(mrlt_real, mrlt_fake, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["i", "mrlt_real", "mrlt_fake"])
        for i, (a, b) in enumerate(zip(mrlt_real, mrlt_fake)):
            w.writerow([i, f"{a:.9g}", f"{b:.9g}"])


def mrlt_svg(mrlt_real, mrlt_fake, path: str | Path, max_bins: int = 40) -> None:
    """Grouped bar chart of the two distributions over hole counts."""
    a = np.asarray(mrlt_real, dtype=float)
    b = np.asarray(mrlt_fake, dtype=float)
    bins = min(max_bins, a.size)
    top = max(float(a[:bins].max(initial=0.0)), float(b[:bins].max(initial=0.0)), 1e-9)
    plot_w = SVG_W - MARGIN_L - 20
    plot_h = SVG_H - MARGIN_T - MARGIN_B
    group_w = plot_w / bins
    bar_w = group_w * 0.4

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}">',
        f'<rect width="{SVG_W}" height="{SVG_H}" fill="white"/>',
        f'<line x1="{MARGIN_L}" y1="{MARGIN_T}" x2="{MARGIN_L}" '
        f'y2="{SVG_H - MARGIN_B}" stroke="black"/>',
        f'<line x1="{MARGIN_L}" y1="{SVG_H - MARGIN_B}" x2="{SVG_W - 20}" '
        f'y2="{SVG_H - MARGIN_B}" stroke="black"/>',
    ]
    for i in range(bins):
        x0 = MARGIN_L + i * group_w
        for off, val, color in ((0.06, a[i], COLOR_REAL), (0.52, b[i], COLOR_FAKE)):
            h = plot_h * float(val) / top
            parts.append(
                f'<rect x="{x0 + off * group_w:.2f}" '
                f'y="{SVG_H - MARGIN_B - h:.2f}" width="{bar_w:.2f}" '
                f'height="{h:.2f}" fill="{color}"/>'
            )
        if bins <= 20 or i % 5 == 0:
            parts.append(
                f'<text x="{x0 + group_w / 2:.2f}" y="{SVG_H - MARGIN_B + 16}" '
                f'font-size="11" text-anchor="middle">{i}</text>'
            )
    parts.append(
        f'<text x="{MARGIN_L + 10}" y="{MARGIN_T + 12}" font-size="12" '
        f'fill="{COLOR_REAL}">training set</text>'
    )
    parts.append(
        f'<text x="{MARGIN_L + 10}" y="{MARGIN_T + 28}" font-size="12" '
        f'fill="{COLOR_FAKE}">generated set</text>'
    )
    parts.append(
        f'<text x="{(MARGIN_L + SVG_W) / 2:.0f}" y="{SVG_H - 6}" font-size="12" '
        f'text-anchor="middle">number of one-dimensional holes</text>'
    )
    parts.append("</svg>")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(parts), encoding="utf-8")
