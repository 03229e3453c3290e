"""Shelf packing of flattened charts into the unit square."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .flatten import UVChart, signed_areas


@dataclass(frozen=True, eq=False)
class PackedAtlas:
    charts: list[UVChart]
    boxes: np.ndarray       # (n, 4) rows of x0, y0, x1, y1 in the unit square
    margin: float


def normalize_chart(uvc: UVChart) -> UVChart:
    """Scale so UV area equals 3D area, then move the bounding box to the origin."""
    area_uv = float(np.abs(signed_areas(uvc.uv, uvc.chart.mesh.faces)).sum())
    scale = math.sqrt(uvc.chart.area / area_uv) if area_uv > 0 else 1.0
    uv = uvc.uv * scale
    return uvc.with_uv(uv - uv.min(axis=0))


def _shelves(sizes: np.ndarray, order: Sequence[int], width: float, pad: float):
    pos = np.zeros((len(sizes), 2))
    x = y = shelf_h = 0.0
    used_w = 0.0
    for i in order:
        w, h = sizes[i]
        if x > 0 and x + w > width * (1 + 1e-12):
            y += shelf_h + pad
            x = shelf_h = 0.0
        pos[i] = (x, y)
        used_w = max(used_w, x + w)
        x += w + pad
        shelf_h = max(shelf_h, h)
    return pos, used_w, y + shelf_h


def pack_charts(uvcharts: Sequence[UVChart], margin: float = 0.01) -> PackedAtlas:
    """Normalize charts, shelf-pack their boxes (tallest first) and fit the result in
    ``[margin, 1 - margin]^2``; the shelf width is chosen to make the layout squarest."""
    if not uvcharts:
        raise ValueError("no charts to pack")
    if not 0 <= margin < 0.5:
        raise ValueError("margin must be in [0, 0.5)")
    charts = [normalize_chart(c) for c in uvcharts]
    sizes = np.array([c.uv.max(axis=0) for c in charts])
    pad = margin * math.sqrt(float(np.prod(sizes, axis=1).sum()))
    order = sorted(range(len(charts)), key=lambda i: (-round(float(sizes[i, 1]), 12), i))
    best = None
    widths = np.cumsum([sizes[i, 0] for i in order]) + pad * np.arange(len(order))
    for width in widths:
        pos, w, h = _shelves(sizes, order, float(width), pad)
        side = max(w, h)
        if best is None or side < best[0] * (1 - 1e-12):
            best = (side, pos)
    side, pos = best
    s = (1 - 2 * margin) / side if side > 0 else 1.0
    out, boxes = [], []
    for c, p, size in zip(charts, pos, sizes):
        out.append(c.with_uv((c.uv + p) * s + margin))
        lo = p * s + margin
        boxes.append([lo[0], lo[1], lo[0] + size[0] * s, lo[1] + size[1] * s])
    return PackedAtlas(out, np.array(boxes), margin)
