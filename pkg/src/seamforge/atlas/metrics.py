"""UV atlas quality metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from ..errors import DegenerateMeshError
from ..mesh import Edge, Mesh
from .flatten import DEGENERATE_RTOL, UVChart, local_frames, signed_areas

REPORT_SCHEMA = "seamforge.atlas_report/1"

# report fields and their display column names
TABLE_COLUMNS = {
    "overall_dist": "Overall Dist",
    "angular_dist": "Angular Dist",
    "n_charts": "# Charts",
    "compactness": "Island Compact",
    "convexity": "Island Convex",
    "seam_len_ratio": "SeamLen/Area",
    "jaggedness": "Boundary Jagged",
}


def convex_hull(points: np.ndarray) -> np.ndarray:
    """Counter-clockwise hull vertices (monotone chain); collinear points dropped."""
    pts = sorted(set(map(tuple, np.asarray(points, dtype=np.float64).tolist())))
    if len(pts) <= 2:
        return np.array(pts).reshape(-1, 2)

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    def half(seq):
        out = []
        for p in seq:
            while len(out) >= 2 and cross(out[-2], out[-1], p) <= 0:
                out.pop()
            out.append(p)
        return out[:-1]

    return np.array(half(pts) + half(reversed(pts)))


def polygon_area(poly: np.ndarray) -> float:
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def compactness(area: float, perimeter: float) -> float:
    return 4 * math.pi * area / perimeter ** 2


def resample_loop(points: np.ndarray, n: int) -> np.ndarray:
    """``n`` points at uniform arc-length steps around a closed polyline, starting at ``points[0]``."""
    closed = np.vstack([points, points[:1]])
    seg = np.linalg.norm(np.diff(closed, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    t = np.arange(n) * (s[-1] / n)
    return np.stack([np.interp(t, s, closed[:, 0]), np.interp(t, s, closed[:, 1])], axis=1)


def curvature_proxy(samples: np.ndarray) -> np.ndarray:
    """``|p[i-1] - 2 p[i] + p[i+1]|`` with cyclic indexing."""
    return np.linalg.norm(np.roll(samples, 1, axis=0) - 2 * samples + np.roll(samples, -1, axis=0), axis=1)


def singular_values(q: np.ndarray, uv: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Singular values (s1 >= s2) of the per-triangle linear map from local 3D frame to UV.

    ``q`` and ``uv`` are ``(F, 3, 2)`` corner coordinates.
    """
    src = np.stack([q[:, 1] - q[:, 0], q[:, 2] - q[:, 0]], axis=2)     # columns are edges
    dst = np.stack([uv[:, 1] - uv[:, 0], uv[:, 2] - uv[:, 0]], axis=2)
    J = dst @ np.linalg.inv(src)
    a, b, c, d = J[:, 0, 0], J[:, 0, 1], J[:, 1, 0], J[:, 1, 1]
    e, f = (a + d) / 2, (a - d) / 2
    g, h = (c + b) / 2, (c - b) / 2
    qn, rn = np.hypot(e, h), np.hypot(f, g)
    return qn + rn, np.abs(qn - rn)


def conformality(s1, s2):
    return 2 * s1 * s2 / (s1 ** 2 + s2 ** 2)


@dataclass
class ChartMetrics:
    index: int
    area_3d: float
    area_uv: float
    perimeter_uv: float
    compactness: float
    convexity: float
    jaggedness: float
    n_boundary_samples: int

    def to_json(self) -> dict:
        return {k: (round(v, 12) if isinstance(v, float) else v) for k, v in self.__dict__.items()}


@dataclass
class AtlasReport:
    overall_dist: float
    angular_dist: float
    n_charts: int
    compactness: float
    convexity: float
    seam_len_ratio: float
    jaggedness: float
    jaggedness_raw: float
    degenerate: int
    flattener: str
    samples_per_loop: int
    charts: list[ChartMetrics] = field(default_factory=list)
    auto_cut_edges: int = 0

    def to_json(self) -> dict:
        def r(x):
            return round(float(x), 12)

        return {
            "schema": REPORT_SCHEMA,
            "table": {TABLE_COLUMNS[k]: (getattr(self, k) if k == "n_charts" else r(getattr(self, k)))
                      for k in TABLE_COLUMNS},
            "overall_dist": r(self.overall_dist),
            "angular_dist": r(self.angular_dist),
            "n_charts": self.n_charts,
            "compactness": r(self.compactness),
            "convexity": r(self.convexity),
            "seam_len_ratio": r(self.seam_len_ratio),
            "jaggedness": r(self.jaggedness),
            "jaggedness_raw": r(self.jaggedness_raw),
            "degenerate": self.degenerate,
            "flattener": self.flattener,
            "samples_per_loop": self.samples_per_loop,
            "auto_cut_edges": self.auto_cut_edges,
            "charts": [c.to_json() for c in self.charts],
        }


def chart_metrics(uvc: UVChart, samples_per_loop: int = 128) -> tuple[ChartMetrics, list[float], list[float]]:
    """Per-chart island metrics plus the raw and spacing-normalized curvature samples."""
    uv, mesh = uvc.uv, uvc.chart.mesh
    area_uv = float(np.abs(signed_areas(uv, mesh.faces)).sum())
    perimeter, raw, norm = 0.0, [], []
    for loop in uvc.chart.boundary_loops:
        pts = uv[list(loop)]
        length = float(np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1).sum())
        perimeter += length
        if length <= 0:
            continue
        kappa = curvature_proxy(resample_loop(pts, samples_per_loop))
        raw += kappa.tolist()
        norm += (kappa / (length / samples_per_loop)).tolist()
    hull = polygon_area(convex_hull(uv))
    cm = ChartMetrics(
        index=uvc.chart.index,
        area_3d=uvc.chart.area,
        area_uv=area_uv,
        perimeter_uv=perimeter,
        compactness=compactness(area_uv, perimeter) if perimeter > 0 else 0.0,
        convexity=area_uv / hull if hull > 0 else 0.0,
        jaggedness=float(np.mean(norm)) if norm else 0.0,
        n_boundary_samples=len(norm),
    )
    return cm, raw, norm


def compute_metrics(mesh: Mesh, uvcharts: Sequence[UVChart], seams: Iterable[Edge] = (),
                    samples_per_loop: int = 128) -> AtlasReport:
    """Distortion, island and seam metrics of a flattened atlas.

    UV triangles with (numerically) zero area are left out of both distortion
    measures and counted in ``degenerate``.
    """
    if not uvcharts:
        raise ValueError("no charts to measure")
    if samples_per_loop < 3:
        raise ValueError("samples_per_loop must be at least 3")
    a3d, auv, s1s, s2s = [], [], [], []
    for uvc in uvcharts:
        faces = uvc.chart.mesh.faces
        a3d.append(uvc.chart.mesh.face_areas)
        auv.append(np.abs(signed_areas(uvc.uv, faces)))
        s1, s2 = singular_values(local_frames(uvc.chart.mesh), uvc.uv[faces])
        s1s.append(s1)
        s2s.append(s2)
    a3d, auv = np.concatenate(a3d), np.concatenate(auv)
    s1, s2 = np.concatenate(s1s), np.concatenate(s2s)
    ok = (auv > DEGENERATE_RTOL * max(auv.mean(), 1e-300)) & (a3d > 0) & (s2 > 0)
    degenerate = int((~ok).sum())
    if not ok.any():
        raise DegenerateMeshError("every UV triangle is degenerate")
    w = a3d[ok] / a3d[ok].sum()
    sigma = (auv[ok] / auv[ok].sum()) / w     # UV area rescaled to the 3D total
    overall = float(np.dot(w, np.maximum(sigma, 1 / sigma)))
    angular = float(np.dot(w, conformality(s1[ok], s2[ok])))

    per_chart, raw_all, norm_all = [], [], []
    for uvc in uvcharts:
        cm, raw, norm = chart_metrics(uvc, samples_per_loop)
        per_chart.append(cm)
        raw_all += raw
        norm_all += norm
    weights = np.array([c.area_3d for c in per_chart])
    weights = weights / weights.sum()
    seam_len = sum(float(np.linalg.norm(mesh.positions[a] - mesh.positions[b])) for a, b in seams)
    methods = sorted({u.method for u in uvcharts})
    return AtlasReport(
        overall_dist=overall,
        angular_dist=angular,
        n_charts=len(uvcharts),
        compactness=float(np.dot(weights, [c.compactness for c in per_chart])),
        convexity=float(np.dot(weights, [c.convexity for c in per_chart])),
        seam_len_ratio=seam_len / mesh.area,
        jaggedness=float(np.mean(norm_all)) if norm_all else 0.0,
        jaggedness_raw=float(np.mean(raw_all)) if raw_all else 0.0,
        degenerate=degenerate,
        flattener="+".join(methods),
        samples_per_loop=samples_per_loop,
        charts=per_chart,
    )
