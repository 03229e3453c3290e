"""Chart flattening: Tutte embedding and least-squares conformal maps."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix
from scipy.sparse.linalg import MatrixRankWarning, spsolve

from ..errors import NonDiskError, SingularSystemError
from .chart import Chart

log = logging.getLogger(__name__)

# UV triangles with |area| at or below this fraction of the mean count as degenerate
DEGENERATE_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class UVChart:
    chart: Chart
    uv: np.ndarray      # (n_local_vertices, 2)
    method: str

    @cached_property
    def signed_areas(self) -> np.ndarray:
        return signed_areas(self.uv, self.chart.mesh.faces)

    @property
    def flips(self) -> int:
        return int((self.signed_areas < 0).sum())

    def with_uv(self, uv: np.ndarray) -> "UVChart":
        return UVChart(self.chart, uv, self.method)


def signed_areas(uv: np.ndarray, faces: np.ndarray) -> np.ndarray:
    p = uv[faces]
    d1, d2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def _require_disk(chart: Chart) -> None:
    if not chart.disk_topology:
        raise NonDiskError(
            f"chart {chart.index} is not a disk: euler characteristic {chart.euler_characteristic}, "
            f"{len(chart.boundary_loops)} boundary loop(s)")


def _solve(matrix, rhs) -> np.ndarray:
    with warnings.catch_warnings():
        warnings.simplefilter("error", MatrixRankWarning)
        try:
            x = spsolve(csr_matrix(matrix), rhs)
        except (MatrixRankWarning, RuntimeError) as exc:
            raise SingularSystemError(str(exc)) from exc
    x = np.asarray(x, dtype=np.float64).reshape(rhs.shape)
    if not np.isfinite(x).all():
        raise SingularSystemError("solver returned non-finite values")
    return x


def flatten_tutte(chart: Chart) -> UVChart:
    """Boundary on the unit circle by arc length; interior vertices at the mean of their neighbors."""
    _require_disk(chart)
    mesh = chart.mesh
    loop = max(chart.boundary_loops, key=len)
    pos = mesh.positions[list(loop)]
    seg = np.linalg.norm(np.roll(pos, -1, axis=0) - pos, axis=1)
    t = np.concatenate([[0.0], np.cumsum(seg)[:-1]]) / seg.sum()
    uv = np.zeros((mesh.n_vertices, 2))
    uv[list(loop)] = np.stack([np.cos(2 * np.pi * t), np.sin(2 * np.pi * t)], axis=1)

    is_boundary = np.zeros(mesh.n_vertices, dtype=bool)
    is_boundary[list(loop)] = True
    interior = np.flatnonzero(~is_boundary)
    if interior.size:
        slot = np.full(mesh.n_vertices, -1)
        slot[interior] = np.arange(interior.size)
        rows, cols, vals = [], [], []
        rhs = np.zeros((interior.size, 2))
        for i, v in enumerate(interior.tolist()):
            nbrs = mesh.adjacency.neighbors[v]
            rows.append(i)
            cols.append(i)
            vals.append(float(len(nbrs)))
            for n in nbrs:
                if is_boundary[n]:
                    rhs[i] += uv[n]
                else:
                    rows.append(i)
                    cols.append(int(slot[n]))
                    vals.append(-1.0)
        lap = coo_matrix((vals, (rows, cols)), shape=(interior.size, interior.size))
        uv[interior] = _solve(lap, rhs)
    if signed_areas(uv, mesh.faces).sum() < 0:
        uv[:, 1] *= -1  # face winding opposite to the boundary walk
    return UVChart(chart, uv, "tutte")


def local_frames(mesh):
    """Per-triangle 2D coordinates of its corners in an orthonormal in-plane frame."""
    p = mesh.positions[mesh.faces]
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    x = e1 / np.linalg.norm(e1, axis=1, keepdims=True)
    n = np.cross(e1, e2)
    y = np.cross(n / np.linalg.norm(n, axis=1, keepdims=True), x)
    q = np.zeros((len(p), 3, 2))
    q[:, 1, 0] = np.linalg.norm(e1, axis=1)
    q[:, 2, 0] = np.einsum("ij,ij->i", e2, x)
    q[:, 2, 1] = np.einsum("ij,ij->i", e2, y)
    return q


def _pins(chart: Chart) -> tuple[int, int]:
    verts = sorted({v for loop in chart.boundary_loops for v in loop})
    pos = chart.mesh.positions[verts]
    d = np.linalg.norm(pos[:, None] - pos[None], axis=2)
    i, j = np.unravel_index(int(np.argmax(d)), d.shape)  # first max in row-major order
    return verts[min(i, j)], verts[max(i, j)]


def flatten_lscm(chart: Chart) -> UVChart:
    """Least-squares conformal map with the farthest boundary pair pinned.

    Flips are not prevented; check :attr:`UVChart.flips`.
    """
    mesh = chart.mesh
    if mesh.n_vertices < 3:
        raise SingularSystemError(f"chart {chart.index} has fewer than 3 vertices")
    _require_disk(chart)
    a, b = _pins(chart)
    dist = float(np.linalg.norm(mesh.positions[a] - mesh.positions[b]))
    q = local_frames(mesh)
    area2 = q[:, 1, 0] * q[:, 2, 1]  # twice the triangle area
    # complex weights W_j = q_{j+2} - q_{j+1}, scaled by 1/sqrt(2A)
    w = np.roll(q, -2, axis=1) - np.roll(q, -1, axis=1)
    w = w / np.sqrt(area2)[:, None, None]
    nv, nf = mesh.n_vertices, mesh.n_faces
    rows, cols, vals = [], [], []
    for k in range(3):
        vid = mesh.faces[:, k]
        re, im = w[:, k, 0], w[:, k, 1]
        f = np.arange(nf)
        # real row: Re(W) u - Im(W) v ; imaginary row: Im(W) u + Re(W) v
        rows += [2 * f, 2 * f, 2 * f + 1, 2 * f + 1]
        cols += [vid, nv + vid, vid, nv + vid]
        vals += [re, -im, im, re]
    A = coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                   shape=(2 * nf, 2 * nv)).tocsc()
    pinned = np.array([a, nv + a, b, nv + b])
    pin_val = np.array([0.0, 0.0, dist, 0.0])
    free = np.setdiff1d(np.arange(2 * nv), pinned)
    Af, Ap = A[:, free], A[:, pinned]
    rhs = -(Ap @ pin_val)
    x = _solve((Af.T @ Af), Af.T @ rhs)
    sol = np.zeros(2 * nv)
    sol[free] = x
    sol[pinned] = pin_val
    uv = np.stack([sol[:nv], sol[nv:]], axis=1)
    if signed_areas(uv, mesh.faces).sum() < 0:
        uv[:, 1] *= -1
    return UVChart(chart, uv, "lscm")


def flatten_chart(chart: Chart, method: str = "tutte", fallback: bool = True) -> UVChart:
    """Flatten with ``method``; LSCM falls back to Tutte on a singular system or any flip."""
    if method == "tutte":
        return flatten_tutte(chart)
    if method != "lscm":
        raise ValueError(f"unknown flattener {method!r}")
    try:
        out = flatten_lscm(chart)
    except SingularSystemError:
        if not fallback:
            raise
        log.info("chart %d: singular LSCM system, using Tutte", chart.index)
        return flatten_tutte(chart)
    if out.flips and fallback:
        log.info("chart %d: LSCM flipped %d triangles, using Tutte", chart.index, out.flips)
        return flatten_tutte(chart)
    return out
