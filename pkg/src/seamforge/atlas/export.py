"""Atlas OBJ, SVG layout and PLY seam exports.  All writers are byte-deterministic."""

from __future__ import annotations

import io
from typing import Iterable, Sequence

import numpy as np

from ..mesh import Mesh
from ..seams import SeamChain
from .flatten import UVChart

PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf", "#393b79", "#e7ba52", "#637939", "#ad494a", "#843c39", "#5254a3",
)


def color(index: int) -> str:
    return PALETTE[index % len(PALETTE)]


def atlas_corner_uvs(mesh: Mesh, uvcharts: Sequence[UVChart]) -> np.ndarray:
    """``(3F, 2)`` per-corner UVs of the parent mesh gathered from the charts."""
    out = np.full((3 * mesh.n_faces, 2), np.nan)
    for uvc in uvcharts:
        corners = (3 * uvc.chart.faces[:, None] + np.arange(3)).ravel()
        out[corners] = uvc.uv[uvc.chart.mesh.faces.ravel()]
    if np.isnan(out).any():
        raise ValueError("charts do not cover every face")
    return out


def atlas_mesh(mesh: Mesh, uvcharts: Sequence[UVChart]) -> Mesh:
    return Mesh(mesh.positions, mesh.faces, atlas_corner_uvs(mesh, uvcharts))


def layout_svg(uvcharts: Sequence[UVChart], size: int = 1024) -> str:
    """Unit-square layout; one group per chart with filled triangles and boundary outlines."""
    def pt(p):
        return f"{p[0] * size:.3f},{(1 - p[1]) * size:.3f}"

    out = io.StringIO()
    out.write(f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
              f'viewBox="0 0 {size} {size}">\n')
    out.write(f'<rect width="{size}" height="{size}" fill="#ffffff"/>\n')
    for k, uvc in enumerate(uvcharts):
        out.write(f'<g id="chart{uvc.chart.index}" fill="{color(k)}" stroke="none">\n')
        for tri in uvc.chart.mesh.faces.tolist():
            out.write(f'<polygon points="{" ".join(pt(uvc.uv[v]) for v in tri)}"/>\n')
        for loop in uvc.chart.boundary_loops:
            pts = " ".join(pt(uvc.uv[v]) for v in list(loop) + [loop[0]])
            out.write(f'<polyline points="{pts}" fill="none" stroke="#000000" stroke-width="1"/>\n')
        out.write("</g>\n")
    out.write("</svg>\n")
    return out.getvalue()


def seams_ply(mesh: Mesh, chains: Iterable[SeamChain]) -> str:
    """ASCII PLY with the mesh faces and one colored edge element per seam edge."""
    edges = []
    for k, chain in enumerate(chains):
        hexcol = color(k)
        rgb = tuple(int(hexcol[i:i + 2], 16) for i in (1, 3, 5))
        edges += [(a, b) + rgb for a, b in zip(chain.vertices, chain.vertices[1:])]
    out = io.StringIO()
    out.write("ply\nformat ascii 1.0\n")
    out.write(f"element vertex {mesh.n_vertices}\nproperty float x\nproperty float y\nproperty float z\n")
    out.write(f"element face {mesh.n_faces}\nproperty list uchar int vertex_indices\n")
    out.write(f"element edge {len(edges)}\nproperty int vertex1\nproperty int vertex2\n"
              "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n")
    for p in mesh.positions.tolist():
        out.write("%.9g %.9g %.9g\n" % tuple(p))
    for f in mesh.faces.tolist():
        out.write("3 %d %d %d\n" % tuple(f))
    for e in edges:
        out.write("%d %d %d %d %d\n" % e)
    return out.getvalue()
