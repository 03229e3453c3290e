"""Cutting a mesh along seams into independent chart meshes."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components as graph_components

from ..mesh import Edge, Mesh, connected_components, edge_key
from ..seams import SeamEdgeSet

CHARTS_SCHEMA = "seamforge.charts/1"


@dataclass(frozen=True, eq=False)
class Chart:
    """One chart: parent faces plus a local mesh in which seam vertices are split per side."""

    index: int
    faces: np.ndarray            # parent face ids, ascending; row k of mesh.faces is faces[k]
    mesh: Mesh
    parent_vertex: np.ndarray    # local vertex -> parent vertex

    @cached_property
    def boundary_loops(self) -> tuple[tuple[int, ...], ...]:
        return boundary_loops(self.mesh)

    @property
    def area(self) -> float:
        return self.mesh.area

    @cached_property
    def euler_characteristic(self) -> int:
        m = self.mesh
        return m.n_vertices - len(m.adjacency.edge_faces) + m.n_faces

    @property
    def disk_topology(self) -> bool:
        return self.euler_characteristic == 1 and len(self.boundary_loops) == 1

    def to_json(self) -> dict:
        return {
            "index": self.index,
            "faces": self.faces.tolist(),
            "n_vertices": self.mesh.n_vertices,
            "area": round(self.area, 12),
            "euler_characteristic": self.euler_characteristic,
            "disk": self.disk_topology,
            "boundary_loops": [[int(self.parent_vertex[v]) for v in loop] for loop in self.boundary_loops],
        }


def boundary_loops(mesh: Mesh) -> tuple[tuple[int, ...], ...]:
    """Boundary cycles (without repeated start), each oriented along its face and
    starting at its smallest vertex; loops sorted by that vertex."""
    adj = mesh.adjacency
    directed: dict[Edge, tuple[int, int]] = {}
    for f, (a, b, c) in enumerate(mesh.faces.tolist()):
        for u, v in ((a, b), (b, c), (c, a)):
            if len(adj.edge_faces[edge_key(u, v)]) == 1:
                directed[edge_key(u, v)] = (u, v)
    nbrs: dict[int, list[int]] = {}
    for a, b in directed:
        nbrs.setdefault(a, []).append(b)
        nbrs.setdefault(b, []).append(a)
    used: set[Edge] = set()
    loops = []
    for start in sorted(nbrs):
        for first in sorted(nbrs[start]):
            if edge_key(start, first) in used:
                continue
            loop, prev, cur = [start], start, first
            used.add(edge_key(start, first))
            while cur != start:
                loop.append(cur)
                nxt = [n for n in sorted(nbrs[cur]) if edge_key(cur, n) not in used]
                if not nxt:
                    break
                prev, cur = cur, nxt[0]
                used.add(edge_key(prev, cur))
            if directed[edge_key(loop[0], loop[1])] != (loop[0], loop[1]):
                loop = [loop[0]] + loop[:0:-1]
            loops.append(tuple(loop))
    return tuple(sorted(loops))


def cut_mesh(mesh: Mesh, seams: SeamEdgeSet | Iterable[Edge] = ()) -> list[Chart]:
    """Split ``mesh`` into charts along ``seams``.

    Corners meeting at a vertex stay one vertex when their faces share a
    non-seam edge through it; every other corner group becomes its own copy.
    """
    blocked = {edge_key(*e) for e in seams}
    rows, cols = [], []
    corner_of = {}
    for f, tri in enumerate(mesh.faces.tolist()):
        for k, v in enumerate(tri):
            corner_of[(f, v)] = 3 * f + k
    for e, fs in mesh.adjacency.edge_faces.items():
        if len(fs) == 2 and e not in blocked:
            f, g = fs
            for v in e:
                rows.append(corner_of[(f, v)])
                cols.append(corner_of[(g, v)])
    n = 3 * mesh.n_faces
    graph = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    _, label = graph_components(graph, directed=False)

    charts = []
    for idx, patch in enumerate(connected_components(mesh, blocked_edges=blocked)):
        faces = np.array(sorted(patch.faces), dtype=np.int64)
        corners = (3 * faces[:, None] + np.arange(3)).ravel()
        parent = mesh.faces[faces].ravel()
        first: dict[int, int] = {}
        for c, lab in zip(corners.tolist(), label[corners].tolist()):
            first.setdefault(lab, c)
        copies = sorted(first, key=lambda lab: (int(mesh.faces.ravel()[first[lab]]), first[lab]))
        local = {lab: i for i, lab in enumerate(copies)}
        local_faces = np.array([local[lab] for lab in label[corners].tolist()], dtype=np.int64).reshape(-1, 3)
        parent_vertex = np.empty(len(copies), dtype=np.int64)
        parent_vertex[local_faces.ravel()] = parent
        charts.append(Chart(idx, faces, Mesh(mesh.positions[parent_vertex], local_faces), parent_vertex))
    return charts


def charts_to_json(charts: list[Chart]) -> dict:
    return {"schema": CHARTS_SCHEMA, "charts": [c.to_json() for c in charts]}


def disk_cut_edges(chart: Chart) -> list[Edge]:
    """Local edges whose cutting turns ``chart`` into a topological disk.

    Every interior edge not crossed by a breadth-first dual spanning tree is a
    candidate; dangling candidates are pruned until each remaining endpoint
    meets at least two cut or boundary edges.  A closed sphere gets a two-edge
    slit through vertex 0 instead.
    """
    mesh = chart.mesh
    ef = mesh.adjacency.edge_faces
    seen = np.zeros(mesh.n_faces, dtype=bool)
    seen[0] = True
    tree: set[Edge] = set()
    queue = [0]
    for f in queue:
        a, b, c = mesh.faces[f].tolist()
        for e in sorted((edge_key(a, b), edge_key(b, c), edge_key(c, a))):
            for g in ef[e]:
                if not seen[g]:
                    seen[g] = True
                    tree.add(e)
                    queue.append(g)
    boundary = {e for e, fs in ef.items() if len(fs) == 1}
    cut = {e for e, fs in ef.items() if len(fs) == 2 and e not in tree}
    degree: dict[int, int] = {}
    for e in cut | boundary:
        for v in e:
            degree[v] = degree.get(v, 0) + 1
    changed = True
    while changed:
        changed = False
        for e in sorted(cut):
            if degree[e[0]] == 1 or degree[e[1]] == 1:
                cut.discard(e)
                degree[e[0]] -= 1
                degree[e[1]] -= 1
                changed = True
    if not cut and not boundary:
        nbrs = mesh.adjacency.neighbors[0]
        cut = {edge_key(0, nbrs[0]), edge_key(0, nbrs[len(nbrs) // 2])}
    return sorted(cut)


def auto_cut(mesh: Mesh, seams: SeamEdgeSet | Iterable[Edge] = ()) -> tuple[SeamEdgeSet, list[Edge]]:
    """Add cuts inside every non-disk chart; returns the enlarged seam set and the added parent edges."""
    seams = SeamEdgeSet.of(seams)
    added: set[Edge] = set()
    for chart in cut_mesh(mesh, seams):
        if chart.disk_topology:
            continue
        for a, b in disk_cut_edges(chart):
            e = edge_key(chart.parent_vertex[a], chart.parent_vertex[b])
            if e not in seams:
                added.add(e)
    return SeamEdgeSet(seams.edges | added), sorted(added)
