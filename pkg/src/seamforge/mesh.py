"""Indexed triangle mesh, adjacency tables, patches and dual-graph components."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional

import numpy as np

from .errors import DegenerateMeshError, MeshError, NonManifoldError

Edge = tuple[int, int]


def edge_key(a: int, b: int) -> Edge:
    """Canonical (min, max) form of an undirected edge."""
    a, b = int(a), int(b)
    return (a, b) if a < b else (b, a)


def triangle_areas(positions: np.ndarray, faces: np.ndarray) -> np.ndarray:
    if len(faces) == 0:
        return np.zeros(0)
    p = positions[faces]
    cross = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    return 0.5 * np.linalg.norm(cross, axis=1)


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Mesh:
    """Triangle mesh with optional per-corner UVs (``3 * n_faces`` rows)."""

    positions: np.ndarray
    faces: np.ndarray
    corner_uvs: Optional[np.ndarray] = None

    def __post_init__(self):
        pos = np.array(self.positions, dtype=np.float64).reshape(-1, 3)
        faces = np.array(self.faces, dtype=np.int64).reshape(-1, 3)
        if faces.size and (faces.min() < 0 or faces.max() >= len(pos)):
            raise MeshError(f"face index out of range for {len(pos)} vertices")
        bad = (faces[:, 0] == faces[:, 1]) | (faces[:, 1] == faces[:, 2]) | (faces[:, 0] == faces[:, 2])
        if bad.any():
            raise MeshError(f"degenerate face {int(np.flatnonzero(bad)[0])} repeats a vertex")
        object.__setattr__(self, "positions", _readonly(pos))
        object.__setattr__(self, "faces", _readonly(faces))
        if self.corner_uvs is not None:
            uvs = np.array(self.corner_uvs, dtype=np.float64).reshape(-1, 2)
            if len(uvs) != 3 * len(faces):
                raise MeshError(f"expected {3 * len(faces)} corner UVs, got {len(uvs)}")
            object.__setattr__(self, "corner_uvs", _readonly(uvs))

    @property
    def n_vertices(self) -> int:
        return len(self.positions)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def has_uvs(self) -> bool:
        return self.corner_uvs is not None

    @cached_property
    def face_areas(self) -> np.ndarray:
        return _readonly(triangle_areas(self.positions, self.faces))

    @property
    def area(self) -> float:
        return float(self.face_areas.sum())

    @cached_property
    def face_normals(self) -> np.ndarray:
        p = self.positions[self.faces]
        n = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
        length = np.linalg.norm(n, axis=1, keepdims=True)
        return _readonly(n / np.where(length > 0, length, 1.0))

    @cached_property
    def vertex_normals(self) -> np.ndarray:
        """Area-weighted vertex normals; isolated vertices get zero."""
        p = self.positions[self.faces]
        n = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
        acc = np.zeros_like(self.positions)
        for k in range(3):
            np.add.at(acc, self.faces[:, k], n)
        length = np.linalg.norm(acc, axis=1, keepdims=True)
        return _readonly(acc / np.where(length > 0, length, 1.0))

    @cached_property
    def adjacency(self) -> "AdjacencyTable":
        return build_adjacency(self)

    def face_uvs(self, f: int) -> np.ndarray:
        return self.corner_uvs[3 * f: 3 * f + 3]

    def edge_length(self, a: int, b: int) -> float:
        return float(np.linalg.norm(self.positions[a] - self.positions[b]))

    def submesh(self, faces: Iterable[int]) -> tuple["Mesh", np.ndarray]:
        """Re-indexed mesh over ``faces`` and the sub-to-parent vertex map.

        Sub-mesh vertices keep the relative order of their parent indices.
        """
        face_idx = np.array(sorted(int(f) for f in faces), dtype=np.int64)
        sub_faces = self.faces[face_idx]
        parent = np.unique(sub_faces)
        lookup = np.full(self.n_vertices, -1, dtype=np.int64)
        lookup[parent] = np.arange(len(parent))
        uvs = None
        if self.has_uvs:
            corner = (3 * face_idx[:, None] + np.arange(3)).ravel()
            uvs = self.corner_uvs[corner]
        return Mesh(self.positions[parent], lookup[sub_faces], uvs), parent


@dataclass(frozen=True, eq=False)
class AdjacencyTable:
    neighbors: tuple[tuple[int, ...], ...]
    edge_faces: dict[Edge, tuple[int, ...]]

    @property
    def n_vertices(self) -> int:
        return len(self.neighbors)

    @cached_property
    def edges(self) -> tuple[Edge, ...]:
        return tuple(sorted(self.edge_faces))

    def has_edge(self, a: int, b: int) -> bool:
        return edge_key(a, b) in self.edge_faces

    def is_boundary(self, edge: Edge) -> bool:
        return len(self.edge_faces[edge]) == 1

    def degree(self, v: int) -> int:
        return len(self.neighbors[v])


def build_adjacency(mesh: Mesh) -> AdjacencyTable:
    """1-ring neighbor lists and the edge-to-faces map.

    Raises NonManifoldError on the first (sorted) edge with more than two faces.
    """
    edge_faces: dict[Edge, list[int]] = {}
    for f, (a, b, c) in enumerate(mesh.faces.tolist()):
        for u, v in ((a, b), (b, c), (c, a)):
            edge_faces.setdefault(edge_key(u, v), []).append(f)
    bad = sorted(e for e, fs in edge_faces.items() if len(fs) > 2)
    if bad:
        raise NonManifoldError(bad[0], len(edge_faces[bad[0]]))
    neighbors: list[set[int]] = [set() for _ in range(mesh.n_vertices)]
    for a, b in edge_faces:
        neighbors[a].add(b)
        neighbors[b].add(a)
    return AdjacencyTable(
        neighbors=tuple(tuple(sorted(n)) for n in neighbors),
        edge_faces={e: tuple(fs) for e, fs in sorted(edge_faces.items())},
    )


@dataclass(frozen=True)
class Patch:
    """A set of faces of a parent mesh with its cached surface area."""

    faces: frozenset[int]
    area: float = field(compare=False)

    @classmethod
    def of(cls, mesh: Mesh, faces: Iterable[int]) -> "Patch":
        faces = frozenset(int(f) for f in faces)
        return cls(faces, patch_area(mesh, faces))

    @property
    def min_face(self) -> int:
        return min(self.faces) if self.faces else -1

    def boundary_edges(self, mesh: Mesh) -> set[Edge]:
        """Edges with exactly one incident face inside the patch."""
        count: dict[Edge, int] = {}
        for f in self.faces:
            a, b, c = mesh.faces[f].tolist()
            for e in (edge_key(a, b), edge_key(b, c), edge_key(c, a)):
                count[e] = count.get(e, 0) + 1
        return {e for e, n in count.items() if n == 1}


def patch_area(mesh: Mesh, patch) -> float:
    faces = patch.faces if isinstance(patch, Patch) else patch
    idx = np.array(sorted(faces), dtype=np.int64)
    if idx.size == 0:
        return 0.0
    return float(mesh.face_areas[idx].sum())


def connected_components(
    mesh: Mesh,
    faces: Optional[Iterable[int]] = None,
    blocked_edges: Iterable[Edge] = (),
    adjacency: Optional[AdjacencyTable] = None,
) -> list[Patch]:
    """Flood fill on the dual graph; blocked edges do not connect faces.

    Components are ordered by their smallest face index.
    """
    adjacency = adjacency or mesh.adjacency
    face_set = set(range(mesh.n_faces)) if faces is None else {int(f) for f in faces}
    blocked = {edge_key(*e) for e in blocked_edges}
    seen: set[int] = set()
    out = []
    for start in sorted(face_set):
        if start in seen:
            continue
        comp = [start]
        seen.add(start)
        queue = deque([start])
        while queue:
            f = queue.popleft()
            a, b, c = mesh.faces[f].tolist()
            for e in (edge_key(a, b), edge_key(b, c), edge_key(c, a)):
                if e in blocked:
                    continue
                for g in adjacency.edge_faces[e]:
                    if g != f and g in face_set and g not in seen:
                        seen.add(g)
                        comp.append(g)
                        queue.append(g)
        out.append(Patch.of(mesh, comp))
    return out


def require_positive_area(mesh: Mesh) -> None:
    if mesh.n_faces == 0 or mesh.area <= 0.0:
        raise DegenerateMeshError("mesh has zero surface area")
