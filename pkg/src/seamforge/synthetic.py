"""Procedural meshes with authored seams, used as fixtures and toy training data."""

from __future__ import annotations

import math
from typing import Callable, Optional

import numpy as np

from .mesh import Mesh, edge_key
from .seams import ChainSet, SeamChain, extract_seams_from_uv, trace_chains


def single_triangle() -> Mesh:
    return Mesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 2]])


def tetrahedron() -> Mesh:
    pos = [[0, 0, 0], [1, 0, 0], [0.5, math.sqrt(3) / 2, 0], [0.5, math.sqrt(3) / 6, math.sqrt(2 / 3)]]
    faces = [[0, 2, 1], [0, 1, 3], [1, 2, 3], [2, 0, 3]]
    return Mesh(pos, faces)


# each face: outward-CCW quad and the map (x, y, z) -> net (u, v) in unit cells
_CUBE_QUADS = [
    ((0, 2, 3, 1), lambda x, y, z: (1 + x, 1 - y)),        # bottom, below front
    ((4, 5, 7, 6), lambda x, y, z: (1 + x, 2 + y)),        # top, above front
    ((0, 1, 5, 4), lambda x, y, z: (1 + x, 1 + z)),        # front
    ((2, 6, 7, 3), lambda x, y, z: (3 + (1 - x), 1 + z)),  # back, right of right
    ((0, 4, 6, 2), lambda x, y, z: (1 - y, 1 + z)),        # left
    ((1, 3, 7, 5), lambda x, y, z: (2 + y, 1 + z)),        # right
]


def cube(with_uvs: bool = True) -> Mesh:
    """Unit cube, 12 triangles, with a cross-shaped UV net (7 seam edges)."""
    pos = np.array([[x, y, z] for z in (0, 1) for y in (0, 1) for x in (0, 1)], dtype=float)
    faces, uvs = [], []
    for quad, net in _CUBE_QUADS:
        a, b, c, d = quad
        for tri in ((a, b, c), (a, c, d)):
            faces.append(tri)
            for v in tri:
                u, w = net(*pos[v])
                uvs.append((u / 4.0, w / 4.0))
    return Mesh(pos, faces, np.array(uvs) if with_uvs else None)


def grid(nx: int = 4, ny: int = 4, size: float = 1.0, with_uvs: bool = False,
         jitter: float = 0.0, rng: Optional[np.random.Generator] = None) -> Mesh:
    """Planar (nx x ny)-cell grid in z=0, two triangles per cell."""
    xs, ys = np.meshgrid(np.linspace(0, size, nx + 1), np.linspace(0, size, ny + 1))
    pos = np.stack([xs.ravel(), ys.ravel(), np.zeros(xs.size)], axis=1)
    if jitter:
        rng = rng or np.random.default_rng(0)
        interior = np.ones(len(pos), dtype=bool)
        interior[(pos[:, 0] == 0) | (pos[:, 0] == size) | (pos[:, 1] == 0) | (pos[:, 1] == size)] = False
        pos[interior, :2] += rng.uniform(-jitter, jitter, (interior.sum(), 2)) * size / max(nx, ny)
    faces = []
    for j in range(ny):
        for i in range(nx):
            a = j * (nx + 1) + i
            b, c, d = a + 1, a + nx + 2, a + nx + 1
            faces += [(a, b, c), (a, c, d)]
    uvs = None
    if with_uvs:
        uvs = pos[np.array(faces).ravel(), :2]
    return Mesh(pos, faces, uvs)


def tube(n_around: int = 12, n_rows: int = 8, radius: float = 1.0, height: float = 2.0,
         radius_fn: Optional[Callable[[float], float]] = None) -> Mesh:
    """Open cylinder; ring ``k`` holds vertices ``k*n_around .. k*n_around+n_around-1``."""
    pos = []
    for k in range(n_rows + 1):
        t = k / n_rows
        r = radius_fn(t) if radius_fn else radius
        for j in range(n_around):
            a = 2 * math.pi * j / n_around
            pos.append((r * math.cos(a), r * math.sin(a), height * t))
    faces = []
    for k in range(n_rows):
        for j in range(n_around):
            a = k * n_around + j
            b = k * n_around + (j + 1) % n_around
            c, d = b + n_around, a + n_around
            faces += [(a, b, c), (a, c, d)]
    return Mesh(pos, faces)


def waist_tube(n_around: int = 12, n_rows: int = 8, pinch: float = 0.45, at: float = 0.5) -> Mesh:
    """Tube whose radius narrows to a sharp crease at row ``at * n_rows``."""
    return tube(n_around, n_rows, radius_fn=lambda t: 1.0 - pinch * max(0.0, 1 - abs(t - at) * n_rows))


def uv_sphere(n_around: int = 12, n_lat: int = 8, radius: float = 1.0) -> Mesh:
    """Latitude-longitude sphere: vertex 0 is the south pole, last vertex the north pole.

    Latitude ring ``k`` (1..n_lat-1) holds ``1 + (k-1)*n_around ..``.
    """
    pos = [(0.0, 0.0, -radius)]
    for k in range(1, n_lat):
        phi = -math.pi / 2 + math.pi * k / n_lat
        for j in range(n_around):
            a = 2 * math.pi * j / n_around
            pos.append((radius * math.cos(phi) * math.cos(a), radius * math.cos(phi) * math.sin(a),
                        radius * math.sin(phi)))
    pos.append((0.0, 0.0, radius))
    north = len(pos) - 1

    def ring(k, j):
        return 1 + (k - 1) * n_around + j % n_around

    faces = []
    for j in range(n_around):
        faces.append((0, ring(1, j + 1), ring(1, j)))
    for k in range(1, n_lat - 1):
        for j in range(n_around):
            a, b = ring(k, j), ring(k, j + 1)
            c, d = ring(k + 1, j + 1), ring(k + 1, j)
            faces += [(a, b, c), (a, c, d)]
    for j in range(n_around):
        faces.append((ring(n_lat - 1, j), ring(n_lat - 1, j + 1), north))
    return Mesh(pos, faces)


def torus(n_major: int = 12, n_minor: int = 6, r_major: float = 2.0, r_minor: float = 0.6) -> Mesh:
    pos = []
    for i in range(n_major):
        u = 2 * math.pi * i / n_major
        for j in range(n_minor):
            v = 2 * math.pi * j / n_minor
            rr = r_major + r_minor * math.cos(v)
            pos.append((rr * math.cos(u), rr * math.sin(u), r_minor * math.sin(v)))
    faces = []
    for i in range(n_major):
        for j in range(n_minor):
            a = i * n_minor + j
            b = ((i + 1) % n_major) * n_minor + j
            c = ((i + 1) % n_major) * n_minor + (j + 1) % n_minor
            d = i * n_minor + (j + 1) % n_minor
            faces += [(a, b, c), (a, c, d)]
    return Mesh(pos, faces)


def jittered(mesh: Mesh, rng: np.random.Generator, amount: float = 0.05) -> Mesh:
    """Same connectivity with each vertex displaced by up to ``amount`` per axis."""
    pos = mesh.positions + rng.uniform(-amount, amount, mesh.positions.shape)
    return Mesh(pos, mesh.faces, mesh.corner_uvs)


def ring_loop(n_around: int, row: int, offset: int = 0) -> SeamChain:
    """Loop around tube row ``row`` (use ``offset=1`` with sphere latitude rings shifted by one)."""
    base = row * n_around + offset
    ring = [base + j for j in range(n_around)]
    return SeamChain(tuple(ring + [ring[0]]))


def sphere_ring(n_around: int, k: int) -> SeamChain:
    return ring_loop(n_around, k - 1, offset=1)


def tube_meridian(n_around: int, rows: range, column: int = 0) -> SeamChain:
    """Vertical open chain along one column of a tube."""
    return SeamChain(tuple(r * n_around + column for r in rows))


def random_walk_chain(mesh: Mesh, rng: np.random.Generator, used: set, max_steps: int = 8) -> Optional[SeamChain]:
    """Self-avoiding edge walk that avoids ``used`` edges; updates ``used``."""
    adj = mesh.adjacency
    for _ in range(20):
        v = int(rng.integers(mesh.n_vertices))
        path = [v]
        local: set = set()
        for _ in range(max_steps):
            options = [n for n in adj.neighbors[path[-1]]
                       if edge_key(path[-1], n) not in used and edge_key(path[-1], n) not in local
                       and n not in path[1:] and (n != path[0] or len(path) > 2)]
            if not options:
                break
            n = int(options[rng.integers(len(options))])
            local.add(edge_key(path[-1], n))
            path.append(n)
            if n == path[0]:
                break
        if len(path) >= 2:
            used |= local
            return SeamChain(tuple(path))
    return None


def random_seamed_mesh(rng: np.random.Generator) -> tuple[Mesh, ChainSet]:
    """Random tube, sphere, grid or torus with ring loops plus random open walks."""
    kind = rng.choice(["tube", "sphere", "grid", "torus"])
    chains: list[SeamChain] = []
    if kind == "tube":
        n, rows = int(rng.integers(5, 12)), int(rng.integers(3, 10))
        mesh = jittered(tube(n, rows), rng, 0.03)
        for row in rng.choice(np.arange(1, rows), size=min(rows - 1, int(rng.integers(0, 3))), replace=False):
            chains.append(ring_loop(n, int(row)))
    elif kind == "sphere":
        n, lat = int(rng.integers(5, 12)), int(rng.integers(3, 9))
        mesh = jittered(uv_sphere(n, lat), rng, 0.03)
        for k in rng.choice(np.arange(1, lat), size=min(lat - 1, int(rng.integers(0, 3))), replace=False):
            chains.append(sphere_ring(n, int(k)))
    elif kind == "grid":
        mesh = grid(int(rng.integers(2, 8)), int(rng.integers(2, 8)), jitter=0.2, rng=rng)
    else:
        mesh = jittered(torus(int(rng.integers(6, 12)), int(rng.integers(4, 7))), rng, 0.03)
    used = {e for c in chains for e in c.edges()}
    for _ in range(int(rng.integers(0, 4))):
        c = random_walk_chain(mesh, rng, used)
        if c is not None:
            chains.append(c)
    return mesh, ChainSet(tuple(chains))


def fixture_corpus() -> dict[str, tuple[Mesh, ChainSet]]:
    """Named fixtures with authored seam chains."""
    corpus: dict[str, tuple[Mesh, ChainSet]] = {}

    c = cube()
    corpus["cube_cross"] = (c, trace_chains(c, extract_seams_from_uv(c)))
    corpus["tube"] = (tube(12, 8), ChainSet((ring_loop(12, 4), tube_meridian(12, range(0, 5)))))
    corpus["waist_tube"] = (waist_tube(12, 8), ChainSet((ring_loop(12, 4),)))
    corpus["sphere"] = (uv_sphere(12, 8), ChainSet((sphere_ring(12, 4), sphere_ring(12, 2))))
    corpus["grid"] = (grid(6, 6), ChainSet((SeamChain((8, 9, 10, 11)),)))
    corpus["tetrahedron"] = (tetrahedron(), ChainSet((SeamChain((3, 0)), SeamChain((1, 3, 2)))))
    corpus["torus"] = (torus(12, 6), ChainSet((ring_loop(6, 0), ring_loop(6, 6))))
    return corpus


def toy_corpus(n: int = 20, seed: int = 0) -> list[tuple[Mesh, ChainSet]]:
    """Small tubes, spheres and cubes with authored seams, sized for memorization runs."""
    rng = np.random.default_rng(seed)
    out: list[tuple[Mesh, ChainSet]] = []
    for k in range(n):
        kind = k % 3
        if kind == 0:
            na, rows = int(rng.integers(5, 8)), int(rng.integers(3, 6))
            mesh = tube(na, rows, radius=float(rng.uniform(0.4, 0.8)), height=float(rng.uniform(0.8, 1.6)))
            row = int(rng.integers(1, rows - 1))
            chains = [ring_loop(na, row)]
            if rng.random() < 0.5:
                chains.append(tube_meridian(na, range(0, row + 1), column=int(rng.integers(na))))
        elif kind == 1:
            na, lat = int(rng.integers(5, 8)), int(rng.integers(3, 6))
            mesh = uv_sphere(na, lat, radius=float(rng.uniform(0.5, 0.9)))
            chains = [sphere_ring(na, int(rng.integers(1, lat)))]
        else:
            c = cube()
            scale = rng.uniform(0.4, 0.9, size=3)
            mesh = Mesh(c.positions * scale - scale / 2, c.faces, c.corner_uvs)
            chains = list(trace_chains(mesh, extract_seams_from_uv(mesh)))
        out.append((mesh, ChainSet(tuple(chains))))
    return out
