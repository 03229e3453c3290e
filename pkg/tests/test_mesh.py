import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from seamforge import synthetic
from seamforge.errors import IndexOutOfRangeError, NonManifoldError, ObjParseError
from seamforge.mesh import Mesh, Patch, build_adjacency, connected_components, edge_key, patch_area
from seamforge.objfile import dumps_obj, load_obj, parse_obj, save_obj


def test_load_single_triangle():
    m = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n")
    assert (m.n_vertices, m.n_faces, m.has_uvs) == (3, 1, False)


def test_load_cube_fixture_has_corner_uvs(data_dir):
    m = load_obj(data_dir / "cube_cross.obj")
    assert m.n_faces == 12
    assert m.corner_uvs.shape == (36, 2)


def test_index_out_of_range_reports_line():
    with pytest.raises(IndexOutOfRangeError) as err:
        parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 99\n")
    assert err.value.line == 4


def test_parse_error_has_line_number():
    with pytest.raises(ObjParseError, match="line 2"):
        parse_obj("v 0 0 0\nv a b c\n")


def test_quads_are_fan_triangulated_and_groups_ignored():
    m = parse_obj("o thing\ng part\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\nf 1//1 2//1 3//1 4//1\n")
    assert m.faces.tolist() == [[0, 1, 2], [0, 2, 3]]


def test_negative_indices():
    m = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n")
    assert m.faces.tolist() == [[0, 1, 2]]


def test_obj_round_trip(tmp_path, cube):
    path = tmp_path / "c.obj"
    save_obj(cube, path)
    back = load_obj(path)
    assert back.n_vertices == cube.n_vertices and back.n_faces == cube.n_faces
    assert np.array_equal(back.faces, cube.faces)
    assert np.allclose(back.positions, cube.positions, atol=1e-6)
    assert np.allclose(back.corner_uvs, cube.corner_uvs, atol=1e-6)


def test_obj_round_trip_without_uvs():
    m = synthetic.jittered(synthetic.tube(7, 3), np.random.default_rng(0))
    back = parse_obj(dumps_obj(m))
    assert np.array_equal(back.faces, m.faces)
    assert np.allclose(back.positions, m.positions, atol=1e-6)


def test_adjacency_single_triangle():
    adj = build_adjacency(synthetic.single_triangle())
    assert adj.neighbors[0] == (1, 2)


def test_cube_degrees_follow_handshake(cube):
    adj = build_adjacency(cube)
    degrees = [len(n) for n in adj.neighbors]
    assert set(degrees) <= {4, 5, 6}
    # 12 quad edges + 6 diagonals
    assert sum(degrees) == 2 * 18 == 2 * len(adj.edge_faces)


def test_non_manifold_edge_is_named():
    m = Mesh([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1]], [[0, 1, 2], [1, 0, 3], [0, 1, 4]])
    with pytest.raises(NonManifoldError) as err:
        build_adjacency(m)
    assert err.value.edge == (0, 1)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_adjacency_symmetric(seed):
    rng = np.random.default_rng(seed)
    mesh, _ = synthetic.random_seamed_mesh(rng)
    adj = build_adjacency(mesh)
    for i, nbrs in enumerate(adj.neighbors):
        assert list(nbrs) == sorted(nbrs)
        for j in nbrs:
            assert i in adj.neighbors[j]
    for f, tri in enumerate(mesh.faces.tolist()):
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            assert f in adj.edge_faces[edge_key(a, b)]


def test_patch_area_unit_triangle():
    m = synthetic.single_triangle()
    assert patch_area(m, Patch.of(m, [0])) == pytest.approx(0.5)


def test_patch_area_cube(cube):
    assert patch_area(cube, range(12)) == pytest.approx(6.0)


def _heron(p, q, r):
    a, b, c = (math.dist(p, q), math.dist(q, r), math.dist(r, p))
    s = (a + b + c) / 2
    return math.sqrt(max(s * (s - a) * (s - b) * (s - c), 0.0))


def test_patch_area_matches_per_triangle_oracle(rng):
    for _ in range(10):
        mesh, _ = synthetic.random_seamed_mesh(rng)
        faces = rng.choice(mesh.n_faces, size=max(1, mesh.n_faces // 2), replace=False)
        pos = mesh.positions.tolist()
        expected = sum(_heron(*(pos[v] for v in mesh.faces[f])) for f in faces)
        assert patch_area(mesh, faces) == pytest.approx(expected, rel=1e-9)


def test_patch_area_additive(rng):
    mesh = synthetic.jittered(synthetic.uv_sphere(9, 6), rng)
    perm = rng.permutation(mesh.n_faces)
    a, b = perm[:20], perm[20:]
    assert patch_area(mesh, a) + patch_area(mesh, b) == pytest.approx(mesh.area, rel=1e-12)


def _union_find_components(mesh, blocked):
    parent = list(range(mesh.n_faces))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    owner = {}
    for f, tri in enumerate(mesh.faces.tolist()):
        for k in range(3):
            e = tuple(sorted((tri[k], tri[(k + 1) % 3])))
            if e in blocked:
                continue
            if e in owner:
                parent[find(f)] = find(owner[e])
            else:
                owner[e] = f
    groups = {}
    for f in range(mesh.n_faces):
        groups.setdefault(find(f), set()).add(f)
    return sorted((frozenset(g) for g in groups.values()), key=min)


def test_components_cube_unblocked(cube):
    assert len(connected_components(cube)) == 1


def test_components_tube_ring_blocked():
    mesh = synthetic.tube(10, 6)
    ring = synthetic.ring_loop(10, 2).edges()
    comps = connected_components(mesh, blocked_edges=ring)
    assert len(comps) == 2
    assert [c.faces for c in comps] == _union_find_components(mesh, set(ring))


def test_components_all_blocked(cube):
    comps = connected_components(cube, blocked_edges=cube.adjacency.edges)
    assert [sorted(c.faces) for c in comps] == [[f] for f in range(12)]


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_components_partition_random_blocks(seed):
    rng = np.random.default_rng(seed)
    mesh, _ = synthetic.random_seamed_mesh(rng)
    edges = mesh.adjacency.edges
    blocked = {edges[i] for i in rng.choice(len(edges), size=len(edges) // 3, replace=False)}
    comps = connected_components(mesh, blocked_edges=blocked)
    union = set().union(*(c.faces for c in comps))
    assert union == set(range(mesh.n_faces))
    assert sum(len(c.faces) for c in comps) == mesh.n_faces
    assert [c.faces for c in comps] == _union_find_components(mesh, blocked)
