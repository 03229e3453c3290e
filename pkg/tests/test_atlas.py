import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial import ConvexHull

from oracles import components, heron_area
from seamforge import synthetic
from seamforge.atlas import (atlas_mesh, compute_metrics, convex_hull, curvature_proxy, cut_mesh, flatten_chart,
                             flatten_lscm, flatten_tutte, layout_svg, pack_charts, resample_loop, seams_ply)
from seamforge.atlas import flatten as flatten_mod
from seamforge.atlas.chart import Chart, auto_cut, boundary_loops
from seamforge.atlas.flatten import UVChart
from seamforge.atlas.metrics import conformality, polygon_area, singular_values
from seamforge.errors import DegenerateMeshError, NonDiskError, SingularSystemError
from seamforge.mesh import Mesh, edge_key
from seamforge.objfile import dumps_obj, parse_obj
from seamforge.seams import chains_to_edges, extract_seams_from_uv


def _planar_chart(positions, faces):
    return cut_mesh(Mesh(positions, faces))[0]


def _with_uv(chart, uv, method="given"):
    return UVChart(chart, np.asarray(uv, dtype=np.float64), method)


def _square():
    return _planar_chart([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], [[0, 1, 2], [0, 2, 3]])


def _l_shape():
    pts = [(x, y) for y in range(3) for x in range(3) if (x, y) != (2, 2)]
    index = {p: i for i, p in enumerate(pts)}
    faces = []
    for x, y in [(0, 0), (1, 0), (0, 1)]:
        a, b, c, d = index[(x, y)], index[(x + 1, y)], index[(x + 1, y + 1)], index[(x, y + 1)]
        faces += [(a, b, c), (a, c, d)]
    return _planar_chart([(x, y, 0) for x, y in pts], faces)


# cutting --------------------------------------------------------------------

def test_no_seams_gives_whole_mesh():
    mesh = synthetic.grid(3, 3)
    charts = cut_mesh(mesh, [])
    assert len(charts) == 1
    assert charts[0].faces.tolist() == list(range(mesh.n_faces))
    assert charts[0].mesh.n_vertices == mesh.n_vertices


def test_tube_ring_gives_two_bands():
    mesh = synthetic.tube(8, 6)
    ring = synthetic.ring_loop(8, 2)
    charts = cut_mesh(mesh, ring.edges())
    assert len(charts) == 2
    oracle = components(mesh, range(mesh.n_faces), {edge_key(*e) for e in ring.edges()})
    expect = sorted(heron_area(mesh, comp) for comp in oracle)
    assert sorted(c.area for c in charts) == pytest.approx(expect, rel=1e-9)
    # the ring vertices are split: one copy per band
    assert sum(c.mesh.n_vertices for c in charts) == mesh.n_vertices + 8


def test_cube_cross_is_one_disk(cube):
    charts = cut_mesh(cube, extract_seams_from_uv(cube))
    assert len(charts) == 1 and charts[0].disk_topology
    assert charts[0].mesh.n_vertices == 14  # one per vt of the cross net


def test_open_slit_keeps_tip_vertex_single():
    mesh = synthetic.grid(4, 4)
    chart = cut_mesh(mesh, [(6, 7), (7, 8)])[0]
    copies = np.bincount(chart.parent_vertex, minlength=mesh.n_vertices)
    assert copies[7] == 2 and copies[6] == 1 and copies[8] == 1
    assert not chart.disk_topology and len(chart.boundary_loops) == 2


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_chart_areas_sum_to_mesh_area(seed):
    mesh, chains = synthetic.random_seamed_mesh(np.random.default_rng(seed))
    charts = cut_mesh(mesh, chains_to_edges(chains))
    assert sum(c.area for c in charts) == pytest.approx(mesh.area, rel=1e-6)
    assert sorted(f for c in charts for f in c.faces.tolist()) == list(range(mesh.n_faces))


def test_boundary_loops_follow_face_orientation():
    chart = _square()
    (loop,) = chart.boundary_loops
    assert loop == (0, 1, 2, 3)
    assert polygon_area(chart.mesh.positions[list(loop), :2]) > 0


def test_boundary_loops_of_closed_mesh_are_empty():
    assert boundary_loops(synthetic.cube(False)) == ()


# flattening -----------------------------------------------------------------

def test_tutte_single_triangle():
    chart = _planar_chart([[0, 0, 0], [2, 0, 0], [0, 1, 0]], [[0, 1, 2]])
    uvc = flatten_tutte(chart)
    np.testing.assert_allclose(np.linalg.norm(uvc.uv, axis=1), 1.0)
    assert uvc.signed_areas[0] > 0


def test_tutte_planar_grid_injective(rng):
    chart = cut_mesh(synthetic.grid(6, 5, jitter=0.3, rng=rng))[0]
    uvc = flatten_tutte(chart)
    assert uvc.flips == 0 and uvc.signed_areas.min() > 0


def test_tutte_interior_vertices_are_neighbor_means():
    chart = cut_mesh(synthetic.grid(4, 4))[0]
    uvc = flatten_tutte(chart)
    boundary = set(chart.boundary_loops[0])
    for v in range(chart.mesh.n_vertices):
        if v not in boundary:
            nbrs = chart.mesh.adjacency.neighbors[v]
            np.testing.assert_allclose(uvc.uv[v], uvc.uv[list(nbrs)].mean(axis=0), atol=1e-12)


def test_tetrahedron_opened_at_a_vertex():
    tet = synthetic.tetrahedron()
    v = 0
    seams = [(v, n) for n in tet.adjacency.neighbors[v]]
    (chart,) = cut_mesh(tet, seams)
    assert chart.disk_topology
    assert flatten_tutte(chart).flips == 0


def test_non_disk_chart_rejected():
    (chart,) = cut_mesh(synthetic.tube(6, 3))
    with pytest.raises(NonDiskError, match="2 boundary loop"):
        flatten_tutte(chart)
    with pytest.raises(NonDiskError):
        flatten_lscm(chart)


def test_lscm_planar_chart_is_similarity(rng):
    mesh = synthetic.grid(5, 4, jitter=0.3, rng=rng)
    rot = np.linalg.qr(rng.normal(size=(3, 3)))[0]
    chart = cut_mesh(Mesh(mesh.positions @ rot.T, mesh.faces))[0]
    uvc = flatten_lscm(chart)
    report = compute_metrics(chart.mesh, [uvc])
    assert report.angular_dist == pytest.approx(1.0, abs=1e-6)
    d3 = np.linalg.norm(chart.mesh.positions[:, None] - chart.mesh.positions[None], axis=2)
    d2 = np.linalg.norm(uvc.uv[:, None] - uvc.uv[None], axis=2)
    mask = d3 > 0
    ratio = d2[mask] / d3[mask]
    assert ratio.max() - ratio.min() < 1e-6


def test_lscm_beats_tutte_on_half_cylinder():
    mesh = synthetic.tube(12, 4)
    seams = [e for col in (0, 6) for e in synthetic.tube_meridian(12, range(5), col).edges()]
    charts = cut_mesh(mesh, seams)
    assert len(charts) == 2
    for chart in charts:
        lscm = compute_metrics(chart.mesh, [flatten_lscm(chart)]).angular_dist
        tutte = compute_metrics(chart.mesh, [flatten_tutte(chart)]).angular_dist
        assert lscm > tutte


def test_lscm_needs_three_vertices():
    tiny = Mesh([[0, 0, 0], [1, 0, 0]], np.zeros((0, 3), dtype=int))
    chart = Chart(0, np.zeros(0, dtype=np.int64), tiny, np.arange(2))
    with pytest.raises(SingularSystemError):
        flatten_lscm(chart)


def test_flatten_chart_falls_back_to_tutte(monkeypatch):
    chart = _square()

    def broken(_):
        raise SingularSystemError("forced")

    monkeypatch.setattr(flatten_mod, "flatten_lscm", broken)
    assert flatten_chart(chart, "lscm").method == "tutte"
    with pytest.raises(SingularSystemError):
        flatten_chart(chart, "lscm", fallback=False)
    with pytest.raises(ValueError):
        flatten_chart(chart, "abf")


def test_fixture_disk_charts_never_flip():
    for mesh, chains in synthetic.fixture_corpus().values():
        for chart in cut_mesh(mesh, chains_to_edges(chains)):
            if chart.disk_topology:
                assert flatten_tutte(chart).flips == 0


@pytest.mark.parametrize("mesh", [synthetic.cube(False), synthetic.uv_sphere(8, 5), synthetic.torus(8, 5),
                                  synthetic.tube(6, 4)], ids=["cube", "sphere", "torus", "tube"])
def test_auto_cut_yields_disks(mesh):
    seams, added = auto_cut(mesh)
    assert added and set(added) <= set(seams)
    charts = cut_mesh(mesh, seams)
    assert len(charts) == 1 and charts[0].disk_topology
    assert flatten_tutte(charts[0]).flips == 0


def test_auto_cut_leaves_disks_alone(cube):
    seams = extract_seams_from_uv(cube)
    assert auto_cut(cube, seams) == (seams, [])


# packing --------------------------------------------------------------------

def test_single_chart_fills_unit_square_minus_margin():
    packed = pack_charts([flatten_tutte(_square())], margin=0.05)
    uv = packed.charts[0].uv
    assert uv.min() == pytest.approx(0.05)
    assert uv.max(axis=0).max() == pytest.approx(0.95)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 7])
def test_unit_squares_pack_without_overlap(n):
    sq = _square()
    packed = pack_charts([_with_uv(sq, sq.mesh.positions[:, :2]) for _ in range(n)], margin=0.02)
    boxes = packed.boxes
    assert boxes.min() >= 0.02 - 1e-12 and boxes.max() <= 0.98 + 1e-12
    for i in range(n):
        for j in range(i + 1, n):
            a, b = boxes[i], boxes[j]
            overlap = min(a[2], b[2]) - max(a[0], b[0]) > 1e-12 and min(a[3], b[3]) - max(a[1], b[1]) > 1e-12
            assert not overlap
    cols = len({round(b[0], 9) for b in boxes})
    rows = len({round(b[1], 9) for b in boxes})
    assert cols * rows >= n and max(cols, rows) == math.ceil(math.sqrt(n))


def test_pack_rejects_empty():
    with pytest.raises(ValueError):
        pack_charts([])


# metrics --------------------------------------------------------------------

def test_unit_square_compactness_and_convexity():
    sq = _square()
    r = compute_metrics(sq.mesh, [_with_uv(sq, sq.mesh.positions[:, :2])])
    assert r.compactness == pytest.approx(math.pi / 4, abs=1e-12)
    assert r.convexity == pytest.approx(1.0, abs=1e-12)


def test_l_shape_convexity():
    ch = _l_shape()
    r = compute_metrics(ch.mesh, [_with_uv(ch, ch.mesh.positions[:, :2])])
    assert r.convexity == pytest.approx(6 / 7, abs=1e-9)
    assert r.compactness == pytest.approx(4 * math.pi * 3 / 8 ** 2, abs=1e-9)


def test_isometric_layout_has_unit_distortion(rng):
    mesh = synthetic.grid(4, 3, jitter=0.3, rng=rng)
    rot = np.linalg.qr(rng.normal(size=(3, 3)))[0]
    chart = cut_mesh(Mesh(mesh.positions @ rot.T, mesh.faces))[0]
    uv = (chart.mesh.positions @ rot)[:, :2] * 3.0 + 5.0  # similarity of the flat layout
    r = compute_metrics(chart.mesh, [_with_uv(chart, uv)])
    assert r.overall_dist == pytest.approx(1.0, abs=1e-9)
    assert r.angular_dist == pytest.approx(1.0, abs=1e-9)


def test_curvature_of_square_corners():
    corners = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
    samples = resample_loop(corners, 4)
    np.testing.assert_allclose(samples, corners)
    assert curvature_proxy(samples).mean() == pytest.approx(math.sqrt(2))


def test_curvature_of_collinear_samples_is_zero():
    line = np.stack([np.linspace(0, 1, 5), np.linspace(0, 2, 5)], axis=1)
    assert np.allclose(curvature_proxy(line)[1:-1], 0)


def test_anisotropic_stretch_conformality():
    q = np.array([[[0, 0], [1, 0], [0, 1]]], dtype=float)
    uv = q * np.array([2.0, 1.0])
    s1, s2 = singular_values(q, uv)
    assert (s1[0], s2[0]) == pytest.approx((2.0, 1.0))
    assert conformality(s1, s2)[0] == pytest.approx(0.8)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), min_size=3, max_size=30))
def test_convex_hull_matches_scipy(points):
    pts = np.array(points)
    try:
        ref = ConvexHull(pts).volume
    except Exception:
        return  # degenerate input, scipy refuses
    assert polygon_area(convex_hull(pts)) == pytest.approx(ref, rel=1e-9, abs=1e-9)


def test_degenerate_uv_triangles_are_tallied():
    sq = _square()
    uv = sq.mesh.positions[:, :2].copy()
    uv[1] = (uv[0] + uv[2]) / 2  # triangle (0, 1, 2) becomes a segment
    r = compute_metrics(sq.mesh, [_with_uv(sq, uv)])
    assert r.degenerate == 1
    assert r.overall_dist == pytest.approx(1.0) and r.angular_dist == pytest.approx(1.0)
    uv[3] = uv[0]
    with pytest.raises(DegenerateMeshError):
        compute_metrics(sq.mesh, [_with_uv(sq, uv)])


def test_seam_length_ratio(cube):
    seams = extract_seams_from_uv(cube)
    chart = cut_mesh(cube, seams)[0]
    r = compute_metrics(cube, [flatten_tutte(chart)], seams)
    assert r.seam_len_ratio == pytest.approx(7 / 6)
    assert r.n_charts == 1


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), scale=st.floats(0.01, 100), angle=st.floats(0, 2 * math.pi),
       shift=st.tuples(st.floats(-10, 10), st.floats(-10, 10)))
def test_metrics_similarity_invariant(seed, scale, angle, shift):
    rng = np.random.default_rng(seed)
    mesh = synthetic.jittered(synthetic.tube(8, 4), rng, 0.05)
    seams = synthetic.tube_meridian(8, range(5)).edges()
    (chart,) = cut_mesh(mesh, seams)
    base = flatten_tutte(chart)
    rot = np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]])
    moved = base.with_uv(scale * base.uv @ rot.T + np.array(shift))
    a, b = compute_metrics(mesh, [base], seams), compute_metrics(mesh, [moved], seams)
    for key in ("overall_dist", "angular_dist", "compactness", "convexity", "jaggedness"):
        assert getattr(b, key) == pytest.approx(getattr(a, key), rel=1e-6), key
    assert b.jaggedness_raw == pytest.approx(scale * a.jaggedness_raw, rel=1e-6)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_metric_bounds_on_random_atlases(seed):
    mesh, chains = synthetic.random_seamed_mesh(np.random.default_rng(seed))
    seams, _ = auto_cut(mesh, chains_to_edges(chains))
    flat = [flatten_chart(c, "lscm") for c in cut_mesh(mesh, seams)]
    r = compute_metrics(mesh, pack_charts(flat).charts, seams)
    assert r.overall_dist >= 1 - 1e-12
    assert 0 < r.angular_dist <= 1 + 1e-12
    assert 0 < r.compactness <= 1 + 1e-12
    assert 0 < r.convexity <= 1 + 1e-12
    assert r.jaggedness >= 0 and r.n_charts >= 1


def test_report_json_uses_table_columns(cube):
    seams = extract_seams_from_uv(cube)
    r = compute_metrics(cube, [flatten_tutte(cut_mesh(cube, seams)[0])], seams).to_json()
    assert list(r["table"]) == ["Overall Dist", "Angular Dist", "# Charts", "Island Compact", "Island Convex",
                                "SeamLen/Area", "Boundary Jagged"]
    assert r["schema"].startswith("seamforge.atlas_report/")


def test_compute_metrics_rejects_empty(cube):
    with pytest.raises(ValueError):
        compute_metrics(cube, [])


# exports --------------------------------------------------------------------

@pytest.mark.parametrize("name", ["cube_cross", "tube", "sphere", "torus"])
def test_atlas_obj_islands_match_charts(name):
    mesh, chains = synthetic.fixture_corpus()[name]
    seams, _ = auto_cut(mesh, chains_to_edges(chains))
    charts = cut_mesh(mesh, seams)
    packed = pack_charts([flatten_tutte(c) for c in charts])
    back = parse_obj(dumps_obj(atlas_mesh(mesh, packed.charts)))
    assert len(cut_mesh(back, extract_seams_from_uv(back))) == len(charts)


def test_svg_has_one_group_per_chart():
    mesh, chains = synthetic.fixture_corpus()["sphere"]
    charts = cut_mesh(mesh, chains_to_edges(chains))
    flat = [flatten_tutte(c) for c in charts if c.disk_topology]
    svg = layout_svg(pack_charts(flat).charts)
    assert svg.count("<g ") == len(flat) and svg.count("<polyline") == len(flat)
    assert svg == layout_svg(pack_charts(flat).charts)


def test_ply_has_one_edge_per_seam_edge():
    mesh, chains = synthetic.fixture_corpus()["tube"]
    ply = seams_ply(mesh, chains)
    n_edges = len(chains_to_edges(chains))
    assert f"element edge {n_edges}" in ply
    body = ply.split("end_header\n")[1].splitlines()
    assert len(body) == mesh.n_vertices + mesh.n_faces + n_edges
