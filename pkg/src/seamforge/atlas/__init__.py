"""Cutting, flattening, packing and measuring UV atlases."""

from .build import Atlas, build_atlas
from .chart import Chart, auto_cut, boundary_loops, charts_to_json, cut_mesh
from .export import atlas_corner_uvs, atlas_mesh, layout_svg, seams_ply
from .flatten import UVChart, flatten_chart, flatten_lscm, flatten_tutte, signed_areas
from .metrics import AtlasReport, compute_metrics, convex_hull, curvature_proxy, resample_loop
from .pack import PackedAtlas, pack_charts

__all__ = ["Atlas", "build_atlas", "auto_cut", "Chart", "boundary_loops", "charts_to_json", "cut_mesh", "atlas_corner_uvs", "atlas_mesh",
           "layout_svg", "seams_ply", "UVChart", "flatten_chart", "flatten_lscm", "flatten_tutte",
           "signed_areas", "AtlasReport", "compute_metrics", "convex_hull", "curvature_proxy",
           "resample_loop", "PackedAtlas", "pack_charts"]
