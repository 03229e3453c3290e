"""Seams to packed atlas in one call."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from ..mesh import Edge, Mesh
from ..seams import SeamEdgeSet
from .chart import Chart, auto_cut, cut_mesh
from .flatten import flatten_chart
from .metrics import AtlasReport, compute_metrics
from .pack import PackedAtlas, pack_charts


@dataclass
class Atlas:
    seams: SeamEdgeSet          # includes any automatically added cuts
    added: list[Edge]
    charts: list[Chart]
    packed: PackedAtlas

    def report(self, mesh: Mesh, samples_per_loop: int = 128) -> AtlasReport:
        r = compute_metrics(mesh, self.packed.charts, self.seams, samples_per_loop)
        r.auto_cut_edges = len(self.added)
        return r


def build_atlas(mesh: Mesh, seams: SeamEdgeSet | Iterable[Edge], flattener: str = "tutte",
                auto: bool = False, margin: float = 0.01) -> Atlas:
    """Cut, flatten every chart and pack.  Non-disk charts raise unless ``auto`` adds cuts."""
    seams = SeamEdgeSet.of(seams)
    added: list[Edge] = []
    if auto:
        seams, added = auto_cut(mesh, seams)
    charts = cut_mesh(mesh, seams)
    flat = [flatten_chart(c, flattener) for c in charts]
    return Atlas(seams, added, charts, pack_charts(flat, margin))
