"""Canonical serialization of a chain set: loops first, balance first, large patch first."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

from .errors import BoundaryCoincidentError, NonSeparatingLoopError
from .mesh import Mesh, Patch, connected_components
from .seams import CHAINS_SCHEMA, ChainSet, SeamChain

log = logging.getLogger(__name__)

# relative tolerance under which two areas or balance scores count as tied
TIE_RTOL = 1e-9


@dataclass(frozen=True)
class SplitRecord:
    """Why a loop was placed: the patch it split and the resulting areas."""

    position: int
    patch_area: float
    sub_areas: tuple[float, float]
    balance: float

    def to_json(self) -> dict:
        return {"position": self.position, "patch_area": self.patch_area,
                "sub_areas": list(self.sub_areas), "balance": self.balance}


@dataclass(frozen=True)
class OrderedChains:
    sequence: tuple[SeamChain, ...]
    provenance: tuple[SplitRecord, ...] = ()

    def as_chainset(self) -> ChainSet:
        return ChainSet(self.sequence)

    def to_json(self) -> dict:
        return {"schema": CHAINS_SCHEMA, "chains": [c.to_json() for c in self.sequence],
                "provenance": [p.to_json() for p in self.provenance]}

    @classmethod
    def from_json(cls, data: dict) -> "OrderedChains":
        chains = ChainSet.from_json(data).chains
        prov = tuple(SplitRecord(p["position"], p["patch_area"], tuple(p["sub_areas"]), p["balance"])
                     for p in data.get("provenance", []))
        return cls(chains, prov)


def _greater(a: float, b: float) -> bool:
    return a > b + TIE_RTOL * max(abs(a), abs(b), 1.0)


def is_internal(mesh: Mesh, patch: Patch, loop: SeamChain) -> bool:
    """Every loop edge has both incident faces inside the patch."""
    edge_faces = mesh.adjacency.edge_faces
    for e in loop.edges():
        fs = edge_faces.get(e, ())
        if len(fs) != 2 or not all(f in patch.faces for f in fs):
            return False
    return True


def split_patch(mesh: Mesh, patch: Patch, loop: SeamChain) -> list[Patch]:
    return connected_components(mesh, patch.faces, loop.edges())


def balance_score(mesh: Mesh, patch: Patch, loop: SeamChain) -> float:
    """min/max ratio of the two sub-patch areas produced by cutting along ``loop``."""
    if not is_internal(mesh, patch, loop):
        raise BoundaryCoincidentError(f"loop at {loop.vertices[0]} is not strictly inside the patch")
    parts = split_patch(mesh, patch, loop)
    if len(parts) != 2:
        raise NonSeparatingLoopError(
            f"loop at {loop.vertices[0]} splits the patch into {len(parts)} parts, expected 2")
    a1, a2 = parts[0].area, parts[1].area
    return min(a1, a2) / max(a1, a2)


def _by_length(mesh: Mesh, chains: list[SeamChain]) -> list[SeamChain]:
    return sorted(chains, key=lambda c: (-round(c.length(mesh), 9), c.vertices))


def _best_split(mesh: Mesh, patch: Patch, candidates: list[SeamChain]
                ) -> Optional[tuple[SeamChain, list[Patch], float]]:
    best = None
    for loop in candidates:  # candidates arrive sorted by leading vertex
        if not is_internal(mesh, patch, loop):
            continue
        parts = split_patch(mesh, patch, loop)
        if len(parts) != 2:
            continue
        score = min(parts[0].area, parts[1].area) / max(parts[0].area, parts[1].area)
        if best is None or _greater(score, best[2]):
            best = (loop, parts, score)
    return best


def canonical_order(mesh: Mesh, chains: ChainSet) -> OrderedChains:
    """Deterministic chain sequence.

    Separating loops come first, each chosen as the most balanced split of the
    largest remaining patch.  Loops that never split a patch (handles, loops on
    a patch boundary) follow by decreasing 3D length, then open chains by
    decreasing 3D length.  Ties go to the smallest leading vertex.
    """
    loops = sorted(chains.loops, key=lambda c: c.vertices)
    open_chains = chains.open_chains
    patches = connected_components(mesh)
    sequence: list[SeamChain] = []
    provenance: list[SplitRecord] = []

    while patches:
        patches.sort(key=lambda p: p.min_face)
        target = patches[0]
        for p in patches[1:]:
            if _greater(p.area, target.area):
                target = p
        best = _best_split(mesh, target, loops)
        patches.remove(target)
        if best is None:
            continue
        loop, parts, score = best
        provenance.append(SplitRecord(len(sequence), target.area, (parts[0].area, parts[1].area), score))
        sequence.append(loop)
        patches.extend(parts)
        loops.remove(loop)

    if loops:
        log.debug("%d loop(s) never separated a patch; appended by length", len(loops))
    sequence.extend(_by_length(mesh, loops))
    sequence.extend(_by_length(mesh, open_chains))
    return OrderedChains(tuple(sequence), tuple(provenance))
